fn main() {
    std::process::exit(choreo::run_cli());
}

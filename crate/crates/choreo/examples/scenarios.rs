fn main() {
    let mut failures = 0;
    for id in choreo::teastore::scenario_ids() {
        let spec = choreo::teastore::load_scenario(id).unwrap();
        match choreo::teastore::run_scenario(&spec, 7) {
            Ok(report) => {
                if report.passed() {
                    println!("PASS {id}");
                } else {
                    failures += 1;
                    println!("FAIL {id}: {:?}", report.failures());
                    println!("  status: {:?}", report.outcome.status);
                    for ev in report.outcome.trace.iter().take(60) {
                        println!("  {:?} {} {:?} {:?}", ev.kind, ev.role, ev.label, ev.rule_id);
                    }
                }
            }
            Err(e) => {
                failures += 1;
                println!("ERROR {id}: {e}");
            }
        }
    }
    std::process::exit(if failures > 0 { 1 } else { 0 });
}

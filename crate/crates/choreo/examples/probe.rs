use std::collections::BTreeSet;
use std::time::Instant;

fn main() {
    // 1. login counts across seeds for the full-power scenario
    let spec = choreo::teastore::load_scenario("full-power").unwrap();
    let mut counts = BTreeSet::new();
    for seed in 0..60 {
        let report = choreo::teastore::run_scenario(&spec, seed).unwrap();
        assert!(report.outcome.status.is_completed(), "seed {seed}: {:?}", report.outcome.status);
        counts.insert(report.outcome.service_calls("login"));
    }
    println!("login counts across 60 seeds: {counts:?}");

    // 2. exhaustive exploration of barebone
    let t = Instant::now();
    let (program, config) = choreo::teastore::scenario_config(
        &choreo::teastore::load_scenario("barebone").unwrap(), 0).unwrap();
    let projections = choreo::project::project_program(&program);
    let report = choreo::explore::explore(&projections, &config, choreo::explore::Bounds::default());
    println!("barebone explore: {} in {:?}", report.summary(), t.elapsed());
    assert!(report.aborts.is_empty());

    // 3. equivalence on barebone
    let t = Instant::now();
    let eq = choreo::explore::check_equivalence(&program, &config, choreo::explore::Bounds::default());
    println!("barebone equivalence: {} in {:?}", eq.summary(), t.elapsed());

    // 4. exploration of adaptable + all rules (the big one)
    let t = Instant::now();
    let spec = choreo::teastore::load_scenario("full-power").unwrap();
    let (program, config) = choreo::teastore::scenario_config(&spec, 0).unwrap();
    let projections = choreo::project::project_program(&program);
    let report = choreo::explore::explore(&projections, &config, choreo::explore::Bounds::default());
    println!("full-power explore: {} in {:?}", report.summary(), t.elapsed());
    println!("  login call-count set: {:?}", report.call_counts("login"));
    println!("  aborts: {}", report.aborts.len());
    if let Some(a) = report.aborts.first() { println!("  first abort: {:?}", a.reason); }
}

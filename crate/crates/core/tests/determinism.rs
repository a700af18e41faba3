use depvac::experiments::{run_testbed, with_jobs, Budget, Method, TestbedConfig};

#[test]
fn testbed_is_independent_of_thread_count() {
    let cfg = TestbedConfig {
        subsample: Some(6),
        seed: 11,
    };
    let budget = Budget {
        cycles: 300.0,
        replications: 2,
        batches: 20,
        ..Budget::default()
    };
    let csv = |jobs| {
        with_jobs(Some(jobs), || run_testbed(&cfg, &budget, Method::default()))
            .unwrap()
            .tables()
            .iter()
            .map(|t| t.to_csv().unwrap())
            .collect::<Vec<_>>()
    };
    let serial = csv(1);
    assert_eq!(serial, csv(3));
    assert_eq!(serial.len(), 3);
}

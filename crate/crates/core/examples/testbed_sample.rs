//! Run a small seeded sample of the test bed and print the error bins.
//!
//! The budget here is tiny, so the errors are dominated by simulation noise.

use depvac::experiments::{run_testbed, Budget, Method, TestbedConfig};

fn main() -> depvac::Result<()> {
    let cfg = TestbedConfig {
        subsample: Some(4),
        seed: 3,
    };
    let budget = Budget {
        cycles: 2e3,
        replications: 2,
        ..Budget::default()
    };
    let report = run_testbed(&cfg, &budget, Method::default());
    for o in report.succeeded() {
        println!("instance {:>3}: delta {:.3}% +- {:.3}", o.point.index, o.delta, o.delta_half_width);
    }
    for table in report.tables().iter().filter(|t| t.name == "testbed_bins") {
        print!("{}", table.to_csv()?);
    }
    Ok(())
}

//! Simulate the layered model and compare against the approximation.

use depvac::experiments::{run_instance, Method};
use depvac::repair::{LayeredSpec, MachineSpec};
use depvac::sim::SimConfig;
use depvac::DistSpec;

fn main() -> depvac::Result<()> {
    let machine = |arrival_rate, repair| -> depvac::Result<MachineSpec> {
        Ok(MachineSpec {
            arrival_rate,
            service: DistSpec::exponential(1.0)?,
            breakdown_rate: 1.0,
            repair,
        })
    };
    let spec = LayeredSpec {
        machines: [
            machine(0.2, DistSpec::hyper2_balanced(1.0, 4.0)?)?,
            machine(0.1, DistSpec::exponential(2.0)?)?,
        ],
    };
    let cfg = SimConfig {
        warmup: 1e3,
        horizon: 2e5,
        replications: 4,
        seed: 42,
        ..SimConfig::default()
    };
    let report = run_instance(&spec, Method::default(), &cfg)?;
    print!("{}", report.table().to_csv()?);
    Ok(())
}

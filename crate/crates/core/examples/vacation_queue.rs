//! Queue length of an M/G/1 queue whose server takes one-dependent vacations.

use depvac::dependence::DependencePair;
use depvac::vacation::{VacQueueSpec, VacationAnalysis};
use depvac::DistSpec;

fn main() -> depvac::Result<()> {
    let pair = DependencePair::phase_compound(2.0)?;
    let spec = VacQueueSpec::new(3.0, DistSpec::exponential(5.0)?, 1.0 / 3.0, pair)?;
    let stability = spec.check_stable()?;
    println!("effective load {:.4}, availability {:.4}", stability.effective_load, stability.availability);

    let analysis = VacationAnalysis::new(&spec)?;
    let summary = analysis.summary(8)?;
    println!("mean queue length {:.6}", summary.mean);
    println!("P(server up) {:.6}", summary.p_up);
    for (n, p) in summary.pmf.iter().enumerate() {
        println!("P(L = {n}) = {p:.6}");
    }
    Ok(())
}

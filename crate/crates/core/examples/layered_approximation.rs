//! Approximate a queue of the two-layered machine-repair model by a vacation queue.

use depvac::repair::{
    approximate_queue, downtime_stats, independent_baseline, moment_match, LayeredSpec, Machine, MachineSpec,
    MatchPolicy,
};
use depvac::vacation::VacationAnalysis;
use depvac::DistSpec;

fn main() -> depvac::Result<()> {
    let one = DistSpec::exponential(1.0)?;
    let machine = |arrival_rate| MachineSpec {
        arrival_rate,
        service: one,
        breakdown_rate: 1.0,
        repair: one,
    };
    let spec = LayeredSpec {
        machines: [machine(0.25), machine(0.0)],
    };

    let stats = downtime_stats(&spec, Machine::First)?;
    println!(
        "downtime mean {:.6}, second moment {:.6}, lag-1 covariance {:.6}",
        stats.mean, stats.second_moment, stats.covariance
    );
    let matched = moment_match(&stats, MatchPolicy::default(), 1.0)?;
    println!(
        "chi'(0) {:.6}, chi''(0) {:.6}, g'(0) {:.6}, g''(0) {:.6}, fell back: {}",
        matched.chi1, matched.chi2, matched.g1, matched.g2, matched.fell_back
    );

    let ours = VacationAnalysis::new(&approximate_queue(&spec, Machine::First)?)?;
    let baseline = VacationAnalysis::new(&independent_baseline(&spec, Machine::First)?)?;
    println!("mean queue length: dependent {:.6}, independent {:.6}", ours.mean_l(), baseline.mean_l());
    Ok(())
}

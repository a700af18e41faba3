//! One layered instance: approximation, independent baseline and simulation.

use num_complex::Complex64;
use serde::Serialize;

use super::config::Budget;
use super::{num, Table};
use crate::dependence::{DowntimeStats, IncrementForm};
use crate::error::{Error, Result};
use crate::repair::{
    downtime_stats, independent_baseline_with, moment_match, LayeredSpec, Machine, MatchPolicy,
};
use crate::sim::layered::{simulate_layered, LayeredSimResult};
use crate::sim::{relative_error, DowntimeEstimate, Estimate, SimConfig};
use crate::vacation::{VacQueueSpec, VacationAnalysis};

/// How downtime statistics are turned into a dependence pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Method {
    pub policy: MatchPolicy,
    pub form: IncrementForm,
}

/// Where the downtime statistics came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsSource {
    ClosedForm,
    Simulated,
}

impl StatsSource {
    pub fn label(self) -> &'static str {
        match self {
            StatsSource::ClosedForm => "closed_form",
            StatsSource::Simulated => "simulated",
        }
    }
}

/// Analytic side of one queue: our approximation and the independent baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QueueApprox {
    pub correlation: f64,
    pub fell_back: bool,
    pub approx_mean: f64,
    pub approx_p0: f64,
    pub baseline_mean: f64,
    pub baseline_p0: f64,
}

/// Statistics usable for matching from a simulated estimate; a slightly
/// negative sample covariance is noise around zero and is clamped.
pub fn stats_from_estimate(est: &DowntimeEstimate) -> DowntimeStats {
    DowntimeStats::from_covariance(est.mean.value, est.second_moment.value, est.covariance.value.max(0.0))
}

fn solve(spec: &VacQueueSpec) -> Result<(f64, f64)> {
    let analysis = VacationAnalysis::new(spec)?;
    let p0 = analysis.pgf_l(Complex64::new(0.0, 0.0))?.re;
    Ok((analysis.mean_l(), p0))
}

/// Approximate and baseline queue of `machine` for the given downtime statistics.
pub fn approximate(spec: &LayeredSpec, machine: Machine, stats: &DowntimeStats, method: Method) -> Result<QueueApprox> {
    let own = spec.machine(machine);
    let matched = moment_match(stats, method.policy, own.repair.moments().scv)?;
    let ours = VacQueueSpec::new(own.arrival_rate, own.service, own.breakdown_rate, matched.pair(method.form)?)?;
    let (approx_mean, approx_p0) = solve(&ours)?;
    let (baseline_mean, baseline_p0) = solve(&independent_baseline_with(spec, machine, stats)?)?;
    Ok(QueueApprox {
        correlation: stats.correlation,
        fell_back: matched.fell_back,
        approx_mean,
        approx_p0,
        baseline_mean,
        baseline_p0,
    })
}

/// Machine cycle length (uptime plus a pessimistic downtime), the time
/// unit of simulation budgets.
pub fn cycle_length(spec: &LayeredSpec) -> f64 {
    let repairs: f64 = spec.machines.iter().map(|m| m.repair.mean()).sum();
    spec.machines
        .iter()
        .filter(|m| m.breakdown_rate > 0.0)
        .map(|m| 1.0 / m.breakdown_rate + repairs)
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueueRecord {
    /// 1 or 2.
    pub machine: usize,
    pub arrival_rate: f64,
    pub source: StatsSource,
    pub downtime_mean: f64,
    pub downtime_second_moment: f64,
    pub approx: QueueApprox,
    pub sim_mean: Estimate,
    pub sim_p0: Estimate,
    /// Relative error of our mean in percent, with its half-width.
    pub delta: f64,
    pub delta_half_width: f64,
    pub baseline_delta: f64,
    pub seed: u64,
    /// Simulated time per replication.
    pub horizon: f64,
}

impl QueueRecord {
    /// Relative excess of the approximate `P(L = 0)` over the simulated one, in percent.
    pub fn p0_excess(&self) -> f64 {
        100.0 * (self.approx.approx_p0 - self.sim_p0.value) / self.sim_p0.value
    }

    /// Our mean minus the simulated mean, relative, in percent.
    pub fn signed_delta(&self) -> f64 {
        100.0 * (self.approx.approx_mean - self.sim_mean.value) / self.sim_mean.value
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceReport {
    pub records: Vec<QueueRecord>,
    pub sim: LayeredSimResult,
}

pub const INSTANCE_HEADER: [&str; 21] = [
    "machine",
    "arrival_rate",
    "stats_source",
    "downtime_mean",
    "downtime_second_moment",
    "correlation",
    "fell_back",
    "approx_mean",
    "approx_p0",
    "baseline_mean",
    "sim_mean",
    "sim_mean_half_width",
    "sim_p0",
    "sim_p0_half_width",
    "delta_percent",
    "delta_half_width",
    "baseline_delta_percent",
    "p0_excess_percent",
    "signed_delta_percent",
    "seed",
    "horizon",
];

impl InstanceReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new("instance", INSTANCE_HEADER.to_vec());
        for r in &self.records {
            t.push(vec![
                r.machine.to_string(),
                num(r.arrival_rate),
                r.source.label().into(),
                num(r.downtime_mean),
                num(r.downtime_second_moment),
                num(r.approx.correlation),
                r.approx.fell_back.to_string(),
                num(r.approx.approx_mean),
                num(r.approx.approx_p0),
                num(r.approx.baseline_mean),
                num(r.sim_mean.value),
                num(r.sim_mean.half_width),
                num(r.sim_p0.value),
                num(r.sim_p0.half_width),
                num(r.delta),
                num(r.delta_half_width),
                num(r.baseline_delta),
                num(r.p0_excess()),
                num(r.signed_delta()),
                r.seed.to_string(),
                num(r.horizon),
            ]);
        }
        t
    }

    pub fn record(&self, machine: Machine) -> Option<&QueueRecord> {
        self.records.iter().find(|r| r.machine == machine.index() + 1)
    }
}

/// Analyse every queue with arrivals, simulate the network and compare.
///
/// With exponential repairs the closed-form statistics are used and an
/// unstable approximation is refused before simulating; otherwise the
/// statistics are taken from the same simulation run.
pub fn run_instance(spec: &LayeredSpec, method: Method, sim: &SimConfig) -> Result<InstanceReport> {
    spec.validate()?;
    let machines: Vec<Machine> = [Machine::First, Machine::Second]
        .into_iter()
        .filter(|&m| spec.machine(m).arrival_rate > 0.0)
        .collect();
    if machines.is_empty() {
        return Err(Error::InvalidParameter("no queue has arrivals".into()));
    }
    let closed_form = spec.has_exponential_repairs();
    let mut analytic = Vec::new();
    if closed_form {
        for &m in &machines {
            let stats = downtime_stats(spec, m)?;
            analytic.push((stats, approximate(spec, m, &stats, method)?));
        }
    }
    let result = simulate_layered(spec, sim)?;
    let mut records = Vec::with_capacity(machines.len());
    for (k, &m) in machines.iter().enumerate() {
        let (stats, approx) = if closed_form {
            analytic[k]
        } else {
            let stats = stats_from_estimate(&result.downtimes[m.index()]);
            (stats, approximate(spec, m, &stats, method)?)
        };
        let q = &result.queues[m.index()];
        let delta = relative_error(approx.approx_mean, &q.mean)?;
        let baseline = relative_error(approx.baseline_mean, &q.mean)?;
        records.push(QueueRecord {
            machine: m.index() + 1,
            arrival_rate: spec.machine(m).arrival_rate,
            source: if closed_form {
                StatsSource::ClosedForm
            } else {
                StatsSource::Simulated
            },
            downtime_mean: stats.mean,
            downtime_second_moment: stats.second_moment,
            approx,
            sim_mean: q.mean,
            sim_p0: q.pmf[0],
            delta: delta.percent,
            delta_half_width: delta.half_width,
            baseline_delta: baseline.percent,
            seed: sim.seed,
            horizon: sim.horizon,
        });
    }
    Ok(InstanceReport { records, sim: result })
}

/// [`run_instance`] with a pilot horizon from `budget`; when the budget sets
/// a precision target that the pilot misses, the run is repeated with a
/// horizon grown by the squared ratio of achieved to target half-width.
pub fn run_with_budget(spec: &LayeredSpec, method: Method, budget: &Budget, seed: u64) -> Result<InstanceReport> {
    let arrival_rate = spec.machines[0].arrival_rate.max(spec.machines[1].arrival_rate);
    let pilot = budget.sim_config(arrival_rate, cycle_length(spec), seed);
    let report = run_instance(spec, method, &pilot)?;
    let Some(target) = budget.precision else {
        return Ok(report);
    };
    let achieved = report
        .records
        .iter()
        .map(|r| r.sim_mean.half_width / r.sim_mean.value)
        .fold(0.0, f64::max);
    if achieved <= target {
        return Ok(report);
    }
    let growth = (1.1 * (achieved / target).powi(2)).min(budget.max_growth);
    run_instance(spec, method, &budget.with_horizon(growth * pilot.horizon, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistSpec;
    use crate::repair::MachineSpec;

    fn golden(lambda1: f64) -> LayeredSpec {
        let one = DistSpec::exponential(1.0).unwrap();
        let m = |arrival_rate| MachineSpec {
            arrival_rate,
            service: one,
            breakdown_rate: 1.0,
            repair: one,
        };
        LayeredSpec {
            machines: [m(lambda1), m(0.0)],
        }
    }

    fn quick() -> SimConfig {
        SimConfig {
            warmup: 100.0,
            horizon: 2e4,
            replications: 2,
            seed: 9,
            batches: 20,
            levels: 8,
        }
    }

    #[test]
    fn record_is_reproducible() {
        let a = run_instance(&golden(0.25), Method::default(), &quick()).unwrap();
        let b = run_instance(&golden(0.25), Method::default(), &quick()).unwrap();
        assert_eq!(a.table().to_csv().unwrap(), b.table().to_csv().unwrap());
        assert_eq!(a.records.len(), 1);
        let r = a.record(Machine::First).unwrap();
        assert!((r.approx.approx_mean - 2.2056315).abs() < 1e-6, "{}", r.approx.approx_mean);
        assert!((r.approx.baseline_mean - 2.2).abs() < 1e-6, "{}", r.approx.baseline_mean);
        assert_eq!(r.seed, 9);
    }

    #[test]
    fn refuses_unstable_instance() {
        let err = run_instance(&golden(0.45), Method::default(), &quick()).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }), "{err}");
    }

    #[test]
    fn needs_arrivals() {
        assert!(run_instance(&golden(0.0), Method::default(), &quick()).is_err());
    }

    #[test]
    fn precision_target_grows_the_horizon() {
        let mut budget = Budget {
            cycles: 2000.0,
            replications: 2,
            batches: 20,
            ..Budget::default()
        };
        let pilot = run_with_budget(&golden(0.25), Method::default(), &budget, 3).unwrap();
        assert_eq!(pilot.records[0].horizon, 8000.0);
        budget.precision = Some(0.01);
        budget.max_growth = 50.0;
        let grown = run_with_budget(&golden(0.25), Method::default(), &budget, 3).unwrap();
        let r = &grown.records[0];
        assert!(r.horizon > 8000.0 && r.horizon <= 50.0 * 8000.0);
        assert!(r.sim_mean.half_width < pilot.records[0].sim_mean.half_width);
    }

    #[test]
    fn cycle_length_covers_both_repairs() {
        assert_eq!(cycle_length(&golden(0.25)), 3.0);
    }
}

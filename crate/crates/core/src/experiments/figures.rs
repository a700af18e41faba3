//! Parameter sweeps behind the figures, one CSV table per figure.

use rayon::prelude::*;

use super::config::Budget;
use super::instance::{run_with_budget, Method};
use super::{num, Table};
use crate::dependence::DependencePair;
use crate::dist::DistSpec;
use crate::error::Result;
use crate::repair::{LayeredSpec, Machine, MachineSpec};
use crate::vacation::{VacQueueSpec, VacationAnalysis};

/// Arrival rate, service and breakdown rate of the single-server dependence study.
pub const IMPACT_ARRIVAL_RATE: f64 = 3.0;
pub const IMPACT_SERVICE_RATE: f64 = 5.0;
pub const IMPACT_BREAKDOWN_RATE: f64 = 1.0 / 3.0;
/// Phase rate standing in for the independent end of the sweep.
pub const NEAR_INDEPENDENT_RATE: f64 = 1e6;

/// Mean queue length with phase-compound downtimes of rate `delta`, and
/// with independent downtimes of the same (exponential) marginal.
pub fn impact_means(delta: f64) -> Result<(f64, f64)> {
    let service = DistSpec::exponential(IMPACT_SERVICE_RATE)?;
    let mean = |pair| -> Result<f64> {
        let spec = VacQueueSpec::new(IMPACT_ARRIVAL_RATE, service, IMPACT_BREAKDOWN_RATE, pair)?;
        Ok(VacationAnalysis::new(&spec)?.mean_l())
    };
    let dependent = mean(DependencePair::phase_compound(delta)?)?;
    let independent = mean(DependencePair::independent(DistSpec::exponential(delta - 1.0)?)?)?;
    Ok((dependent, independent))
}

/// Phase rates from just above the stability edge at 1.5 out to 10, denser
/// near the edge, followed by the near-independent end.
pub fn impact_rates(points: usize) -> Vec<f64> {
    let n = points.max(2) - 1;
    let mut rates: Vec<f64> = (0..n)
        .map(|k| {
            let u = k as f64 / (n - 1).max(1) as f64;
            1.5 + 1e-3 * (8.5e3f64).powf(u)
        })
        .collect();
    rates.push(NEAR_INDEPENDENT_RATE);
    rates
}

/// Relative increase of the mean queue length caused by dependence.
pub fn figure3(points: usize) -> Result<Table> {
    let rows: Vec<Vec<String>> = impact_rates(points)
        .into_par_iter()
        .map(|delta| {
            let (dep, indep) = impact_means(delta)?;
            Ok(vec![
                num(delta),
                num(1.0 / delta),
                num(dep),
                num(indep),
                num(100.0 * (dep - indep) / indep),
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(
        "figure3",
        vec!["phase_rate", "correlation", "mean_dependent", "mean_independent", "delta_percent"],
    );
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

const SWEEP_HEADER: [&str; 12] = [
    "correlation",
    "approx_mean",
    "baseline_mean",
    "sim_mean",
    "sim_mean_half_width",
    "delta_percent",
    "delta_half_width",
    "baseline_delta_percent",
    "signed_delta_percent",
    "fell_back",
    "seed",
    "error",
];

fn exp(rate: f64) -> DistSpec {
    DistSpec::Exponential { rate }
}

fn machine(arrival_rate: f64, service: DistSpec, breakdown_rate: f64, repair: DistSpec) -> MachineSpec {
    MachineSpec {
        arrival_rate,
        service,
        breakdown_rate,
        repair,
    }
}

/// Simulate and approximate queue 1 of `spec(x)` for every `x`.
fn sweep(
    name: &str,
    x_name: &'static str,
    xs: &[f64],
    spec: impl Fn(f64) -> Result<LayeredSpec> + Sync,
    budget: &Budget,
    method: Method,
) -> Table {
    let rows: Vec<Vec<String>> = xs
        .par_iter()
        .enumerate()
        .map(|(k, &x)| {
            let seed = budget.seed.wrapping_add(k as u64);
            let record = spec(x).and_then(|s| run_with_budget(&s, method, budget, seed));
            let mut row = vec![num(x)];
            match record {
                Ok(report) => {
                    let r = report.record(Machine::First).expect("queue 1 has arrivals");
                    row.extend([
                        num(r.approx.correlation),
                        num(r.approx.approx_mean),
                        num(r.approx.baseline_mean),
                        num(r.sim_mean.value),
                        num(r.sim_mean.half_width),
                        num(r.delta),
                        num(r.delta_half_width),
                        num(r.baseline_delta),
                        num(r.signed_delta()),
                        r.approx.fell_back.to_string(),
                        seed.to_string(),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    row.extend((0..9).map(|_| num(f64::NAN)));
                    row.extend(["false".into(), seed.to_string(), e.to_string()]);
                }
            }
            row
        })
        .collect();
    let mut header = vec![x_name];
    header.extend(SWEEP_HEADER);
    let mut t = Table::new(name, header);
    rows.into_iter().for_each(|r| t.push(r));
    t
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// `n` points `hi * k / n`, `k = 1..=n`.
fn upto(hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| hi * k as f64 / n as f64).collect()
}

/// Arrival rate sweep at constant nominal load 0.3.
pub fn figure4_spec(lambda1: f64) -> Result<LayeredSpec> {
    Ok(LayeredSpec {
        machines: [
            machine(lambda1, DistSpec::exponential(10.0 * lambda1 / 3.0)?, 1.0, exp(1.0)),
            machine(0.0, exp(1.0), 1.0, exp(1.0)),
        ],
    })
}

pub fn figure4(points: usize, budget: &Budget, method: Method) -> Table {
    sweep("figure4", "arrival_rate", &upto(3.0, points), figure4_spec, budget, method)
}

/// Breakdown rate of the second machine, swept on a log scale.
pub fn figure5_spec(sigma2: f64) -> Result<LayeredSpec> {
    Ok(LayeredSpec {
        machines: [
            machine(0.25, exp(1.0), 1.0, exp(1.0)),
            machine(0.0, exp(1.0), sigma2, exp(1.0)),
        ],
    })
}

pub fn figure5_rates(points: usize) -> Vec<f64> {
    linspace(-2.0, 2.0, points).into_iter().map(|e| 10f64.powf(e)).collect()
}

/// Also reports the correlation rescaled to the largest error of the sweep.
pub fn figure5(points: usize, budget: &Budget, method: Method) -> Table {
    let mut t = sweep("figure5", "sigma2", &figure5_rates(points), figure5_spec, budget, method);
    let r = t.values("correlation");
    let d = t.values("delta_percent");
    let max = |v: &[f64]| v.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max);
    let scale = if max(&r) > 0.0 { max(&d) / max(&r) } else { 0.0 };
    t.header.push("correlation_scaled");
    for (row, r) in t.rows.iter_mut().zip(r) {
        row.push(num(r * scale));
    }
    t
}

/// Both repair times balanced H2 with mean 1 and the given SCV.
pub fn figure6_spec(scv: f64) -> Result<LayeredSpec> {
    let repair = if scv == 1.0 {
        exp(1.0)
    } else {
        DistSpec::hyper2_balanced(1.0, scv)?
    };
    Ok(LayeredSpec {
        machines: [
            machine(0.25, exp(1.0), 1.0, repair),
            machine(0.0, exp(1.0), 1.0, repair),
        ],
    })
}

pub fn figure6(points: usize, budget: &Budget, method: Method) -> Table {
    sweep("figure6", "repair_scv", &linspace(1.0, 8.0, points), figure6_spec, budget, method)
}

/// Rare, long outages of the second machine and frequent, mostly short
/// breakdowns of the first; nominal load fixed at 1/500.
pub fn figure7_spec(lambda1: f64) -> Result<LayeredSpec> {
    Ok(LayeredSpec {
        machines: [
            machine(
                lambda1,
                DistSpec::exponential(500.0 * lambda1)?,
                100.0,
                DistSpec::hyper2(0.975, 100.0, 0.01)?,
            ),
            machine(0.0, exp(1.0), 0.02, exp(0.01)),
        ],
    })
}

pub fn figure7(points: usize, budget: &Budget, method: Method) -> Table {
    sweep("figure7", "arrival_rate", &upto(0.01, points), figure7_spec, budget, method)
}

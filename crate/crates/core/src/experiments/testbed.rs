//! The 675-instance parameter grid and its error report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Budget, TestbedConfig};
use super::instance::{run_with_budget, Method};
use super::{num, Table};
use crate::dist::DistSpec;
use crate::error::Result;
use crate::repair::{downtime_stats, LayeredSpec, Machine, MachineSpec};

pub const LOADS: [f64; 3] = [0.25, 0.5, 0.75];
pub const SCALES: [f64; 3] = [0.1, 1.0, 10.0];
pub const RATIOS: [(f64, f64); 5] = [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (1.0, 5.0), (5.0, 1.0)];
pub const GRID_SIZE: usize = LOADS.len() * SCALES.len() * RATIOS.len() * SCALES.len() * RATIOS.len();

/// Upper edges of the error bins in percent; the last bin is open.
pub const BIN_EDGES: [f64; 4] = [0.01, 0.1, 1.0, 5.0];
pub const BIN_LABELS: [&str; 5] = ["0-0.01", "0.01-0.1", "0.1-1", "1-5", ">5"];

/// One grid point: breakdown rates `sigma_scale * sigma_ratio`, repair
/// rates `nu_scale * nu_ratio`, exponential service with mean 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub load: f64,
    pub sigma_scale: f64,
    pub sigma_ratio: (f64, f64),
    pub nu_scale: f64,
    pub nu_ratio: (f64, f64),
}

impl GridPoint {
    /// Grid point `index` in load, sigma scale, sigma ratio, nu scale, nu ratio order.
    pub fn at(index: usize) -> GridPoint {
        assert!(index < GRID_SIZE, "grid index {index} out of range");
        let mut i = index;
        let mut digit = |n: usize| {
            let d = i % n;
            i /= n;
            d
        };
        let nu_ratio = RATIOS[digit(RATIOS.len())];
        let nu_scale = SCALES[digit(SCALES.len())];
        let sigma_ratio = RATIOS[digit(RATIOS.len())];
        let sigma_scale = SCALES[digit(SCALES.len())];
        let load = LOADS[digit(LOADS.len())];
        GridPoint {
            index,
            load,
            sigma_scale,
            sigma_ratio,
            nu_scale,
            nu_ratio,
        }
    }

    pub fn all() -> Vec<GridPoint> {
        (0..GRID_SIZE).map(GridPoint::at).collect()
    }

    /// The layered instance. Machine 1's arrival rate is `load` times its
    /// availability, so `load` is the utilisation of the time the machine is up;
    /// the second queue is empty.
    pub fn spec(&self) -> Result<LayeredSpec> {
        let service = DistSpec::exponential(1.0)?;
        let machine = |sigma: f64, nu: f64| -> Result<MachineSpec> {
            Ok(MachineSpec {
                arrival_rate: 0.0,
                service,
                breakdown_rate: sigma,
                repair: DistSpec::exponential(nu)?,
            })
        };
        let mut spec = LayeredSpec {
            machines: [
                machine(self.sigma_scale * self.sigma_ratio.0, self.nu_scale * self.nu_ratio.0)?,
                machine(self.sigma_scale * self.sigma_ratio.1, self.nu_scale * self.nu_ratio.1)?,
            ],
        };
        let d = downtime_stats(&spec, Machine::First)?;
        let availability = 1.0 / (1.0 + spec.machines[0].breakdown_rate * d.mean);
        spec.machines[0].arrival_rate = self.load * availability;
        Ok(spec)
    }
}

/// Indices of the instances to run: all of them, or a seeded sample in grid order.
pub fn select(cfg: &TestbedConfig) -> Vec<usize> {
    match cfg.subsample {
        None => (0..GRID_SIZE).collect(),
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut idx = rand::seq::index::sample(&mut rng, GRID_SIZE, n.min(GRID_SIZE)).into_vec();
            idx.sort_unstable();
            idx
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestbedOutcome {
    pub point: GridPoint,
    pub seed: u64,
    pub arrival_rate: f64,
    pub correlation: f64,
    pub approx_mean: f64,
    pub sim_mean: f64,
    pub sim_half_width: f64,
    pub delta: f64,
    pub delta_half_width: f64,
    pub baseline_delta: f64,
    pub error: Option<String>,
}

/// Error bins and grouped mean errors over the instances that succeeded.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBinReport {
    pub outcomes: Vec<TestbedOutcome>,
    pub bins: [usize; 5],
    pub failures: usize,
}

pub fn bin_of(delta: f64) -> usize {
    BIN_EDGES.iter().position(|&e| delta < e).unwrap_or(BIN_EDGES.len())
}

fn run_point(point: GridPoint, budget: &Budget, method: Method) -> TestbedOutcome {
    let seed = budget.seed.wrapping_add(point.index as u64);
    let mut out = TestbedOutcome {
        point,
        seed,
        arrival_rate: f64::NAN,
        correlation: f64::NAN,
        approx_mean: f64::NAN,
        sim_mean: f64::NAN,
        sim_half_width: f64::NAN,
        delta: f64::NAN,
        delta_half_width: f64::NAN,
        baseline_delta: f64::NAN,
        error: None,
    };
    let record = point.spec().and_then(|spec| {
        out.arrival_rate = spec.machines[0].arrival_rate;
        run_with_budget(&spec, method, budget, seed)
    });
    match record {
        Ok(report) => {
            let r = &report.records[0];
            out.correlation = r.approx.correlation;
            out.approx_mean = r.approx.approx_mean;
            out.sim_mean = r.sim_mean.value;
            out.sim_half_width = r.sim_mean.half_width;
            out.delta = r.delta;
            out.delta_half_width = r.delta_half_width;
            out.baseline_delta = r.baseline_delta;
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Run the selected instances in parallel; failures are recorded per instance.
pub fn run_testbed(cfg: &TestbedConfig, budget: &Budget, method: Method) -> ErrorBinReport {
    let outcomes: Vec<TestbedOutcome> = select(cfg)
        .into_par_iter()
        .map(|i| run_point(GridPoint::at(i), budget, method))
        .collect();
    let mut bins = [0; 5];
    let mut failures = 0;
    for o in &outcomes {
        match o.error {
            None => bins[bin_of(o.delta)] += 1,
            Some(_) => failures += 1,
        }
    }
    ErrorBinReport {
        outcomes,
        bins,
        failures,
    }
}

fn ratio_label((a, b): (f64, f64)) -> String {
    format!("({a},{b})")
}

impl ErrorBinReport {
    pub fn succeeded(&self) -> impl Iterator<Item = &TestbedOutcome> {
        self.outcomes.iter().filter(|o| o.error.is_none())
    }

    pub fn median_delta(&self) -> f64 {
        let mut d: Vec<f64> = self.succeeded().map(|o| o.delta).collect();
        if d.is_empty() {
            return f64::NAN;
        }
        d.sort_by(f64::total_cmp);
        let n = d.len();
        if n % 2 == 1 {
            d[n / 2]
        } else {
            0.5 * (d[n / 2 - 1] + d[n / 2])
        }
    }

    /// Mean error per level of each grid factor, as `(factor, level, mean, count)`.
    pub fn grouped_means(&self) -> Vec<(&'static str, String, f64, usize)> {
        let factors: [(&'static str, Vec<String>, fn(&GridPoint) -> String); 5] = [
            ("load", LOADS.iter().map(|x| x.to_string()).collect(), |p| p.load.to_string()),
            ("sigma_scale", SCALES.iter().map(|x| x.to_string()).collect(), |p| p.sigma_scale.to_string()),
            ("nu_scale", SCALES.iter().map(|x| x.to_string()).collect(), |p| p.nu_scale.to_string()),
            ("sigma_ratio", RATIOS.iter().map(|&r| ratio_label(r)).collect(), |p| ratio_label(p.sigma_ratio)),
            ("nu_ratio", RATIOS.iter().map(|&r| ratio_label(r)).collect(), |p| ratio_label(p.nu_ratio)),
        ];
        let mut rows = Vec::new();
        for (name, levels, key) in factors {
            for level in levels {
                let d: Vec<f64> = self.succeeded().filter(|o| key(&o.point) == level).map(|o| o.delta).collect();
                let mean = if d.is_empty() {
                    f64::NAN
                } else {
                    d.iter().sum::<f64>() / d.len() as f64
                };
                rows.push((name, level, mean, d.len()));
            }
        }
        rows
    }

    pub fn tables(&self) -> Vec<Table> {
        let mut inst = Table::new(
            "testbed_instances",
            vec![
                "index",
                "load",
                "sigma_scale",
                "sigma_ratio",
                "nu_scale",
                "nu_ratio",
                "arrival_rate",
                "correlation",
                "approx_mean",
                "sim_mean",
                "sim_mean_half_width",
                "delta_percent",
                "delta_half_width",
                "baseline_delta_percent",
                "seed",
                "error",
            ],
        );
        for o in &self.outcomes {
            let p = &o.point;
            inst.push(vec![
                p.index.to_string(),
                num(p.load),
                num(p.sigma_scale),
                ratio_label(p.sigma_ratio),
                num(p.nu_scale),
                ratio_label(p.nu_ratio),
                num(o.arrival_rate),
                num(o.correlation),
                num(o.approx_mean),
                num(o.sim_mean),
                num(o.sim_half_width),
                num(o.delta),
                num(o.delta_half_width),
                num(o.baseline_delta),
                o.seed.to_string(),
                o.error.clone().unwrap_or_default(),
            ]);
        }
        let ok = self.outcomes.len() - self.failures;
        let mut bins = Table::new("testbed_bins", vec!["bin_percent", "count", "fraction"]);
        for (label, &count) in BIN_LABELS.iter().zip(&self.bins) {
            bins.push(vec![label.to_string(), count.to_string(), num(count as f64 / ok.max(1) as f64)]);
        }
        bins.push(vec!["failed".into(), self.failures.to_string(), num(f64::NAN)]);
        let mut groups = Table::new("testbed_groups", vec!["factor", "level", "mean_delta_percent", "count"]);
        for (factor, level, mean, count) in self.grouped_means() {
            groups.push(vec![factor.into(), level, num(mean), count.to_string()]);
        }
        vec![inst, bins, groups]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_675_distinct_points_in_fixed_order() {
        let all = GridPoint::all();
        assert_eq!(all.len(), 675);
        assert_eq!(GRID_SIZE, 675);
        let first = all[0];
        assert_eq!((first.load, first.sigma_scale, first.nu_scale), (0.25, 0.1, 0.1));
        assert_eq!(all[1].nu_ratio, (1.0, 2.0));
        assert_eq!(all[5].nu_scale, 1.0);
        assert_eq!(all[225].load, 0.5);
        let mut keys: Vec<String> = all.iter().map(|p| format!("{p:?}").split_once(',').unwrap().1.to_string()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 675);
    }

    #[test]
    fn every_point_is_stable_with_the_given_load() {
        for p in GridPoint::all() {
            let spec = p.spec().unwrap();
            let q = crate::repair::approximate_queue(&spec, Machine::First).unwrap();
            let s = q.stability();
            assert!((s.effective_load / s.availability - p.load).abs() < 1e-12, "{p:?}");
            assert!(s.is_stable());
        }
    }

    #[test]
    fn subsample_is_seeded_sorted_and_distinct() {
        let cfg = TestbedConfig {
            subsample: Some(50),
            seed: 7,
        };
        let a = select(&cfg);
        assert_eq!(a, select(&cfg));
        assert_eq!(a.len(), 50);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_ne!(a, select(&TestbedConfig { seed: 8, ..cfg }));
        assert_eq!(select(&TestbedConfig::default()).len(), 675);
    }

    #[test]
    fn bins_split_at_edges() {
        assert_eq!(bin_of(0.0), 0);
        assert_eq!(bin_of(0.01), 1);
        assert_eq!(bin_of(0.5), 2);
        assert_eq!(bin_of(4.99), 3);
        assert_eq!(bin_of(5.0), 4);
    }
}

//! Discrete-event simulation oracles with batch-means confidence intervals.
//!
//! Replication `i` of a run with master seed `s` draws from the ChaCha8
//! stream `i` of the generator seeded with `s`, so results are
//! bit-identical for a given seed regardless of thread count.

pub mod layered;
pub mod vacq;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Time discarded at the start of every replication.
    pub warmup: f64,
    /// End of every replication, warmup included.
    pub horizon: f64,
    pub replications: usize,
    pub seed: u64,
    /// Batches per replication.
    pub batches: usize,
    /// Queue-length levels tracked individually in pmf estimates.
    pub levels: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            warmup: 1e3,
            horizon: 1e6,
            replications: 4,
            seed: 1,
            batches: 32,
            levels: 64,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.warmup >= 0.0 && self.horizon > self.warmup && self.horizon.is_finite()) {
            return bad(format!(
                "need 0 <= warmup < horizon, got warmup {} and horizon {}",
                self.warmup, self.horizon
            ));
        }
        if self.replications == 0 {
            return bad("at least one replication is required".into());
        }
        if self.batches < 20 {
            return bad(format!("at least 20 batches are required, got {}", self.batches));
        }
        Ok(())
    }

    pub fn stream(&self, replication: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replication as u64);
        rng
    }
}

/// Point estimate with a 95% confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
    pub standard_error: f64,
    pub replications: usize,
}

impl Estimate {
    /// Student-t interval over (approximately independent) batch values.
    pub fn from_batches(batches: &[f64], replications: usize) -> Self {
        let n = batches.len();
        let mean = batches.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Estimate {
                value: mean,
                half_width: f64::INFINITY,
                standard_error: f64::INFINITY,
                replications,
            };
        }
        let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        Estimate {
            value: mean,
            half_width: t * se,
            standard_error: se,
            replications,
        }
    }

    /// Whether `x` lies within `k` standard errors.
    pub fn covers(&self, x: f64, k: f64) -> bool {
        (x - self.value).abs() <= k * self.standard_error
    }
}

/// Relative error of an approximation against a simulated value, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelativeError {
    pub percent: f64,
    pub half_width: f64,
}

pub fn relative_error(approx: f64, sim: &Estimate) -> Result<RelativeError> {
    if !(sim.value > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "relative error needs a positive reference, got {}",
            sim.value
        )));
    }
    // delta method: d/dv |a - v| / v = -a / v^2 (either sign of a - v)
    Ok(RelativeError {
        percent: 100.0 * (approx - sim.value).abs() / sim.value,
        half_width: 100.0 * approx / (sim.value * sim.value) * sim.half_width,
    })
}

/// Time-weighted accumulator of an integer-valued process, split into
/// equal-length batches after the warmup.
#[derive(Clone, Debug)]
pub(crate) struct TimeAverage {
    start: f64,
    batch_len: f64,
    area: Vec<f64>,
    /// `level_area[b][n]`; the last level collects everything at or above it.
    level_area: Vec<Vec<f64>>,
}

impl TimeAverage {
    pub fn new(cfg: &SimConfig) -> Self {
        Self::with_levels(cfg, cfg.levels)
    }

    pub fn with_levels(cfg: &SimConfig, levels: usize) -> Self {
        TimeAverage {
            start: cfg.warmup,
            batch_len: (cfg.horizon - cfg.warmup) / cfg.batches as f64,
            area: vec![0.0; cfg.batches],
            level_area: vec![vec![0.0; levels.max(1) + 1]; cfg.batches],
        }
    }

    pub fn batch_len(&self) -> f64 {
        self.batch_len
    }

    pub fn batch_of(&self, t: f64) -> Option<usize> {
        if t < self.start {
            return None;
        }
        let b = ((t - self.start) / self.batch_len) as usize;
        (b < self.area.len()).then_some(b)
    }

    /// Record the value `n` held on `[t0, t1)`.
    pub fn add(&mut self, mut t0: f64, t1: f64, n: usize) {
        let nb = self.area.len();
        t0 = t0.max(self.start);
        let level = n.min(self.level_area[0].len() - 1);
        if t0 >= t1 {
            return;
        }
        let mut b = ((t0 - self.start) / self.batch_len) as usize;
        while t0 < t1 && b < nb {
            let end = (self.start + (b + 1) as f64 * self.batch_len).min(t1);
            let dt = end - t0;
            // dt <= 0 only when rounding put t0 on the previous batch's end
            if dt > 0.0 {
                self.area[b] += dt * n as f64;
                self.level_area[b][level] += dt;
                t0 = end;
            }
            b += 1;
        }
    }

    pub fn batch_means(&self) -> Vec<f64> {
        self.area.iter().map(|a| a / self.batch_len).collect()
    }

    /// Batch fractions of time at `level` (the top level is "at least").
    pub fn batch_fractions(&self, level: usize) -> Vec<f64> {
        self.level_area.iter().map(|l| l[level] / self.batch_len).collect()
    }

    pub fn levels(&self) -> usize {
        self.level_area[0].len() - 1
    }
}

/// Per-batch sums over a sequence of ratio observations.
#[derive(Clone, Debug)]
pub(crate) struct BatchSums {
    pub count: Vec<f64>,
    pub sums: Vec<Vec<f64>>,
}

impl BatchSums {
    pub fn new(batches: usize, width: usize) -> Self {
        BatchSums {
            count: vec![0.0; batches],
            sums: vec![vec![0.0; width]; batches],
        }
    }

    pub fn add(&mut self, batch: usize, values: &[f64]) {
        self.count[batch] += 1.0;
        for (s, v) in self.sums[batch].iter_mut().zip(values) {
            *s += v;
        }
    }

    /// Batch averages of column `j`, skipping empty batches.
    pub fn means(&self, j: usize) -> Vec<f64> {
        self.count
            .iter()
            .zip(&self.sums)
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, s)| s[j] / c)
            .collect()
    }

    pub fn total(&self) -> usize {
        self.count.iter().sum::<f64>() as usize
    }
}

/// Statistics of consecutive downtimes `(D(k), D(k+1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DowntimeEstimate {
    pub mean: Estimate,
    pub second_moment: Estimate,
    pub joint: Estimate,
    pub covariance: Estimate,
    pub correlation: Estimate,
    pub cycles: usize,
}

/// Records downtimes and their lag-1 products per batch.
#[derive(Clone, Debug)]
pub(crate) struct DowntimeRecorder {
    prev: Option<f64>,
    sums: BatchSums,
}

impl DowntimeRecorder {
    pub fn new(batches: usize) -> Self {
        DowntimeRecorder {
            prev: None,
            sums: BatchSums::new(batches, 4),
        }
    }

    pub fn record(&mut self, batch: Option<usize>, d: f64) {
        if let (Some(b), Some(prev)) = (batch, self.prev) {
            self.sums.add(b, &[d, d * d, prev * d, prev]);
        }
        self.prev = Some(d);
    }

    pub fn merge(recorders: &[DowntimeRecorder]) -> BatchSums {
        let mut all = BatchSums::new(0, 4);
        for r in recorders {
            all.count.extend_from_slice(&r.sums.count);
            all.sums.extend(r.sums.sums.iter().cloned());
        }
        all
    }
}

pub(crate) fn downtime_estimate(sums: &BatchSums, replications: usize) -> DowntimeEstimate {
    let mean = sums.means(0);
    let second = sums.means(1);
    let joint = sums.means(2);
    let lagged = sums.means(3);
    let cov: Vec<f64> = (0..mean.len()).map(|i| joint[i] - mean[i] * lagged[i]).collect();
    let corr: Vec<f64> = (0..mean.len())
        .map(|i| cov[i] / (second[i] - mean[i] * mean[i]))
        .collect();
    DowntimeEstimate {
        mean: Estimate::from_batches(&mean, replications),
        second_moment: Estimate::from_batches(&second, replications),
        joint: Estimate::from_batches(&joint, replications),
        covariance: Estimate::from_batches(&cov, replications),
        correlation: Estimate::from_batches(&corr, replications),
        cycles: sums.total(),
    }
}

/// Time-average queue statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueueEstimate {
    pub mean: Estimate,
    pub pmf: Vec<Estimate>,
    /// Fraction of time the server is up.
    pub p_up: Estimate,
    /// Mean time from arrival to service completion.
    pub sojourn: Estimate,
    pub throughput: Estimate,
}

pub(crate) fn queue_estimate(
    queue: &[TimeAverage],
    up: &[TimeAverage],
    sojourn: &[BatchSums],
    batch_len: f64,
    replications: usize,
) -> QueueEstimate {
    let concat = |f: &dyn Fn(&TimeAverage) -> Vec<f64>, xs: &[TimeAverage]| -> Vec<f64> {
        xs.iter().flat_map(f).collect()
    };
    let levels = queue[0].levels();
    let pmf = (0..levels)
        .map(|n| Estimate::from_batches(&concat(&|q| q.batch_fractions(n), queue), replications))
        .collect();
    let mut soj = BatchSums::new(0, 1);
    for s in sojourn {
        soj.count.extend_from_slice(&s.count);
        soj.sums.extend(s.sums.iter().cloned());
    }
    let throughput: Vec<f64> = soj.count.iter().map(|c| c / batch_len).collect();
    QueueEstimate {
        mean: Estimate::from_batches(&concat(&|q| q.batch_means(), queue), replications),
        pmf,
        p_up: Estimate::from_batches(&concat(&|q| q.batch_fractions(1), up), replications),
        sojourn: Estimate::from_batches(&soj.means(0), replications),
        throughput: Estimate::from_batches(&throughput, replications),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_interval_uses_student_t() {
        let b: Vec<f64> = (0..32).map(|i| if i % 2 == 0 { 1.0 } else { 3.0 }).collect();
        let e = Estimate::from_batches(&b, 1);
        assert!((e.value - 2.0).abs() < 1e-15);
        // s = sqrt(32/31), t_{31, 0.975} = 2.039513
        let se = (32.0f64 / 31.0).sqrt() / 32f64.sqrt();
        assert!((e.standard_error - se).abs() < 1e-12);
        assert!((e.half_width - 2.039_513 * se).abs() < 1e-5);
    }

    #[test]
    fn relative_error_examples() {
        let sim = Estimate {
            value: 2.220,
            half_width: 0.01,
            standard_error: 0.005,
            replications: 1,
        };
        let r = relative_error(2.205, &sim).unwrap();
        assert!((r.percent - 0.675_675_675).abs() < 1e-6);
        assert_eq!(relative_error(2.220, &sim).unwrap().percent, 0.0);
        let wider = Estimate { half_width: 0.02, ..sim };
        let r2 = relative_error(2.205, &wider).unwrap();
        assert!((r2.half_width / r.half_width - 2.0).abs() < 1e-12);
    }

    #[test]
    fn time_average_splits_batches() {
        let cfg = SimConfig {
            warmup: 1.0,
            horizon: 5.0,
            batches: 20,
            levels: 4,
            ..SimConfig::default()
        };
        let mut ta = TimeAverage::new(&cfg);
        ta.add(0.0, 5.0, 2);
        let means = ta.batch_means();
        assert!(means.iter().all(|m| (m - 2.0).abs() < 1e-12));
        assert!(ta.batch_fractions(2).iter().all(|f| (f - 1.0).abs() < 1e-12));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        use rand::Rng;
        let cfg = SimConfig::default();
        let a: u64 = cfg.stream(0).random();
        let b: u64 = cfg.stream(0).random();
        let c: u64 = cfg.stream(1).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

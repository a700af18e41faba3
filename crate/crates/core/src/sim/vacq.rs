//! Simulation of the single-server queue with one-dependent vacations.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    downtime_estimate, queue_estimate, BatchSums, DowntimeEstimate, DowntimeRecorder, Estimate, QueueEstimate,
    SimConfig, TimeAverage,
};
use crate::dist::sample_exp;
use crate::error::Result;
use crate::vacation::VacQueueSpec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VacSimResult {
    pub queue: QueueEstimate,
    /// Queue length at the start of an uptime.
    pub uptime_start_pmf: Vec<Estimate>,
    pub uptime_start_mean: Estimate,
    /// Queue length at the start of a downtime.
    pub downtime_start_mean: Estimate,
    pub downtimes: DowntimeEstimate,
    pub seed: u64,
}

struct Replication {
    queue: TimeAverage,
    up: TimeAverage,
    sojourn: BatchSums,
    /// columns: 1{N = n} for n < levels, then N
    at_uptime_start: BatchSums,
    at_downtime_start: BatchSums,
    downtimes: DowntimeRecorder,
}

fn one_hot(n: usize, levels: usize) -> Vec<f64> {
    let mut v = vec![0.0; levels + 1];
    if n < levels {
        v[n] = 1.0;
    }
    v[levels] = n as f64;
    v
}

fn replicate<R: Rng>(spec: &VacQueueSpec, cfg: &SimConfig, rng: &mut R) -> Result<Replication> {
    let lambda = spec.arrival_rate;
    let sigma = spec.breakdown_rate;
    let levels = cfg.levels;
    let mut rep = Replication {
        queue: TimeAverage::new(cfg),
        up: TimeAverage::with_levels(cfg, 1),
        sojourn: BatchSums::new(cfg.batches, 1),
        at_uptime_start: BatchSums::new(cfg.batches, levels + 1),
        at_downtime_start: BatchSums::new(cfg.batches, 1),
        downtimes: DowntimeRecorder::new(cfg.batches),
    };
    let mut t = 0.0;
    let mut waiting: VecDeque<f64> = VecDeque::new();
    let mut up = true;
    let mut next_arrival = sample_exp(lambda, rng);
    let mut phase_end = sample_exp(sigma, rng);
    let mut service_end = f64::INFINITY;
    let mut prev_down = spec.mean_downtime();

    while t < cfg.horizon {
        // the breakdown wins an exact tie with a completion
        let next = next_arrival.min(phase_end).min(service_end);
        let len = waiting.len();
        rep.queue.add(t, next, len);
        rep.up.add(t, next, up as usize);
        t = next;
        if t == phase_end {
            if up {
                up = false;
                service_end = f64::INFINITY;
                if let Some(b) = rep.queue.batch_of(t) {
                    rep.at_downtime_start.add(b, &[len as f64]);
                }
                let d = spec.pair.sample_next(prev_down, rng)?;
                rep.downtimes.record(rep.queue.batch_of(t), d);
                prev_down = d;
                phase_end = t + d;
            } else {
                up = true;
                if let Some(b) = rep.queue.batch_of(t) {
                    rep.at_uptime_start.add(b, &one_hot(len, levels));
                }
                phase_end = t + sample_exp(sigma, rng);
                if len > 0 {
                    service_end = t + spec.service.sample(rng);
                }
            }
        } else if t == service_end {
            let arrived = waiting.pop_front().expect("a customer is in service");
            if let Some(b) = rep.queue.batch_of(t) {
                rep.sojourn.add(b, &[t - arrived]);
            }
            service_end = if waiting.is_empty() {
                f64::INFINITY
            } else {
                t + spec.service.sample(rng)
            };
        } else {
            waiting.push_back(t);
            if up && waiting.len() == 1 {
                service_end = t + spec.service.sample(rng);
            }
            next_arrival = t + sample_exp(lambda, rng);
        }
    }
    Ok(rep)
}

/// Simulate `cfg.replications` independent runs in parallel.
pub fn simulate_vacq(spec: &VacQueueSpec, cfg: &SimConfig) -> Result<VacSimResult> {
    cfg.validate()?;
    spec.check_stable()?;
    spec.pair.check_samplable()?;
    let reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| replicate(spec, cfg, &mut cfg.stream(i)))
        .collect::<Result<_>>()?;
    let r = cfg.replications;
    let queues: Vec<TimeAverage> = reps.iter().map(|x| x.queue.clone()).collect();
    let ups: Vec<TimeAverage> = reps.iter().map(|x| x.up.clone()).collect();
    let soj: Vec<BatchSums> = reps.iter().map(|x| x.sojourn.clone()).collect();
    let queue = queue_estimate(&queues, &ups, &soj, queues[0].batch_len(), r);
    let merged = |f: &dyn Fn(&Replication) -> &BatchSums| {
        let mut all = BatchSums::new(0, 0);
        for x in &reps {
            all.count.extend_from_slice(&f(x).count);
            all.sums.extend(f(x).sums.iter().cloned());
        }
        all
    };
    let starts = merged(&|x| &x.at_uptime_start);
    let ends = merged(&|x| &x.at_downtime_start);
    let recorders: Vec<DowntimeRecorder> = reps.iter().map(|x| x.downtimes.clone()).collect();
    Ok(VacSimResult {
        queue,
        uptime_start_pmf: (0..cfg.levels)
            .map(|n| Estimate::from_batches(&starts.means(n), r))
            .collect(),
        uptime_start_mean: Estimate::from_batches(&starts.means(cfg.levels), r),
        downtime_start_mean: Estimate::from_batches(&ends.means(0), r),
        downtimes: downtime_estimate(&DowntimeRecorder::merge(&recorders), r),
        seed: cfg.seed,
    })
}

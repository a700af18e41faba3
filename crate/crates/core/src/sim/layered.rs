//! Simulation of two queues whose machines share a single FCFS repairman.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{downtime_estimate, queue_estimate, BatchSums, DowntimeEstimate, DowntimeRecorder, QueueEstimate, SimConfig, TimeAverage};
use crate::dist::sample_exp;
use crate::error::Result;
use crate::repair::{approximate_queue, LayeredSpec, Machine};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayeredSimResult {
    pub queues: [QueueEstimate; 2],
    pub downtimes: [DowntimeEstimate; 2],
    pub seed: u64,
}

#[derive(Clone)]
struct Station {
    waiting: VecDeque<f64>,
    up: bool,
    next_arrival: f64,
    breakdown_at: f64,
    service_end: f64,
    down_since: f64,
    queue: TimeAverage,
    up_time: TimeAverage,
    sojourn: BatchSums,
    downtimes: DowntimeRecorder,
}

fn replicate<R: Rng>(spec: &LayeredSpec, cfg: &SimConfig, rng: &mut R) -> [Station; 2] {
    let mut st: [Station; 2] = std::array::from_fn(|i| {
        let m = &spec.machines[i];
        Station {
            waiting: VecDeque::new(),
            up: true,
            next_arrival: sample_exp(m.arrival_rate, rng),
            breakdown_at: sample_exp(m.breakdown_rate, rng),
            service_end: f64::INFINITY,
            down_since: 0.0,
            queue: TimeAverage::new(cfg),
            up_time: TimeAverage::with_levels(cfg, 1),
            sojourn: BatchSums::new(cfg.batches, 1),
            downtimes: DowntimeRecorder::new(cfg.batches),
        }
    });
    let mut in_repair: Option<usize> = None;
    let mut repair_end = f64::INFINITY;
    let mut buffer: VecDeque<usize> = VecDeque::with_capacity(2);
    let mut t = 0.0;

    while t < cfg.horizon {
        let mut next = repair_end;
        for s in &st {
            next = next.min(s.breakdown_at).min(s.service_end).min(s.next_arrival);
        }
        for s in &mut st {
            s.queue.add(t, next, s.waiting.len());
            s.up_time.add(t, next, s.up as usize);
        }
        t = next;

        if let Some(i) = (0..2).find(|&i| st[i].breakdown_at == t) {
            let s = &mut st[i];
            s.up = false;
            s.breakdown_at = f64::INFINITY;
            s.service_end = f64::INFINITY;
            s.down_since = t;
            if in_repair.is_none() {
                in_repair = Some(i);
                repair_end = t + spec.machines[i].repair.sample(rng);
            } else {
                buffer.push_back(i);
            }
        } else if t == repair_end {
            let i = in_repair.take().expect("a machine is in repair");
            let m = &spec.machines[i];
            let s = &mut st[i];
            s.up = true;
            let batch = s.queue.batch_of(t);
            s.downtimes.record(batch, t - s.down_since);
            s.breakdown_at = t + sample_exp(m.breakdown_rate, rng);
            if !s.waiting.is_empty() {
                s.service_end = t + m.service.sample(rng);
            }
            repair_end = f64::INFINITY;
            if let Some(j) = buffer.pop_front() {
                in_repair = Some(j);
                repair_end = t + spec.machines[j].repair.sample(rng);
            }
        } else if let Some(i) = (0..2).find(|&i| st[i].service_end == t) {
            let m = &spec.machines[i];
            let s = &mut st[i];
            let arrived = s.waiting.pop_front().expect("a product is in service");
            if let Some(b) = s.queue.batch_of(t) {
                s.sojourn.add(b, &[t - arrived]);
            }
            s.service_end = if s.waiting.is_empty() {
                f64::INFINITY
            } else {
                t + m.service.sample(rng)
            };
        } else {
            let i = (0..2).find(|&i| st[i].next_arrival == t).expect("some event is due");
            let m = &spec.machines[i];
            let s = &mut st[i];
            s.waiting.push_back(t);
            if s.up && s.waiting.len() == 1 {
                s.service_end = t + m.service.sample(rng);
            }
            s.next_arrival = t + sample_exp(m.arrival_rate, rng);
        }
    }
    st
}

/// Simulate `cfg.replications` runs of the two-machine network in parallel.
///
/// A queue whose closed-form approximation is available and unstable is
/// rejected before simulating.
pub fn simulate_layered(spec: &LayeredSpec, cfg: &SimConfig) -> Result<LayeredSimResult> {
    cfg.validate()?;
    spec.validate()?;
    if spec.has_exponential_repairs() {
        for m in [Machine::First, Machine::Second] {
            if spec.machine(m).arrival_rate > 0.0 {
                approximate_queue(spec, m)?.check_stable()?;
            }
        }
    }
    let reps: Vec<[Station; 2]> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| replicate(spec, cfg, &mut cfg.stream(i)))
        .collect();
    let r = cfg.replications;
    let station = |i: usize| {
        let queues: Vec<TimeAverage> = reps.iter().map(|x| x[i].queue.clone()).collect();
        let ups: Vec<TimeAverage> = reps.iter().map(|x| x[i].up_time.clone()).collect();
        let soj: Vec<BatchSums> = reps.iter().map(|x| x[i].sojourn.clone()).collect();
        let rec: Vec<DowntimeRecorder> = reps.iter().map(|x| x[i].downtimes.clone()).collect();
        (
            queue_estimate(&queues, &ups, &soj, queues[0].batch_len(), r),
            downtime_estimate(&DowntimeRecorder::merge(&rec), r),
        )
    };
    let (q1, d1) = station(0);
    let (q2, d2) = station(1);
    Ok(LayeredSimResult {
        queues: [q1, q2],
        downtimes: [d1, d2],
        seed: cfg.seed,
    })
}

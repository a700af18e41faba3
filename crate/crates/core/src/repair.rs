//! The two-machine, one-repairman network and its reduction to a single
//! dependent-vacation queue per machine.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::dependence::{DependencePair, DowntimeStats, IncrementForm};
use crate::dist::{fit_two_moment, DistSpec};
use crate::error::{Error, Result};
use crate::sim::layered::simulate_layered;
use crate::sim::{DowntimeEstimate, SimConfig};
use crate::vacation::VacQueueSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    /// Arrival rate of products at the machine's queue.
    pub arrival_rate: f64,
    pub service: DistSpec,
    pub breakdown_rate: f64,
    pub repair: DistSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredSpec {
    pub machines: [MachineSpec; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Machine {
    First,
    Second,
}

impl Machine {
    pub fn index(self) -> usize {
        match self {
            Machine::First => 0,
            Machine::Second => 1,
        }
    }

    pub fn other(self) -> Machine {
        match self {
            Machine::First => Machine::Second,
            Machine::Second => Machine::First,
        }
    }
}

/// Rates `(sigma_own, sigma_other, nu_own, nu_other)` seen from `machine`.
#[derive(Clone, Copy, Debug)]
struct Rates {
    s1: f64,
    s2: f64,
    n1: f64,
    n2: f64,
}

impl LayeredSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.machines.iter().enumerate() {
            let bad = |what: &str, x: f64| {
                Err(Error::InvalidParameter(format!("machine {}: {what} must be finite and >= 0, got {x}", i + 1)))
            };
            if !(m.arrival_rate.is_finite() && m.arrival_rate >= 0.0) {
                return bad("arrival rate", m.arrival_rate);
            }
            if !(m.breakdown_rate.is_finite() && m.breakdown_rate >= 0.0) {
                return bad("breakdown rate", m.breakdown_rate);
            }
            m.service.validate()?;
            m.repair.validate()?;
        }
        if self.machines.iter().all(|m| m.breakdown_rate == 0.0) {
            return Err(Error::InvalidParameter("at least one machine must break down".into()));
        }
        Ok(())
    }

    pub fn machine(&self, m: Machine) -> &MachineSpec {
        &self.machines[m.index()]
    }

    pub fn has_exponential_repairs(&self) -> bool {
        self.machines.iter().all(|m| m.repair.exponential_rate().is_some())
    }

    fn rates(&self, m: Machine) -> Result<Rates> {
        self.validate()?;
        let own = self.machine(m);
        let other = self.machine(m.other());
        match (own.repair.exponential_rate(), other.repair.exponential_rate()) {
            (Some(n1), Some(n2)) => Ok(Rates {
                s1: own.breakdown_rate,
                s2: other.breakdown_rate,
                n1,
                n2,
            }),
            _ => Err(Error::AnalyticUnavailable(
                "closed-form downtime statistics need exponential repairs; use simulated statistics".into(),
            )),
        }
    }
}

/// States of the embedded chain, as (machine 1, machine 2) with
/// 1 = up, 2 = waiting for repair, 3 = in repair.
pub const MACHINE_STATES: [(u8, u8); 5] = [(1, 1), (1, 3), (3, 1), (2, 3), (3, 2)];

/// Transition matrix of the embedded chain over [`MACHINE_STATES`].
pub fn transition_matrix(spec: &LayeredSpec) -> Result<SMatrix<f64, 5, 5>> {
    let Rates { s1, s2, n1, n2 } = spec.rates(Machine::First)?;
    let mut p = SMatrix::<f64, 5, 5>::zeros();
    p[(0, 2)] = s1 / (s1 + s2);
    p[(0, 1)] = s2 / (s1 + s2);
    p[(1, 0)] = n2 / (s1 + n2);
    p[(1, 3)] = s1 / (s1 + n2);
    p[(2, 0)] = n1 / (n1 + s2);
    p[(2, 4)] = s2 / (n1 + s2);
    p[(3, 2)] = 1.0;
    p[(4, 1)] = 1.0;
    Ok(p)
}

/// Stationary law of the embedded chain, by a direct linear solve.
pub fn dtmc_stationary(spec: &LayeredSpec) -> Result<[f64; 5]> {
    let p = transition_matrix(spec)?;
    let mut a = p.transpose() - SMatrix::<f64, 5, 5>::identity();
    // replace the last balance equation by normalisation
    for j in 0..5 {
        a[(4, j)] = 1.0;
    }
    let mut b = SVector::<f64, 5>::zeros();
    b[4] = 1.0;
    let pi = a.lu().solve(&b).ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    Ok([pi[0], pi[1], pi[2], pi[3], pi[4]])
}

/// `(z_up, z_down)`: the other machine is up / in repair when `machine` breaks down.
pub fn breakdown_probs(spec: &LayeredSpec, machine: Machine) -> Result<(f64, f64)> {
    let Rates { s1, s2, n1, n2 } = spec.rates(machine)?;
    let den = (s2 + n1) * (s1 + s2 + n2);
    Ok(((s1 * n1 + (s2 + n1) * n2) / den, s2 * (s1 + s2 + n1) / den))
}

/// `(v, w)`: the other machine is in repair at the next breakdown of
/// `machine`, given it was up (`v`) or waiting (`w`) when `machine`'s repair ended.
pub fn repeat_probs(spec: &LayeredSpec, machine: Machine) -> Result<(f64, f64)> {
    let Rates { s1, s2, n2, .. } = spec.rates(machine)?;
    let den = s1 + s2 + n2;
    Ok((s2 / den, (s1 + s2) / den))
}

/// Closed-form moments and lag-1 covariance of `machine`'s downtimes.
pub fn downtime_stats(spec: &LayeredSpec, machine: Machine) -> Result<DowntimeStats> {
    let Rates { s1, s2, n1, n2 } = spec.rates(machine)?;
    let (_, z_down) = breakdown_probs(spec, machine)?;
    // D = W + R, W ~ z_down * Exp(n2) independent of R ~ Exp(n1)
    let mean = z_down / n2 + 1.0 / n1;
    let second = 2.0 * z_down / (n2 * n2) + 2.0 * z_down / (n1 * n2) + 2.0 / (n1 * n1);
    let covariance = s1 * s2 / ((s2 + n1).powi(2) * n2 * (s1 + s2 + n2));
    Ok(DowntimeStats::from_covariance(mean, second, covariance))
}

/// Downtime statistics of `machine` estimated from a layered simulation.
pub fn simulated_stats(spec: &LayeredSpec, machine: Machine, cfg: &SimConfig) -> Result<DowntimeEstimate> {
    Ok(simulate_layered(spec, cfg)?.downtimes[machine.index()])
}

/// How the free second-order parameter of the moment match is fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatchPolicy {
    /// The independent component gets the repair time's SCV.
    #[default]
    RepairScv,
    /// Use this `chi''(0)`.
    ChiSecondMoment { value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchResult {
    pub chi1: f64,
    pub chi2: f64,
    pub g1: f64,
    pub g2: f64,
    pub policy: MatchPolicy,
    /// `g''(0)` came out positive and was reset to zero.
    pub fell_back: bool,
}

impl MatchResult {
    pub fn pair(&self, form: IncrementForm) -> Result<DependencePair> {
        DependencePair::from_derivatives_with(self.chi1, self.chi2, self.g1, self.g2, form)
    }

    /// `(E[D], E[D^2], E[D(k) D(k+1)])` implied by the four derivatives.
    pub fn implied_moments(&self) -> (f64, f64, f64) {
        let mean = self.chi1 / (self.g1 - 1.0);
        let second = (self.chi2 - mean * (2.0 * self.chi1 * self.g1 + self.g2)) / (1.0 - self.g1 * self.g1);
        (mean, second, -self.chi1 * mean + self.g1 * second)
    }
}

/// Derivatives at 0 of `(chi, g)` reproducing the mean, second moment and
/// lag-1 correlation in `stats`.
pub fn moment_match(stats: &DowntimeStats, policy: MatchPolicy, repair_scv: f64) -> Result<MatchResult> {
    let r = stats.correlation;
    if !(r.is_finite() && (0.0..1.0).contains(&r)) {
        return Err(Error::InfeasibleDerivatives(format!(
            "lag-1 correlation {r} must lie in [0, 1)"
        )));
    }
    let (m, m2) = (stats.mean, stats.second_moment);
    let chi1 = -(1.0 - r) * m;
    if r == 0.0 {
        return Ok(MatchResult {
            chi1,
            chi2: m2,
            g1: 0.0,
            g2: 0.0,
            policy,
            fell_back: false,
        });
    }
    let chi2 = match policy {
        MatchPolicy::RepairScv => (1.0 + repair_scv) * chi1 * chi1,
        MatchPolicy::ChiSecondMoment { value } => value,
    };
    let g2 = (chi2 - m2 * (1.0 - r * r)) / m - 2.0 * chi1 * r;
    if g2 <= 0.0 {
        return Ok(MatchResult {
            chi1,
            chi2,
            g1: r,
            g2,
            policy,
            fell_back: false,
        });
    }
    let chi2 = m2 * (1.0 - r * r) + 2.0 * m * chi1 * r;
    if chi2 < chi1 * chi1 {
        return Err(Error::InfeasibleDerivatives(format!(
            "no g''(0) <= 0 gives chi''(0) >= chi'(0)^2 for mean {m}, second moment {m2}, correlation {r}"
        )));
    }
    Ok(MatchResult {
        chi1,
        chi2,
        g1: r,
        g2: 0.0,
        policy,
        fell_back: true,
    })
}

/// Single-queue stand-in for `machine`'s queue built from given downtime statistics.
pub fn approximate_queue_with(
    spec: &LayeredSpec,
    machine: Machine,
    stats: &DowntimeStats,
    policy: MatchPolicy,
    form: IncrementForm,
) -> Result<VacQueueSpec> {
    let own = spec.machine(machine);
    let matched = moment_match(stats, policy, own.repair.moments().scv)?;
    VacQueueSpec::new(own.arrival_rate, own.service, own.breakdown_rate, matched.pair(form)?)
}

/// [`approximate_queue_with`] on the closed-form statistics and default policy.
pub fn approximate_queue(spec: &LayeredSpec, machine: Machine) -> Result<VacQueueSpec> {
    approximate_queue_with(
        spec,
        machine,
        &downtime_stats(spec, machine)?,
        MatchPolicy::default(),
        IncrementForm::default(),
    )
}

/// Same marginal downtime moments, but independent downtimes.
pub fn independent_baseline_with(spec: &LayeredSpec, machine: Machine, stats: &DowntimeStats) -> Result<VacQueueSpec> {
    let own = spec.machine(machine);
    let pair = DependencePair::independent(fit_two_moment(stats.mean, stats.second_moment)?)?;
    VacQueueSpec::new(own.arrival_rate, own.service, own.breakdown_rate, pair)
}

pub fn independent_baseline(spec: &LayeredSpec, machine: Machine) -> Result<VacQueueSpec> {
    independent_baseline_with(spec, machine, &downtime_stats(spec, machine)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp(rate: f64) -> DistSpec {
        DistSpec::exponential(rate).unwrap()
    }

    pub(crate) fn layered(l1: f64, s1: f64, s2: f64, n1: f64, n2: f64) -> LayeredSpec {
        LayeredSpec {
            machines: [
                MachineSpec {
                    arrival_rate: l1,
                    service: exp(1.0),
                    breakdown_rate: s1,
                    repair: exp(n1),
                },
                MachineSpec {
                    arrival_rate: 0.25,
                    service: exp(1.0),
                    breakdown_rate: s2,
                    repair: exp(n2),
                },
            ],
        }
    }

    #[test]
    fn symmetric_chain() {
        let pi = dtmc_stationary(&layered(0.25, 1.0, 1.0, 1.0, 1.0)).unwrap();
        let want = [0.25, 0.25, 0.25, 0.125, 0.125];
        for (a, b) in pi.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rare_breakdowns_of_first_machine() {
        let pi = dtmc_stationary(&layered(0.25, 1e-9, 1.0, 1.0, 1.0)).unwrap();
        assert!(pi[0] + pi[1] > 1.0 - 1e-8);
    }

    #[test]
    fn all_rates_one() {
        let s = layered(0.25, 1.0, 1.0, 1.0, 1.0);
        let (zu, zd) = breakdown_probs(&s, Machine::First).unwrap();
        assert!((zd - 0.5).abs() < 1e-15 && (zu - 0.5).abs() < 1e-15);
        let (v, w) = repeat_probs(&s, Machine::First).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15 && (w - 2.0 / 3.0).abs() < 1e-15);
        let d = downtime_stats(&s, Machine::First).unwrap();
        assert!((d.mean - 1.5).abs() < 1e-15);
        assert!((d.second_moment - 4.0).abs() < 1e-14);
        assert!((d.covariance - 1.0 / 12.0).abs() < 1e-15);
        assert!((d.correlation - 1.0 / 21.0).abs() < 1e-14);
    }

    #[test]
    fn no_interference_without_second_breakdowns() {
        let s = layered(0.25, 1.0, 0.0, 1.0, 1.0);
        assert_eq!(breakdown_probs(&s, Machine::First).unwrap().1, 0.0);
        assert_eq!(downtime_stats(&s, Machine::First).unwrap().covariance, 0.0);
    }

    #[test]
    fn non_exponential_repairs_refuse_closed_forms() {
        let mut s = layered(0.25, 1.0, 1.0, 1.0, 1.0);
        s.machines[1].repair = DistSpec::hyper2_balanced(1.0, 8.0).unwrap();
        assert!(matches!(
            downtime_stats(&s, Machine::First),
            Err(Error::AnalyticUnavailable(_))
        ));
    }

    #[test]
    fn v_solves_its_fixed_point() {
        let s = layered(0.25, 0.7, 1.9, 2.3, 0.4);
        let (s1, s2, n2) = (0.7, 1.9, 0.4);
        let (v, _) = repeat_probs(&s, Machine::First).unwrap();
        let rhs = s2 / (s1 + s2) * (s1 / (s1 + n2) + n2 / (s1 + n2) * v);
        assert!((v - rhs).abs() < 1e-14);
    }

    #[test]
    fn match_for_all_rates_one() {
        let stats = downtime_stats(&layered(0.25, 1.0, 1.0, 1.0, 1.0), Machine::First).unwrap();
        let m = moment_match(&stats, MatchPolicy::RepairScv, 1.0).unwrap();
        assert!((m.g1 - 1.0 / 21.0).abs() < 1e-15);
        assert!((m.chi1 + 20.0 / 21.0 * 1.5).abs() < 1e-14);
        let (mean, second, joint) = m.implied_moments();
        assert!((mean - stats.mean).abs() < 1e-12);
        assert!((second - stats.second_moment).abs() < 1e-12);
        assert!((joint - stats.joint).abs() < 1e-12);
    }

    #[test]
    fn zero_correlation_matches_independently() {
        let stats = DowntimeStats::from_covariance(2.0, 9.0, 0.0);
        let m = moment_match(&stats, MatchPolicy::RepairScv, 1.0).unwrap();
        assert_eq!((m.g1, m.g2), (0.0, 0.0));
        assert_eq!(m.chi1, -2.0);
        assert!(moment_match(&DowntimeStats::from_covariance(1.0, 2.0, -0.1), MatchPolicy::RepairScv, 1.0).is_err());
    }

    #[test]
    fn covariance_by_integrating_the_conditional_wait() {
        // Cov(R(k), W(k+1)): machine 2 breaks during R(k) = y with prob 1 - e^{-s2 y}
        let (s1, s2, n1, n2) = (0.7, 1.9, 2.3, 0.4);
        let s = layered(0.25, s1, s2, n1, n2);
        let (v, w) = repeat_probs(&s, Machine::First).unwrap();
        let wait = |y: f64| ((-s2 * y).exp() * v + (1.0 - (-s2 * y).exp()) * w) / n2;
        let (h, steps) = (1e-4, 200_000);
        let (mut ry, mut y_only) = (0.0, 0.0);
        for k in 0..steps {
            let y = (k as f64 + 0.5) * h;
            let density = n1 * (-n1 * y).exp() * h;
            ry += y * wait(y) * density;
            y_only += wait(y) * density;
        }
        let cov = ry - y_only / n1;
        let closed = downtime_stats(&s, Machine::First).unwrap().covariance;
        assert!((cov - closed).abs() < 1e-6 * closed, "{cov} vs {closed}");
    }

    #[test]
    fn second_machine_by_symmetry() {
        let s = layered(0.25, 0.5, 2.0, 3.0, 0.7);
        let mut swapped = s;
        swapped.machines.swap(0, 1);
        let a = downtime_stats(&s, Machine::Second).unwrap();
        let b = downtime_stats(&swapped, Machine::First).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn chain_consistency(s1 in 0.01f64..10.0, s2 in 0.01f64..10.0, n1 in 0.01f64..10.0, n2 in 0.01f64..10.0) {
            let s = layered(0.1, s1, s2, n1, n2);
            let pi = dtmc_stationary(&s).unwrap();
            let p = transition_matrix(&s).unwrap();
            let row = SVector::<f64, 5>::from_row_slice(&pi);
            let resid = (p.transpose() * row - row).amax();
            prop_assert!(resid < 1e-13);
            prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            prop_assert!(pi.iter().all(|x| *x >= 0.0));
            let (zu, zd) = breakdown_probs(&s, Machine::First).unwrap();
            prop_assert!((zu + zd - 1.0).abs() < 1e-13);
            // z from the chain: breakdown of machine 1 from (1,1) versus from (1,3)
            let from_up = pi[0] * p[(0, 2)];
            let from_repair = pi[1] * p[(1, 3)];
            prop_assert!((zd - from_repair / (from_up + from_repair)).abs() < 1e-12);
            let (v, w) = repeat_probs(&s, Machine::First).unwrap();
            prop_assert!(0.0 <= v && v <= w && w <= 1.0);
            prop_assert!(downtime_stats(&s, Machine::First).unwrap().covariance >= 0.0);
        }

        #[test]
        fn covariance_monotone(s1 in 0.05f64..5.0, s2 in 0.05f64..5.0, n1 in 0.05f64..5.0, n2 in 0.05f64..5.0) {
            let cov = |a: f64, b: f64, c: f64, d: f64| downtime_stats(&layered(0.1, a, b, c, d), Machine::First).unwrap().covariance;
            let base = cov(s1, s2, n1, n2);
            prop_assert!(cov(s1 * 1.1, s2, n1, n2) > base);
            prop_assert!(cov(s1, s2, n1 * 1.1, n2) < base);
            prop_assert!(cov(s1, s2, n1, n2 * 1.1) < base);
        }

        #[test]
        fn match_closure(s1 in 0.05f64..5.0, s2 in 0.05f64..5.0, n1 in 0.05f64..5.0, n2 in 0.05f64..5.0) {
            let stats = downtime_stats(&layered(0.1, s1, s2, n1, n2), Machine::First).unwrap();
            let m = moment_match(&stats, MatchPolicy::RepairScv, 1.0).unwrap();
            let lag = m.pair(IncrementForm::default()).unwrap().lag1_stats();
            prop_assert!((lag.mean - stats.mean).abs() < 1e-9 * stats.mean);
            prop_assert!((lag.second_moment - stats.second_moment).abs() < 1e-9 * stats.second_moment);
            prop_assert!((lag.covariance - stats.covariance).abs() < 1e-9 * stats.second_moment);
            prop_assert!((lag.correlation - stats.correlation).abs() < 1e-9);
        }
    }
}

//! Exact queue-length analysis of the M/G/1 queue with exponential uptimes,
//! pre-emptive repeat-different service and one-dependent vacations.
//!
//! Notation: `w = lambda (1 - p)`, `beta(p) = B(sigma + w)` and
//! `delta(p) = p - beta(p)`, whose root in (0, 1) is `mu`. The kernels
//! `A`, `K`, `E`, `F`, `G` all carry powers of `1 / delta`; the analysis works
//! with the cleared forms `A delta`, `K delta`, `E delta^2`, ... which are
//! analytic on the closed unit disk, so nothing ever divides by `p - mu`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dependence::{DependencePair, PRODUCT_TOL};
use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::quad::{laplace_half_line, laplace_half_line_rel, QuadResult};
use crate::scalar::{Jet, Jet6, Scalar};

/// Plain kernels refuse to evaluate this close to `mu`.
const POLE_GUARD: f64 = 1e-6;
/// Radius around `1` and `phi` where series expansions replace direct evaluation.
const SERIES_RADIUS: f64 = 1e-5;
/// The downtime branch switches to a contour average inside this radius of `mu`.
const CONTOUR_SWITCH: f64 = 2.5e-4;
const CONTOUR_RADIUS: f64 = 5e-4;
const CONTOUR_POINTS: usize = 32;
const COMPLEX_STEP: f64 = 1e-20;
const MAX_CONDITION: f64 = 1e12;
const BUSY_ROOT_TOL: f64 = 1e-13;
const BUSY_ROOT_CAP: usize = 100_000;
const KAPPA_REL_TOL: f64 = 1e-12;
/// Relative gap between the series mean and the Richardson mean that flags a kernel bug.
pub const MEAN_CHECK_TOL: f64 = 1e-5;
pub const MAX_PMF_LEN: usize = 4096;
/// Below this distance from `phi` to `1` the expansion at `1` divides two
/// near-coincident roots and loses its digits; the mean then comes from
/// Richardson extrapolation instead.
const SERIES_CONDITION_GAP: f64 = 1e-3;

fn c64(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VacQueueSpec {
    pub arrival_rate: f64,
    pub service: DistSpec,
    pub breakdown_rate: f64,
    pub pair: DependencePair,
}

/// Load against availability. Under repeat-different service an attempt
/// that is cut short is lost, so a customer occupies the server for
/// `(1 - B(sigma)) / (sigma B(sigma))` units of uptime on average, which
/// equals `E[B]` only for exponential service.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stability {
    pub nominal_load: f64,
    pub effective_load: f64,
    pub availability: f64,
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        self.effective_load < self.availability
    }
}

impl VacQueueSpec {
    pub fn new(arrival_rate: f64, service: DistSpec, breakdown_rate: f64, pair: DependencePair) -> Result<Self> {
        let spec = VacQueueSpec {
            arrival_rate,
            service,
            breakdown_rate,
            pair,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "arrival rate must be positive, got {}",
                self.arrival_rate
            )));
        }
        if !(self.breakdown_rate.is_finite() && self.breakdown_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "breakdown rate must be positive, got {}",
                self.breakdown_rate
            )));
        }
        self.service.validate()
    }

    pub fn mean_downtime(&self) -> f64 {
        self.pair.stationary_moments().0
    }

    /// Long-run fraction of time the server is up.
    pub fn p_up(&self) -> f64 {
        1.0 / (1.0 + self.breakdown_rate * self.mean_downtime())
    }

    pub fn stability(&self) -> Stability {
        let sigma = self.breakdown_rate;
        let b = self.service.transform(c64(sigma)).re;
        let lost = self.service.complement(c64(sigma)).re;
        Stability {
            nominal_load: self.arrival_rate * self.service.mean(),
            effective_load: self.arrival_rate * lost / (sigma * b),
            availability: self.p_up(),
        }
    }

    pub fn check_stable(&self) -> Result<Stability> {
        self.validate()?;
        let s = self.stability();
        if s.is_stable() {
            Ok(s)
        } else {
            Err(Error::Unstable {
                load: s.effective_load,
                bound: s.availability,
            })
        }
    }
}

/// Root in (0, 1) of `p = B(sigma + lambda (1 - p))`: the busy-period LST at `sigma`.
pub fn busy_root(spec: &VacQueueSpec) -> Result<f64> {
    spec.validate()?;
    let (lambda, sigma) = (spec.arrival_rate, spec.breakdown_rate);
    let b = &spec.service;
    let mut p = 0.0;
    let mut change = f64::INFINITY;
    for _ in 0..BUSY_ROOT_CAP {
        let next = b.transform(c64(sigma + lambda * (1.0 - p))).re;
        change = (next - p).abs();
        p = next;
        if change < BUSY_ROOT_TOL {
            // polish on the cancellation-free form (p - 1) + (1 - B)
            for _ in 0..3 {
                let d = delta(b, sigma, lambda, Jet::<2>::variable(p));
                if d.coeff(1) != 0.0 {
                    p -= d.coeff(0) / d.coeff(1);
                }
            }
            return Ok(p);
        }
    }
    Err(Error::NoConvergence {
        what: "busy-period root",
        iterations: BUSY_ROOT_CAP,
        last_change: change,
    })
}

fn delta<S: Scalar>(b: &DistSpec, sigma: f64, lambda: f64, p: S) -> S {
    let w = (S::one() - p) * lambda;
    (p - 1.0) + b.complement(w + sigma)
}

/// Kernel values with their `delta` factors cleared:
/// `a = A delta`, `k = K delta`, `e = E delta^2`, `f = F delta^2`, `g = G delta^2`.
#[derive(Clone, Copy, Debug)]
pub struct Cleared<S> {
    pub delta: S,
    pub a: S,
    pub k: S,
    pub e: S,
    pub f: S,
    pub g: S,
}

#[derive(Clone, Debug)]
pub struct Kernel {
    lambda: f64,
    sigma: f64,
    service: DistSpec,
    pair: DependencePair,
    mu: f64,
    lim_ak: f64,
    /// Residue of `A` at `mu`, divided by `mu`.
    residue: f64,
}

impl Kernel {
    pub fn new(spec: &VacQueueSpec) -> Result<Self> {
        let mu = busy_root(spec)?;
        let (lambda, sigma) = (spec.arrival_rate, spec.breakdown_rate);
        let s0 = sigma + lambda * (1.0 - mu);
        let b_prime = spec.service.transform(Jet::<2>::variable(s0)).coeff(1);
        let slope = 1.0 + lambda * b_prime;
        let lim_ak = sigma / s0 + lambda * mu * sigma * (1.0 - mu) / (slope * s0 * s0);
        let residue = sigma * (1.0 - mu) / (s0 * slope);
        Ok(Kernel {
            lambda,
            sigma,
            service: spec.service,
            pair: spec.pair,
            mu,
            lim_ak,
            residue,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `lim_{p -> mu} A(p) + K(p)`.
    pub fn lim_ak(&self) -> f64 {
        self.lim_ak
    }

    /// `lim_{p -> mu} A(p) (p^i - mu^i) / (i mu^i)`.
    pub fn residue(&self) -> f64 {
        self.residue
    }

    fn dtilde<S: Scalar>(&self, s: S) -> Result<S> {
        Ok(self.pair.stationary_transform(s, PRODUCT_TOL)?.value)
    }

    pub fn cleared<S: Scalar>(&self, p: S) -> Result<Cleared<S>> {
        let (lambda, sigma, mu) = (self.lambda, self.sigma, self.mu);
        let w = (S::one() - p) * lambda;
        let beta = self.service.transform(w + sigma);
        let delta = (p - 1.0) + self.service.complement(w + sigma);
        let a = p * self.service.complement(w + sigma) * sigma / (w + sigma);
        let k = -(S::one() - p) * beta * (sigma / (sigma + lambda * (1.0 - mu)));
        let gw = self.pair.g_at(w);
        let chi = self.pair.chi_at(w);
        let d1 = self.dtilde(w + gw)?;
        let d2 = self.dtilde(gw + lambda * (1.0 - mu))?;
        Ok(Cleared {
            delta,
            a,
            k,
            e: chi * a * a * d1,
            f: chi * k * (a * d1 + delta * d2 * self.lim_ak),
            g: chi * k * delta * d2 * self.residue,
        })
    }

    fn guard(&self, p: Complex64) -> Result<()> {
        if (p - self.mu).norm() < POLE_GUARD {
            Err(Error::AtPole(self.mu))
        } else {
            Ok(())
        }
    }

    pub fn a(&self, p: Complex64) -> Result<Complex64> {
        self.guard(p)?;
        let c = self.cleared(p)?;
        Ok(c.a / c.delta)
    }

    pub fn k(&self, p: Complex64) -> Result<Complex64> {
        self.guard(p)?;
        let c = self.cleared(p)?;
        Ok(c.k / c.delta)
    }

    /// `A(p) + K(p)`, continued analytically through `mu`.
    pub fn a_plus_k(&self, p: Complex64) -> Result<Complex64> {
        if (p - self.mu).norm() < POLE_GUARD {
            return Ok(c64(self.lim_ak));
        }
        let c = self.cleared(p)?;
        Ok((c.a + c.k) / c.delta)
    }

    pub fn e(&self, p: Complex64) -> Result<Complex64> {
        self.guard(p)?;
        let c = self.cleared(p)?;
        Ok(c.e / (c.delta * c.delta))
    }

    pub fn f(&self, p: Complex64) -> Result<Complex64> {
        self.guard(p)?;
        let c = self.cleared(p)?;
        Ok(c.f / (c.delta * c.delta))
    }

    pub fn g(&self, p: Complex64) -> Result<Complex64> {
        self.guard(p)?;
        let c = self.cleared(p)?;
        Ok(c.g / (c.delta * c.delta))
    }

    /// `delta^2 (1 - E)` on the real line; same sign as `1 - E`.
    fn denominator(&self, p: f64) -> Result<f64> {
        let c = self.cleared(c64(p))?;
        Ok((c.delta * c.delta - c.e).re)
    }

    /// `(E'(1), F'(1), G'(1))` by complex-step differentiation.
    pub fn derivatives_at_one(&self) -> Result<[f64; 3]> {
        let p = Complex64::new(1.0, COMPLEX_STEP);
        let c = self.cleared(p)?;
        let d2 = c.delta * c.delta;
        Ok([(c.e / d2).im, (c.f / d2).im, (c.g / d2).im].map(|v| v / COMPLEX_STEP))
    }

    /// Central-difference counterpart of [`Kernel::derivatives_at_one`].
    pub fn derivatives_at_one_central(&self) -> Result<[f64; 3]> {
        let h = 1e-4f64.min(0.01 * (1.0 - self.mu));
        let at = |p: f64| -> Result<[f64; 3]> {
            let c = self.cleared(c64(p))?;
            let d2 = c.delta * c.delta;
            Ok([(c.e / d2).re, (c.f / d2).re, (c.g / d2).re])
        };
        let (hi, lo) = (at(1.0 + h)?, at(1.0 - h)?);
        Ok([0, 1, 2].map(|i| (hi[i] - lo[i]) / (2.0 * h)))
    }
}

/// `kappa_[a, b]{c} = int_0^inf exp(-c u) D(a + b u) du`.
pub fn kappa<S: Scalar>(pair: &DependencePair, a: S, b: f64, c: f64) -> Result<QuadResult<S>> {
    let dt = |s: S| -> Result<S> { Ok(pair.stationary_transform(s, PRODUCT_TOL)?.value) };
    if b == 0.0 {
        return Ok(QuadResult {
            value: dt(a)? / c,
            error: 0.0,
            intervals: 0,
        });
    }
    let at_zero = dt(a)?;
    let bound = at_zero.magnitude().max(1.0);
    laplace_half_line(|u| dt(a + b * u), c, bound, KAPPA_REL_TOL * bound / c)
}

/// Result of the boundary solve at `p = 1` and `p = phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Boundary {
    /// `E[mu^N]`.
    pub x: f64,
    /// `E[N mu^N]`.
    pub y: f64,
    pub condition: f64,
    /// `(E'(1), F'(1), G'(1))` from complex-step differentiation.
    pub derivatives: [f64; 3],
    /// Largest relative gap to the central-difference derivatives.
    pub derivative_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiRoot {
    pub phi: f64,
    /// `|1 - E(phi)|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Unique root of `1 - E(p)` on (0, mu), by bisection.
pub fn phi_root(kernel: &Kernel) -> Result<PhiRoot> {
    let eps = 1e-10;
    let (mut lo, mut hi) = (eps, kernel.mu - eps);
    let (f_lo, f_hi) = (kernel.denominator(lo)?, kernel.denominator(hi)?);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::MissingSignChange {
            at_low: f_lo,
            at_high: f_hi,
        });
    }
    let mut iterations = 0;
    while hi - lo > 1e-13_f64.min(f64::EPSILON * hi) && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kernel.denominator(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let phi = 0.5 * (lo + hi);
    let c = kernel.cleared(c64(phi))?;
    let residual = ((c.delta * c.delta - c.e) / (c.delta * c.delta)).norm();
    Ok(PhiRoot {
        phi,
        residual,
        iterations,
    })
}

/// `E[mu^N]` and `E[N mu^N]` from normalisation at 1 and the root at `phi`.
pub fn boundary_constants(kernel: &Kernel, phi: f64) -> Result<Boundary> {
    let d = kernel.derivatives_at_one()?;
    let central = kernel.derivatives_at_one_central()?;
    let derivative_gap = d
        .iter()
        .zip(central)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let at_phi = kernel.cleared(c64(phi))?;
    // rows: F'(1) x + G'(1) y = -E'(1);  F(phi) x + G(phi) y = 0
    let mut rows = [[d[1], d[2], -d[0]], [at_phi.f.re, at_phi.g.re, 0.0]];
    for row in rows.iter_mut() {
        let scale = row[0].abs().max(row[1].abs());
        if scale == 0.0 {
            return Err(Error::SingularSystem {
                condition: f64::INFINITY,
            });
        }
        row.iter_mut().for_each(|v| *v /= scale);
    }
    let m = nalgebra::Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
    let sv = m.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let sol = m
        .lu()
        .solve(&nalgebra::Vector2::new(rows[0][2], rows[1][2]))
        .ok_or(Error::SingularSystem { condition })?;
    Ok(Boundary {
        x: sol[0],
        y: sol[1],
        condition,
        derivatives: d,
        derivative_gap,
    })
}

/// Series expansions of the PGFs around `p = 1`.
#[derive(Clone, Copy, Debug)]
struct SeriesAtOne {
    pgf_n: Jet6,
    down: Jet6,
    total: Jet6,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanCheck {
    /// Mean from the series expansion at `p = 1`.
    pub series: f64,
    /// One-sided Richardson extrapolation of `(1 - P(1 - h)) / h`.
    pub richardson: f64,
    /// Gap relative to `max(|series|, 1)`: the extrapolation inherits the
    /// absolute rounding noise of `P` near `1`, which small means cannot absorb.
    pub relative_gap: f64,
}

impl MeanCheck {
    pub fn agrees(&self) -> bool {
        self.relative_gap <= MEAN_CHECK_TOL
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueueSummary {
    pub p_up: f64,
    pub p_down: f64,
    pub mean: f64,
    pub mu: f64,
    pub phi: f64,
    /// `E[mu^N]`.
    pub x: f64,
    /// `E[N mu^N]`.
    pub y: f64,
    pub pmf: Vec<f64>,
}

/// A fully solved queue: kernel, root, boundary constants and expansions.
#[derive(Clone, Debug)]
pub struct VacationAnalysis {
    spec: VacQueueSpec,
    kernel: Kernel,
    stability: Stability,
    phi: PhiRoot,
    boundary: Boundary,
    p_up: f64,
    at_one: SeriesAtOne,
    pgf_n_at_phi: Jet6,
    mean_check: MeanCheck,
}

impl VacationAnalysis {
    pub fn new(spec: &VacQueueSpec) -> Result<Self> {
        let stability = spec.check_stable()?;
        let kernel = Kernel::new(spec)?;
        let phi = phi_root(&kernel)?;
        let boundary = boundary_constants(&kernel, phi.phi)?;
        let mut analysis = VacationAnalysis {
            spec: *spec,
            kernel,
            stability,
            phi,
            boundary,
            p_up: spec.p_up(),
            at_one: SeriesAtOne {
                pgf_n: Jet::constant(1.0),
                down: Jet::constant(1.0),
                total: Jet::constant(1.0),
            },
            pgf_n_at_phi: Jet::constant(0.0),
            mean_check: MeanCheck {
                series: f64::NAN,
                richardson: f64::NAN,
                relative_gap: f64::NAN,
            },
        };
        analysis.pgf_n_at_phi = analysis.pgf_n_series(phi.phi)?;
        let pgf_n = analysis.pgf_n_series(1.0)?;
        let w = (Jet6::constant(1.0) - Jet6::variable(1.0)) * spec.arrival_rate;
        let up = pgf_n / analysis.kernel.dtilde(w)?;
        let down = Jet::div_removable(analysis.down_numerator(Jet6::variable(1.0), pgf_n)?, w);
        let total = up * analysis.p_up + down * (1.0 - analysis.p_up);
        analysis.at_one = SeriesAtOne { pgf_n, down, total };
        analysis.mean_check = analysis.richardson_check()?;
        Ok(analysis)
    }

    pub fn spec(&self) -> &VacQueueSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn stability(&self) -> Stability {
        self.stability
    }

    pub fn mu(&self) -> f64 {
        self.kernel.mu
    }

    pub fn phi(&self) -> PhiRoot {
        self.phi
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn p_up(&self) -> f64 {
        self.p_up
    }

    /// Expansion of `E[p^N]` at a real point where numerator and
    /// denominator both vanish.
    fn pgf_n_series(&self, at: f64) -> Result<Jet6> {
        let c = self.kernel.cleared(Jet6::variable(at))?;
        let num = c.f * self.boundary.x + c.g * self.boundary.y;
        let den = c.delta * c.delta - c.e;
        Ok(Jet::div_removable(num, den))
    }

    /// PGF of the queue length at the start of an uptime.
    pub fn pgf_n(&self, p: Complex64) -> Result<Complex64> {
        if (p - 1.0).norm() < SERIES_RADIUS {
            return Ok(self.at_one.pgf_n.eval_at(p - 1.0));
        }
        if (p - self.phi.phi).norm() < SERIES_RADIUS {
            return Ok(self.pgf_n_at_phi.eval_at(p - self.phi.phi));
        }
        let c = self.kernel.cleared(p)?;
        Ok((c.f * self.boundary.x + c.g * self.boundary.y) / (c.delta * c.delta - c.e))
    }

    /// PGF of the queue length at an arbitrary moment while the server is up.
    pub fn pgf_l_up(&self, p: Complex64) -> Result<Complex64> {
        let w = (1.0 - p) * self.spec.arrival_rate;
        Ok(self.pgf_n(p)? / self.kernel.dtilde(w)?)
    }

    /// `sum_i q_i(p) int exp(-c u) [D(r_i + b u) - chi(w) D(r_i + g(w) + b u)] du`.
    fn down_numerator<S: Scalar>(&self, p: S, pgf_n: S) -> Result<S> {
        let k = &self.kernel;
        let pair = &self.spec.pair;
        let Boundary { x, y, .. } = self.boundary;
        let c = k.cleared(p)?;
        let (a, kk) = (c.a / c.delta, c.k / c.delta);
        let q1 = a * (a * pgf_n + kk * x);
        let q2 = kk * (k.lim_ak * x + k.residue * y);
        let w = (S::one() - p) * k.lambda;
        let gw = pair.g_at(w);
        let chi = pair.chi_at(w);
        let r2 = S::from_real(k.lambda * (1.0 - k.mu));
        let (chi1, _, b, _) = pair.derivatives();
        let rate = -chi1;
        let integrand = |u: f64| -> Result<S> {
            let mut acc = S::zero();
            for (q, r) in [(q1, w), (q2, r2)] {
                acc = acc + q * (k.dtilde(r + b * u)? - chi * k.dtilde(r + gw + b * u)?);
            }
            Ok(acc)
        };
        let at_zero = integrand(0.0)?;
        if b == 0.0 {
            return Ok(at_zero / rate);
        }
        let bound = (q1.magnitude() + q2.magnitude()) * (1.0 + chi.magnitude());
        let bound = bound.max(at_zero.magnitude());
        // absolute floor at roundoff level of the individual terms
        let tol = 1e-15 * bound / rate;
        Ok(laplace_half_line_rel(integrand, rate, bound, tol, KAPPA_REL_TOL)?.value)
    }

    fn down_direct(&self, p: Complex64) -> Result<Complex64> {
        let w = (1.0 - p) * self.spec.arrival_rate;
        Ok(self.down_numerator(p, self.pgf_n(p)?)? / w)
    }

    /// PGF of the queue length at an arbitrary moment while the server is down.
    pub fn pgf_l_down(&self, p: Complex64) -> Result<Complex64> {
        if (p - 1.0).norm() < SERIES_RADIUS {
            return Ok(self.at_one.down.eval_at(p - 1.0));
        }
        let mu = self.kernel.mu;
        if (p - mu).norm() < CONTOUR_SWITCH {
            // the two terms have opposite poles at mu; average over a circle instead
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..CONTOUR_POINTS {
                let theta = std::f64::consts::TAU * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
                let z = mu + Complex64::from_polar(CONTOUR_RADIUS, theta);
                acc += self.down_direct(z)? * (z - mu) / (z - p);
            }
            return Ok(acc / CONTOUR_POINTS as f64);
        }
        self.down_direct(p)
    }

    /// PGF of the time-stationary queue length.
    pub fn pgf_l(&self, p: Complex64) -> Result<Complex64> {
        if (p - 1.0).norm() < SERIES_RADIUS {
            return Ok(self.at_one.total.eval_at(p - 1.0));
        }
        Ok(self.pgf_l_up(p)? * self.p_up + self.pgf_l_down(p)? * (1.0 - self.p_up))
    }

    /// Whether the expansion at `p = 1` is well conditioned.
    pub fn series_reliable(&self) -> bool {
        1.0 - self.phi.phi > SERIES_CONDITION_GAP
    }

    pub fn mean_l(&self) -> f64 {
        if self.series_reliable() {
            self.at_one.total.coeff(1)
        } else {
            self.mean_check.richardson
        }
    }

    /// `E[L (L - 1)]`.
    pub fn second_factorial_moment(&self) -> f64 {
        2.0 * self.at_one.total.coeff(2)
    }

    /// Mean of the queue length at uptime starts.
    pub fn mean_n(&self) -> f64 {
        self.at_one.pgf_n.coeff(1)
    }

    /// Series mean against the Richardson mean.
    pub fn mean_check(&self) -> MeanCheck {
        self.mean_check
    }

    fn richardson_check(&self) -> Result<MeanCheck> {
        let levels = 5;
        let mut table = Vec::with_capacity(levels);
        let mut h = 1e-3;
        for _ in 0..levels {
            table.push((1.0 - self.pgf_l(c64(1.0 - h))?.re) / h);
            h *= 0.5;
        }
        // error expansion in powers of h: eliminate one order per sweep
        for order in 1..levels {
            let factor = 2f64.powi(order as i32);
            for i in (order..levels).rev() {
                table[i] = (factor * table[i] - table[i - 1]) / (factor - 1.0);
            }
        }
        let richardson = table[levels - 1];
        let series = self.at_one.total.coeff(1);
        Ok(MeanCheck {
            series,
            richardson,
            relative_gap: (series - richardson).abs() / series.abs().max(1.0),
        })
    }

    /// `P(L = n)` for `n < len`, by trapezoidal inversion on a circle.
    pub fn pmf_l(&self, len: usize) -> Result<Vec<f64>> {
        if len == 0 || len > MAX_PMF_LEN {
            return Err(Error::InvalidParameter(format!(
                "pmf length must lie in 1..={MAX_PMF_LEN}, got {len}"
            )));
        }
        let n = 2 * len;
        let mut radius = (1e-10f64.ln() / n as f64).exp();
        let mu = self.kernel.mu;
        if (radius - mu).abs() < 1e-3 {
            radius = mu - 1e-3;
        }
        let half: Vec<Complex64> = (0..=n / 2)
            .into_par_iter()
            .map(|k| {
                let z = Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64);
                self.pgf_l(z)
            })
            .collect::<Result<_>>()?;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (k, v) in half.iter().enumerate() {
            buf[k] = *v;
            if k > 0 && k < n - k {
                buf[n - k] = v.conj();
            }
        }
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        Ok(buf[..len]
            .iter()
            .enumerate()
            .map(|(j, v)| v.re / (n as f64 * radius.powi(j as i32)))
            .collect())
    }

    pub fn summary(&self, pmf_len: usize) -> Result<QueueSummary> {
        Ok(QueueSummary {
            p_up: self.p_up,
            p_down: 1.0 - self.p_up,
            mean: self.mean_l(),
            mu: self.kernel.mu,
            phi: self.phi.phi,
            x: self.boundary.x,
            y: self.boundary.y,
            pmf: if pmf_len > 0 { self.pmf_l(pmf_len)? } else { Vec::new() },
        })
    }
}

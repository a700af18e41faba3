//! One-dependent downtimes: `E[exp(-s D(k+1)) | D(k) = t] = chi(s) exp(-g(s) t)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::dist::{fit_two_moment, DistSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default truncation tolerance for the stationary downtime product.
pub const PRODUCT_TOL: f64 = 1e-14;

const MAX_PRODUCT_TERMS: usize = 200_000;

/// Exponent function `g` of the conditional downtime transform. Every
/// variant has a completely monotone derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case", deny_unknown_fields)]
pub enum GFunction {
    Zero,
    /// `g(s) = slope * s`: the increment over `t` is `slope * t`.
    Linear { slope: f64 },
    /// `g(s) = rate * (1 - jump(s))`: Poisson(`rate * t`) many jumps.
    CompoundPoisson { rate: f64, jump: DistSpec },
    /// `g(s) = -ln base(s)`: the increment over `t` has LST `base(s)^t`.
    LogLst { base: DistSpec },
}

impl GFunction {
    pub fn eval<S: Scalar>(&self, s: S) -> S {
        match *self {
            GFunction::Zero => S::zero(),
            GFunction::Linear { slope } => s * slope,
            GFunction::CompoundPoisson { rate, jump } => jump.complement(s) * rate,
            GFunction::LogLst { base } => -(-base.complement(s)).ln_1p(),
        }
    }

    /// `g'(0)`, the mean increment per unit of the previous downtime.
    pub fn d1(&self) -> f64 {
        match *self {
            GFunction::Zero => 0.0,
            GFunction::Linear { slope } => slope,
            GFunction::CompoundPoisson { rate, jump } => rate * jump.moments().m1,
            GFunction::LogLst { base } => base.moments().m1,
        }
    }

    /// `g''(0)`, minus the increment variance per unit of the previous downtime.
    pub fn d2(&self) -> f64 {
        match *self {
            GFunction::Zero | GFunction::Linear { .. } => 0.0,
            GFunction::CompoundPoisson { rate, jump } => -rate * jump.moments().m2,
            GFunction::LogLst { base } => -base.moments().variance(),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            GFunction::Zero => "zero",
            GFunction::Linear { .. } => "linear",
            GFunction::CompoundPoisson { .. } => "compound_poisson",
            GFunction::LogLst { .. } => "log_lst",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GFunction::Zero => Ok(()),
            GFunction::Linear { slope } if slope.is_finite() && slope >= 0.0 => Ok(()),
            GFunction::Linear { slope } => Err(Error::InvalidParameter(format!(
                "linear g needs a nonnegative slope, got {slope}"
            ))),
            GFunction::CompoundPoisson { rate, jump } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "compound Poisson g needs a positive rate, got {rate}"
                    )));
                }
                jump.validate()
            }
            GFunction::LogLst { base } => base.validate(),
        }
    }

    pub fn is_samplable(&self) -> bool {
        self.check_samplable().is_ok()
    }

    fn check_samplable(&self) -> Result<()> {
        match self {
            GFunction::LogLst {
                base: DistSpec::Exponential { .. } | DistSpec::Deterministic { .. },
            } => Ok(()),
            GFunction::LogLst { base } => Err(Error::Unsamplable(format!(
                "log_lst with {} base",
                base.family()
            ))),
            _ => Ok(()),
        }
    }

    /// Draw the increment accumulated over a previous downtime of length `t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        match *self {
            GFunction::Zero => Ok(0.0),
            GFunction::Linear { slope } => Ok(slope * t),
            GFunction::CompoundPoisson { rate, jump } => {
                let n = Poisson::new(rate * t).expect("positive mean").sample(rng) as u64;
                if n == 0 {
                    return Ok(0.0);
                }
                Ok(match jump {
                    DistSpec::Exponential { rate: r } => Gamma::new(n as f64, 1.0 / r)
                        .expect("positive shape")
                        .sample(rng),
                    DistSpec::Deterministic { value } => n as f64 * value,
                    _ => (0..n).map(|_| jump.sample(rng)).sum(),
                })
            }
            GFunction::LogLst { base } => match base {
                DistSpec::Exponential { rate } => {
                    Ok(Gamma::new(t, 1.0 / rate).expect("positive shape").sample(rng))
                }
                DistSpec::Deterministic { value } => Ok(value * t),
                _ => Err(Error::Unsamplable(format!("log_lst with {} base", base.family()))),
            },
        }
    }
}

/// Which infinitely divisible family `from_derivatives` uses for the increment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementForm {
    /// Compound Poisson with exponential jumps.
    #[default]
    CompoundPoisson,
    /// `exp(-g)` is the two-moment fit of the per-unit increment.
    LogLst,
}

/// Stationary downtime moments together with the lag-1 dependence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DowntimeStats {
    pub mean: f64,
    pub second_moment: f64,
    /// `E[D(k) D(k+1)]`.
    pub joint: f64,
    pub covariance: f64,
    pub correlation: f64,
}

impl DowntimeStats {
    pub fn from_covariance(mean: f64, second_moment: f64, covariance: f64) -> Self {
        let var = second_moment - mean * mean;
        DowntimeStats {
            mean,
            second_moment,
            joint: covariance + mean * mean,
            covariance,
            correlation: if var > 0.0 { covariance / var } else { 0.0 },
        }
    }

    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }

    pub fn scv(&self) -> f64 {
        self.variance() / (self.mean * self.mean)
    }
}

/// A truncated product value with its a priori remainder bound.
#[derive(Clone, Copy, Debug)]
pub struct Truncated<S> {
    pub value: S,
    /// Bound on `|value - limit|`.
    pub remainder: f64,
    pub terms: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairConfig", into = "PairConfig")]
pub struct DependencePair {
    chi: DistSpec,
    g: GFunction,
    chi_d1: f64,
    chi_d2: f64,
    g_d1: f64,
    g_d2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub chi: DistSpec,
    pub g: GFunction,
}

impl TryFrom<PairConfig> for DependencePair {
    type Error = Error;
    fn try_from(c: PairConfig) -> Result<Self> {
        DependencePair::new(c.chi, c.g)
    }
}

impl From<DependencePair> for PairConfig {
    fn from(p: DependencePair) -> Self {
        PairConfig { chi: p.chi, g: p.g }
    }
}

impl DependencePair {
    pub fn new(chi: DistSpec, g: GFunction) -> Result<Self> {
        chi.validate()?;
        g.validate()?;
        let m = chi.moments();
        let g_d1 = g.d1();
        if !(g_d1 < 1.0) {
            return Err(Error::Divergent(g_d1));
        }
        Ok(DependencePair {
            chi,
            g,
            chi_d1: -m.m1,
            chi_d2: m.m2,
            g_d1,
            g_d2: g.d2(),
        })
    }

    /// Downtimes are i.i.d. with law `dist`.
    pub fn independent(dist: DistSpec) -> Result<Self> {
        Self::new(dist, GFunction::Zero)
    }

    /// `D(k+1) = C_1 + ... + C_{J+1}` with `C_i ~ Exp(delta)` and
    /// `J ~ Poisson(D(k))`; the stationary downtime is Exp(delta - 1).
    pub fn phase_compound(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "phase-compound dependence needs delta > 1 for a stationary downtime, got {delta}"
            )));
        }
        let c = DistSpec::exponential(delta)?;
        Self::new(c, GFunction::CompoundPoisson { rate: 1.0, jump: c })
    }

    /// Build a pair from `chi'(0), chi''(0), g'(0), g''(0)` by two-moment fits.
    pub fn from_derivatives(chi1: f64, chi2: f64, g1: f64, g2: f64) -> Result<Self> {
        Self::from_derivatives_with(chi1, chi2, g1, g2, IncrementForm::default())
    }

    pub fn from_derivatives_with(
        chi1: f64,
        chi2: f64,
        g1: f64,
        g2: f64,
        form: IncrementForm,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InfeasibleDerivatives(msg));
        if !(chi1.is_finite() && chi1 < 0.0) {
            return bad(format!("chi'(0) = {chi1} must be negative"));
        }
        if !(chi2.is_finite() && chi2 >= chi1 * chi1 * (1.0 - 1e-12)) {
            return bad(format!(
                "chi''(0) = {chi2} must be at least chi'(0)^2 = {} (nonnegative variance)",
                chi1 * chi1
            ));
        }
        if !(g1.is_finite() && (0.0..1.0).contains(&g1)) {
            return bad(format!("g'(0) = {g1} must lie in [0, 1)"));
        }
        if !(g2.is_finite() && g2 <= 0.0) {
            return bad(format!("g''(0) = {g2} must be <= 0 (nonnegative increment variance)"));
        }
        if g1 == 0.0 && g2 != 0.0 {
            return bad(format!(
                "g'(0) = 0 forces g''(0) = 0 (a zero-mean nonnegative increment), got {g2}"
            ));
        }
        let chi = fit_two_moment(-chi1, chi2.max(chi1 * chi1))?;
        let g = if g1 == 0.0 {
            GFunction::Zero
        } else if g2 == 0.0 {
            GFunction::Linear { slope: g1 }
        } else {
            match form {
                IncrementForm::CompoundPoisson => {
                    // jump SCV 1: exponential jumps with mean -g2 / (2 g1)
                    let rate = 2.0 * g1 * g1 / -g2;
                    let jump = fit_two_moment(g1 / rate, -g2 / rate)?;
                    GFunction::CompoundPoisson { rate, jump }
                }
                IncrementForm::LogLst => GFunction::LogLst {
                    base: fit_two_moment(g1, g1 * g1 - g2)?,
                },
            }
        };
        Self::new(chi, g)
    }

    pub fn chi(&self) -> &DistSpec {
        &self.chi
    }

    pub fn g(&self) -> &GFunction {
        &self.g
    }

    /// `(chi'(0), chi''(0), g'(0), g''(0))`.
    pub fn derivatives(&self) -> (f64, f64, f64, f64) {
        (self.chi_d1, self.chi_d2, self.g_d1, self.g_d2)
    }

    pub fn chi_at<S: Scalar>(&self, s: S) -> S {
        self.chi.transform(s)
    }

    pub fn g_at<S: Scalar>(&self, s: S) -> S {
        self.g.eval(s)
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.g, GFunction::Zero)
    }

    /// Stationary downtime transform `prod_j chi(g^(j)(s))`, truncated once the
    /// tail product is provably within `tol` (scaled by `min(1, |s|)`) of one.
    pub fn stationary_transform<S: Scalar>(&self, s: S, tol: f64) -> Result<Truncated<S>> {
        let m_chi = -self.chi_d1;
        let rate = self.g_d1;
        let target = tol * s.magnitude().min(1.0);
        let mut u = s;
        let mut value = S::one();
        for j in 0..MAX_PRODUCT_TERMS {
            // sum_{i >= j} |1 - chi(u_i)| <= m_chi |u_j| / (1 - g'(0))
            let tail = m_chi * u.magnitude() / (1.0 - rate);
            if tail <= target || u.magnitude() == 0.0 {
                return Ok(Truncated {
                    value,
                    remainder: tail.exp_m1(),
                    terms: j,
                });
            }
            value = value * self.chi.transform(u);
            u = self.g.eval(u);
        }
        Err(Error::NoConvergence {
            what: "stationary downtime product",
            iterations: MAX_PRODUCT_TERMS,
            last_change: m_chi * u.magnitude() / (1.0 - rate),
        })
    }

    /// The product with exactly `depth` factors.
    pub fn stationary_transform_depth<S: Scalar>(&self, s: S, depth: usize) -> S {
        let mut u = s;
        let mut value = S::one();
        for _ in 0..depth {
            value = value * self.chi.transform(u);
            u = self.g.eval(u);
        }
        value
    }

    pub fn stationary_lst(&self, s: Complex64, tol: f64) -> Result<Complex64> {
        Ok(self.stationary_lst_bounded(s, tol)?.value)
    }

    pub fn stationary_lst_bounded(&self, s: Complex64, tol: f64) -> Result<Truncated<Complex64>> {
        if s.re < 0.0 || !s.re.is_finite() || !s.im.is_finite() {
            return Err(Error::OutsideHalfPlane { re: s.re, im: s.im });
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        self.stationary_transform(s, tol)
    }

    /// `E[exp(-s D(k) - z D(k+1))]` in steady state.
    pub fn bivariate_lst(&self, s: Complex64, z: Complex64, tol: f64) -> Result<Complex64> {
        if z.re < 0.0 {
            return Err(Error::OutsideHalfPlane { re: z.re, im: z.im });
        }
        let shifted = s + self.g.eval(z);
        Ok(self.chi.transform(z) * self.stationary_lst(shifted, tol)?)
    }

    /// `(E[D], E[D^2])` of the stationary downtime.
    pub fn stationary_moments(&self) -> (f64, f64) {
        let (c1, c2, g1, g2) = self.derivatives();
        let mean = c1 / (g1 - 1.0);
        let second = (c2 - mean * (2.0 * c1 * g1 + g2)) / (1.0 - g1 * g1);
        (mean, second)
    }

    pub fn lag1_stats(&self) -> DowntimeStats {
        let (mean, second) = self.stationary_moments();
        let joint = -self.chi_d1 * mean + self.g_d1 * second;
        let mut stats = DowntimeStats::from_covariance(mean, second, joint - mean * mean);
        stats.joint = joint;
        stats
    }

    /// Next downtime given the previous one.
    pub fn sample_next<R: Rng + ?Sized>(&self, prev: f64, rng: &mut R) -> Result<f64> {
        Ok(self.chi.sample(rng) + self.g.sample_increment(prev, rng)?)
    }

    pub fn check_samplable(&self) -> Result<()> {
        self.g.check_samplable()
    }

    /// Pair describing `c D` for every downtime `D`.
    pub fn rescale(&self, c: f64) -> Result<Self> {
        let g = match self.g {
            GFunction::Zero => GFunction::Zero,
            GFunction::Linear { slope } => GFunction::Linear { slope },
            GFunction::CompoundPoisson { rate, jump } => GFunction::CompoundPoisson {
                rate: rate / c,
                jump: jump.scale(c)?,
            },
            GFunction::LogLst { .. } => {
                return Err(Error::InvalidParameter(
                    "log_lst exponents are not closed under time rescaling".into(),
                ))
            }
        };
        Self::new(self.chi.scale(c)?, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Jet;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Batch-means standard error of a stationary sequence.
    fn batch_se(xs: &[f64], batches: usize) -> f64 {
        let size = xs.len() / batches;
        let means: Vec<f64> = xs
            .chunks_exact(size)
            .map(|b| b.iter().sum::<f64>() / size as f64)
            .collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        (var / means.len() as f64).sqrt()
    }

    fn downtime_path(pair: &DependencePair, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = pair.chi().sample(&mut rng);
        for _ in 0..1000 {
            d = pair.sample_next(d, &mut rng).unwrap();
        }
        (0..n)
            .map(|_| {
                d = pair.sample_next(d, &mut rng).unwrap();
                d
            })
            .collect()
    }

    #[test]
    fn independent_product_is_chi() {
        let chi = DistSpec::hyper2(0.3, 2.0, 0.5).unwrap();
        let pair = DependencePair::independent(chi).unwrap();
        for s in [c(0.0, 0.0), c(0.7, 0.0), c(1.3, -2.0), c(0.0, 5.0)] {
            assert_eq!(pair.stationary_lst(s, PRODUCT_TOL).unwrap(), chi.lst(s).unwrap());
        }
        let (m, m2) = DependencePair::independent(DistSpec::exponential(1.0).unwrap())
            .unwrap()
            .stationary_moments();
        assert_eq!((m, m2), (1.0, 2.0));
        let (_, m2) = DependencePair::independent(DistSpec::deterministic(2.0).unwrap())
            .unwrap()
            .stationary_moments();
        assert_eq!(m2, 4.0);
        assert_eq!(pair.lag1_stats().correlation, 0.0);
    }

    #[test]
    fn phase_compound_closed_forms() {
        let pair = DependencePair::phase_compound(2.0).unwrap();
        let one = c(1.0, 0.0);
        assert!((pair.chi_at(one) - 2.0 / 3.0).norm() < 1e-15);
        assert!((pair.g_at(one) - 1.0 / 3.0).norm() < 1e-15);
        assert!((pair.stationary_lst(one, PRODUCT_TOL).unwrap() - 0.5).norm() < 1e-12);
        for i in 0..20 {
            let s = c(0.25 * i as f64, 0.6 * i as f64 - 5.0);
            let expected = 1.0 / (1.0 + s);
            let got = pair.stationary_lst(s, PRODUCT_TOL).unwrap();
            assert!((got - expected).norm() < 1e-10, "{s}: {got} vs {expected}");
        }
        let (c1, _, g1, _) = pair.derivatives();
        assert_eq!((c1, g1), (-0.5, 0.5));
        assert!((pair.stationary_moments().0 - 1.0).abs() < 1e-15);
        assert!(matches!(
            DependencePair::phase_compound(1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn phase_compound_correlation_is_inverse_delta() {
        for delta in [2.0, 4.0, 10.0] {
            let r = DependencePair::phase_compound(delta).unwrap().lag1_stats().correlation;
            assert!((r - 1.0 / delta).abs() < 1e-13, "{delta}: {r}");
        }
        let r = DependencePair::phase_compound(1e6).unwrap().lag1_stats().correlation;
        assert!(r < 1e-5);
    }

    #[test]
    fn simulated_correlation_matches() {
        let pair = DependencePair::phase_compound(2.0).unwrap();
        let xs = downtime_path(&pair, 1_000_000, 3);
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let cov = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (n - 1.0);
        assert!((cov / var - 0.5).abs() < 0.01, "r = {}", cov / var);
    }

    #[test]
    fn bivariate_transform_matches_simulation() {
        let pair = DependencePair::from_derivatives(-0.8, 1.5, 0.4, -0.3).unwrap();
        let xs = downtime_path(&pair, 1_000_000, 5);
        for (s, z) in [
            (0.1, 0.1),
            (0.5, 0.2),
            (1.0, 1.0),
            (0.2, 2.0),
            (2.0, 0.3),
            (0.0, 0.7),
            (0.7, 0.0),
            (3.0, 3.0),
            (0.05, 1.5),
            (1.5, 0.05),
        ] {
            let terms: Vec<f64> = xs.windows(2).map(|w| (-s * w[0] - z * w[1]).exp()).collect();
            let mean = terms.iter().sum::<f64>() / terms.len() as f64;
            let se = batch_se(&terms, 50);
            let exact = pair.bivariate_lst(c(s, 0.0), c(z, 0.0), PRODUCT_TOL).unwrap().re;
            assert!((mean - exact).abs() < 3.0 * se, "({s}, {z}): {mean} vs {exact} (se {se})");
        }
    }

    #[test]
    fn moments_match_transform_derivatives() {
        for pair in [
            DependencePair::phase_compound(3.0).unwrap(),
            DependencePair::from_derivatives(-0.8, 1.5, 0.4, -0.3).unwrap(),
            DependencePair::from_derivatives(-1.0, 1.2, 0.7, 0.0).unwrap(),
            DependencePair::from_derivatives_with(-0.5, 0.6, 0.3, -0.05, IncrementForm::LogLst)
                .unwrap(),
        ] {
            let (m1, m2) = pair.stationary_moments();
            // complex step for the mean, Richardson-extrapolated real-part
            // differences for the second moment
            let h = 1e-8 * m1;
            let d = pair.stationary_lst(c(0.0, h), PRODUCT_TOL).unwrap();
            assert!(rel(-d.im / h, m1) < 1e-6);
            let sec = |h: f64| {
                2.0 * (1.0 - pair.stationary_lst(c(0.0, h), PRODUCT_TOL).unwrap().re) / (h * h)
            };
            let h = 2e-3 / m1;
            let rich = (4.0 * sec(h / 2.0) - sec(h)) / 3.0;
            assert!(rel(rich, m2) < 1e-6, "{rich} vs {m2}");

            // exact Taylor coefficients agree as well
            let t = pair
                .stationary_transform(Jet::<3>::variable(0.0), PRODUCT_TOL)
                .unwrap()
                .value;
            assert!(rel(-t.coeff(1), m1) < 1e-12);
            assert!(rel(2.0 * t.coeff(2), m2) < 1e-12);
        }
    }

    #[test]
    fn from_derivatives_examples() {
        let p = DependencePair::from_derivatives(-1.0, 2.0, 0.0, 0.0).unwrap();
        assert!(p.is_independent());
        assert_eq!(*p.chi(), DistSpec::Exponential { rate: 1.0 });

        for g2 in [-0.25, -0.5] {
            let p = DependencePair::from_derivatives(-0.5, 0.5, 0.5, g2).unwrap();
            assert!((p.lag1_stats().correlation - 0.5).abs() < 1e-12);
        }

        let p = DependencePair::from_derivatives(-1.0, 1.5, 0.2, 0.0).unwrap();
        assert_eq!(*p.g(), GFunction::Linear { slope: 0.2 });

        assert!(matches!(
            DependencePair::from_derivatives(-1.0, 0.5, 0.2, -0.1),
            Err(Error::InfeasibleDerivatives(_))
        ));
        assert!(matches!(
            DependencePair::from_derivatives(-1.0, 2.0, 1.0, -0.1),
            Err(Error::InfeasibleDerivatives(_))
        ));
        assert!(matches!(
            DependencePair::from_derivatives(-1.0, 2.0, 0.3, 0.1),
            Err(Error::InfeasibleDerivatives(_))
        ));
        assert!(matches!(
            DependencePair::from_derivatives(-1.0, 2.0, 0.0, -0.1),
            Err(Error::InfeasibleDerivatives(_))
        ));
    }

    #[test]
    fn divergent_g_rejected() {
        let g = GFunction::Linear { slope: 1.0 };
        assert!(matches!(
            DependencePair::new(DistSpec::exponential(1.0).unwrap(), g),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn unsamplable_increment_refused() {
        let p = DependencePair::from_derivatives_with(-0.5, 0.6, 0.3, -0.05, IncrementForm::LogLst)
            .unwrap();
        // increment SCV 0.05 / 0.09 < 1 fits an Erlang mixture base
        assert!(matches!(p.g(), GFunction::LogLst { base: DistSpec::ErlangMixture { .. } }));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(p.sample_next(1.0, &mut rng), Err(Error::Unsamplable(_))));
        let exp_base = GFunction::LogLst { base: DistSpec::exponential(4.0).unwrap() };
        assert!(exp_base.is_samplable());
    }

    #[test]
    fn config_round_trip() {
        let pair = DependencePair::phase_compound(2.0).unwrap();
        let text = toml::to_string(&pair).unwrap();
        let back: DependencePair = toml::from_str(&text).unwrap();
        assert_eq!(back, pair);
        let text = "[chi]\nfamily = \"exponential\"\nparams = { rate = 2.0 }\n\
                    [g]\ntag = \"linear\"\nslope = 1.5\n";
        assert!(toml::from_str::<DependencePair>(text).is_err());
    }

    fn feasible_derivatives() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (0.05f64..5.0, 0.0f64..4.0, 0.0f64..0.95, 0.0f64..3.0, 0u8..3).prop_map(
            |(m, scv, g1, inc_scv, kind)| {
                let g2 = match kind {
                    0 => 0.0,
                    _ => -inc_scv * g1 * g1,
                };
                let g1 = if kind == 2 && g1 < 0.05 { 0.0 } else { g1 };
                let g2 = if g1 == 0.0 { 0.0 } else { g2 };
                (-m, m * m * (1.0 + scv), g1, g2)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn stationary_identity_holds((c1, c2, g1, g2) in feasible_derivatives(),
                                     pts in proptest::collection::vec((0.0f64..8.0, -8.0f64..8.0), 50)) {
            let pair = DependencePair::from_derivatives(c1, c2, g1, g2).unwrap();
            for (re, im) in pts {
                let s = c(re, im);
                let lhs = pair.stationary_lst(s, PRODUCT_TOL).unwrap();
                let rhs = pair.chi_at(s) * pair.stationary_lst(pair.g_at(s), PRODUCT_TOL).unwrap();
                prop_assert!((lhs - rhs).norm() < 1e-9);
            }
        }

        #[test]
        fn derivative_round_trip((c1, c2, g1, g2) in feasible_derivatives()) {
            let pair = DependencePair::from_derivatives(c1, c2, g1, g2).unwrap();
            let (a, b, x, y) = pair.derivatives();
            prop_assert!((a - c1).abs() <= 1e-12 * c1.abs());
            prop_assert!((b - c2).abs() <= 1e-12 * c2.abs());
            prop_assert!((x - g1).abs() <= 1e-12);
            prop_assert!((y - g2).abs() <= 1e-12 * (1.0 + g2.abs()));
            let st = pair.lag1_stats();
            prop_assert!((st.correlation - g1).abs() < 1e-12);
            prop_assert!(st.mean > 0.0 && st.second_moment > 0.0);
        }

        #[test]
        fn halving_tolerance_within_remainder((c1, c2, g1, g2) in feasible_derivatives(),
                                              re in 0.0f64..4.0, im in -4.0f64..4.0) {
            let pair = DependencePair::from_derivatives(c1, c2, g1, g2).unwrap();
            let s = c(re, im);
            let coarse = pair.stationary_lst_bounded(s, 1e-8).unwrap();
            let fine = pair.stationary_lst_bounded(s, 5e-9).unwrap();
            prop_assert!((coarse.value - fine.value).norm() <= coarse.remainder + 1e-15);
        }

        #[test]
        fn correlation_invariant_under_rescaling((c1, c2, g1, g2) in feasible_derivatives(),
                                                 scale in 0.01f64..100.0) {
            let pair = DependencePair::from_derivatives(c1, c2, g1, g2).unwrap();
            let scaled = pair.rescale(scale).unwrap();
            let (a, b) = (pair.lag1_stats(), scaled.lag1_stats());
            prop_assert!(rel(b.mean, scale * a.mean) < 1e-12);
            prop_assert!((b.correlation - a.correlation).abs() < 1e-12);
        }
    }
}

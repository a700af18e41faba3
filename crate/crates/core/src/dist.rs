//! Parametric nonnegative distributions with closed-form transforms.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative slack used when deciding that an SCV equals 0 or 1.
const SCV_SNAP: f64 = 1e-12;

/// Above this shape the Erlang power is taken through `exp((k-1) ln z)`.
const POWU_LIMIT: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistConfig", into = "DistConfig")]
pub enum DistSpec {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    /// Erlang(k, rate) with probability `q`, Erlang(k-1, rate) otherwise.
    ErlangMixture { k: u64, rate: f64, q: f64 },
    Hyper2 { p1: f64, rate1: f64, rate2: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    pub scv: f64,
}

impl MomentSummary {
    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
    }
}

impl DistSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = DistSpec::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        let d = DistSpec::Deterministic { value };
        d.validate()?;
        Ok(d)
    }

    pub fn erlang_mixture(k: u64, rate: f64, q: f64) -> Result<Self> {
        let d = DistSpec::ErlangMixture { k, rate, q };
        d.validate()?;
        Ok(d)
    }

    pub fn hyper2(p1: f64, rate1: f64, rate2: f64) -> Result<Self> {
        let d = DistSpec::Hyper2 { p1, rate1, rate2 };
        d.validate()?;
        Ok(d)
    }

    /// Two-phase hyperexponential with balanced means for a given mean and SCV > 1.
    pub fn hyper2_balanced(mean: f64, scv: f64) -> Result<Self> {
        positive("mean", mean)?;
        if !(scv > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "balanced H2 needs scv > 1, got {scv}"
            )));
        }
        let p1 = 0.5 * (1.0 + ((scv - 1.0) / (scv + 1.0)).sqrt());
        Self::hyper2(p1, 2.0 * p1 / mean, 2.0 * (1.0 - p1) / mean)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistSpec::Exponential { rate } => positive("rate", rate),
            DistSpec::Deterministic { value } => positive("value", value),
            DistSpec::ErlangMixture { k, rate, q } => {
                if k < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "Erlang mixture needs k >= 2, got {k}"
                    )));
                }
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::InvalidParameter(format!(
                        "Erlang mixture weight q must lie in [0, 1], got {q}"
                    )));
                }
                positive("rate", rate)
            }
            DistSpec::Hyper2 { p1, rate1, rate2 } => {
                if !(p1 > 0.0 && p1 < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "H2 branch probability p1 must lie in (0, 1), got {p1}"
                    )));
                }
                positive("rate1", rate1)?;
                positive("rate2", rate2)
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            DistSpec::Exponential { .. } => "exponential",
            DistSpec::Deterministic { .. } => "deterministic",
            DistSpec::ErlangMixture { .. } => "erlang_mixture",
            DistSpec::Hyper2 { .. } => "hyper2",
        }
    }

    pub fn exponential_rate(&self) -> Option<f64> {
        match *self {
            DistSpec::Exponential { rate } => Some(rate),
            _ => None,
        }
    }

    /// `E[exp(-sX)]` on the closed right half-plane.
    pub fn lst(&self, s: Complex64) -> Result<Complex64> {
        if s.re < 0.0 || !s.re.is_finite() || !s.im.is_finite() {
            return Err(Error::OutsideHalfPlane { re: s.re, im: s.im });
        }
        Ok(self.transform(s))
    }

    pub fn lst_real(&self, s: f64) -> Result<f64> {
        Ok(self.lst(Complex64::new(s, 0.0))?.re)
    }

    /// Analytic continuation of the LST, evaluated on any [`Scalar`].
    pub fn transform<S: Scalar>(&self, s: S) -> S {
        match *self {
            DistSpec::Exponential { rate } => S::from_real(rate) / (s + rate),
            DistSpec::Deterministic { value } => (s * -value).exp(),
            DistSpec::ErlangMixture { k, rate, q } => {
                let z = S::from_real(rate) / (s + rate);
                erlang_power(s, z, k - 1, rate) * (z * q + (1.0 - q))
            }
            DistSpec::Hyper2 { p1, rate1, rate2 } => {
                S::from_real(p1 * rate1) / (s + rate1) + S::from_real((1.0 - p1) * rate2) / (s + rate2)
            }
        }
    }

    /// `1 - LST(s)` without cancellation for small `s`.
    pub fn complement<S: Scalar>(&self, s: S) -> S {
        match *self {
            DistSpec::Exponential { rate } => s / (s + rate),
            DistSpec::Deterministic { value } => -(s * -value).exp_m1(),
            DistSpec::ErlangMixture { k, rate, q } => {
                // 1 - z^(k-1) + q z^(k-1) (1 - z)
                let log_z = -(s / rate).ln_1p();
                let head = -(log_z * (k - 1) as f64).exp_m1();
                let z = S::from_real(rate) / (s + rate);
                let zk1 = erlang_power(s, z, k - 1, rate);
                head + zk1 * (s / (s + rate)) * q
            }
            DistSpec::Hyper2 { p1, rate1, rate2 } => {
                s / (s + rate1) * p1 + s / (s + rate2) * (1.0 - p1)
            }
        }
    }

    pub fn moments(&self) -> MomentSummary {
        let (m1, m2) = match *self {
            DistSpec::Exponential { rate } => (1.0 / rate, 2.0 / (rate * rate)),
            DistSpec::Deterministic { value } => (value, value * value),
            DistSpec::ErlangMixture { k, rate, q } => {
                let k = k as f64;
                ((k - 1.0 + q) / rate, k * (k - 1.0 + 2.0 * q) / (rate * rate))
            }
            DistSpec::Hyper2 { p1, rate1, rate2 } => (
                p1 / rate1 + (1.0 - p1) / rate2,
                2.0 * (p1 / (rate1 * rate1) + (1.0 - p1) / (rate2 * rate2)),
            ),
        };
        let scv = match self {
            DistSpec::Deterministic { .. } => 0.0,
            DistSpec::Exponential { .. } => 1.0,
            _ => (m2 / (m1 * m1) - 1.0).max(0.0),
        };
        MomentSummary { m1, m2, scv }
    }

    pub fn mean(&self) -> f64 {
        self.moments().m1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::Exponential { rate } => sample_exp(rate, rng),
            DistSpec::Deterministic { value } => value,
            DistSpec::ErlangMixture { k, rate, q } => {
                let shape = if rng.random::<f64>() < q { k } else { k - 1 };
                sample_erlang(shape, rate, rng)
            }
            DistSpec::Hyper2 { p1, rate1, rate2 } => {
                let rate = if rng.random::<f64>() < p1 { rate1 } else { rate2 };
                sample_exp(rate, rng)
            }
        }
    }

    /// Distribution of `c X`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        positive("scale factor", c)?;
        Ok(match *self {
            DistSpec::Exponential { rate } => DistSpec::Exponential { rate: rate / c },
            DistSpec::Deterministic { value } => DistSpec::Deterministic { value: value * c },
            DistSpec::ErlangMixture { k, rate, q } => DistSpec::ErlangMixture { k, rate: rate / c, q },
            DistSpec::Hyper2 { p1, rate1, rate2 } => DistSpec::Hyper2 {
                p1,
                rate1: rate1 / c,
                rate2: rate2 / c,
            },
        })
    }
}

/// `z^n` for the Erlang factor `z = rate / (rate + s)`.
fn erlang_power<S: Scalar>(s: S, z: S, n: u64, rate: f64) -> S {
    if n <= POWU_LIMIT {
        z.powu(n)
    } else {
        (-(s / rate).ln_1p() * n as f64).exp()
    }
}

pub(crate) fn sample_exp<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    Exp::new(rate).expect("rate validated").sample(rng)
}

fn sample_erlang<R: Rng + ?Sized>(shape: u64, rate: f64, rng: &mut R) -> f64 {
    if shape == 1 {
        return sample_exp(rate, rng);
    }
    Gamma::new(shape as f64, 1.0 / rate)
        .expect("shape and rate validated")
        .sample(rng)
}

/// Two-moment fit: deterministic, Erlang(k-1, k) mixture, exponential or
/// balanced-means H2 depending on the SCV.
pub fn fit_two_moment(m1: f64, m2: f64) -> Result<DistSpec> {
    positive("m1", m1)?;
    if !m2.is_finite() {
        return Err(Error::InvalidParameter(format!("m2 must be finite, got {m2}")));
    }
    let m1_sq = m1 * m1;
    let scv = m2 / m1_sq - 1.0;
    if scv < -SCV_SNAP {
        return Err(Error::NegativeVariance { m2, m1_sq });
    }
    if scv <= SCV_SNAP {
        return DistSpec::deterministic(m1);
    }
    if (scv - 1.0).abs() <= SCV_SNAP {
        return DistSpec::exponential(1.0 / m1);
    }
    if scv > 1.0 {
        return DistSpec::hyper2_balanced(m1, scv);
    }
    // smallest k with 1/k <= scv
    let k = ((1.0 / scv) - 1e-9).ceil().max(2.0) as u64;
    let kf = k as f64;
    let root = (kf * (1.0 + scv) - kf * kf * scv).max(0.0).sqrt();
    let p = ((kf * scv - root) / (1.0 + scv)).clamp(0.0, 1.0);
    DistSpec::erlang_mixture(k, (kf - p) / m1, 1.0 - p)
}

/// Config-file representation: `{ family = "...", params = { ... } }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    pub family: String,
    pub params: BTreeMap<String, f64>,
}

fn param(params: &BTreeMap<String, f64>, family: &str, name: &str) -> Result<f64> {
    params.get(name).copied().ok_or_else(|| {
        Error::InvalidParameter(format!("{family} distribution is missing parameter `{name}`"))
    })
}

fn check_keys(params: &BTreeMap<String, f64>, family: &str, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(extra) => Err(Error::InvalidParameter(format!(
            "{family} distribution has unknown parameter `{extra}` (expected {allowed:?})"
        ))),
        None => Ok(()),
    }
}

impl TryFrom<DistConfig> for DistSpec {
    type Error = Error;

    fn try_from(c: DistConfig) -> Result<Self> {
        let p = &c.params;
        let fam = c.family.as_str();
        match fam {
            "exponential" => {
                check_keys(p, fam, &["rate"])?;
                DistSpec::exponential(param(p, fam, "rate")?)
            }
            "deterministic" => {
                check_keys(p, fam, &["value"])?;
                DistSpec::deterministic(param(p, fam, "value")?)
            }
            "erlang_mixture" => {
                check_keys(p, fam, &["k", "rate", "q"])?;
                let k = param(p, fam, "k")?;
                if k.fract() != 0.0 || k < 2.0 {
                    return Err(Error::InvalidParameter(format!(
                        "erlang_mixture parameter `k` must be an integer >= 2, got {k}"
                    )));
                }
                DistSpec::erlang_mixture(k as u64, param(p, fam, "rate")?, param(p, fam, "q")?)
            }
            "hyper2" => {
                check_keys(p, fam, &["p1", "rate1", "rate2", "mean", "scv"])?;
                if p.contains_key("scv") {
                    check_keys(p, fam, &["mean", "scv"])?;
                    DistSpec::hyper2_balanced(param(p, fam, "mean")?, param(p, fam, "scv")?)
                } else {
                    DistSpec::hyper2(
                        param(p, fam, "p1")?,
                        param(p, fam, "rate1")?,
                        param(p, fam, "rate2")?,
                    )
                }
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution family `{other}` (expected exponential, deterministic, erlang_mixture or hyper2)"
            ))),
        }
    }
}

impl From<DistSpec> for DistConfig {
    fn from(d: DistSpec) -> Self {
        let mut params = BTreeMap::new();
        match d {
            DistSpec::Exponential { rate } => {
                params.insert("rate".into(), rate);
            }
            DistSpec::Deterministic { value } => {
                params.insert("value".into(), value);
            }
            DistSpec::ErlangMixture { k, rate, q } => {
                params.insert("k".into(), k as f64);
                params.insert("rate".into(), rate);
                params.insert("q".into(), q);
            }
            DistSpec::Hyper2 { p1, rate1, rate2 } => {
                params.insert("p1".into(), p1);
                params.insert("rate1".into(), rate1);
                params.insert("rate2".into(), rate2);
            }
        }
        DistConfig {
            family: d.family().to_string(),
            params,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Moments from the transform alone: complex step on `1 - LST` at `ih`.
    fn numeric_moments(d: &DistSpec) -> (f64, f64) {
        let h = 1e-6 / d.mean();
        let v = d.complement(Complex64::new(0.0, h));
        (v.im / h, 2.0 * v.re / (h * h))
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn closed_form_transforms() {
        let e1 = DistSpec::exponential(1.0).unwrap();
        assert!((e1.lst(c(1.0)).unwrap() - 0.5).norm() < 1e-15);
        let d2 = DistSpec::deterministic(2.0).unwrap();
        assert_eq!(d2.lst(c(0.0)).unwrap(), c(1.0));
        let delta = 2.0;
        let stat = DistSpec::exponential(delta - 1.0).unwrap();
        assert!((stat.lst(c(1.0)).unwrap() - 0.5).norm() < 1e-15);
    }

    #[test]
    fn rejects_left_half_plane() {
        let e1 = DistSpec::exponential(1.0).unwrap();
        assert!(matches!(
            e1.lst(Complex64::new(-0.1, 0.0)),
            Err(Error::OutsideHalfPlane { .. })
        ));
    }

    #[test]
    fn moment_examples() {
        let m = DistSpec::exponential(1.0).unwrap().moments();
        assert_eq!((m.m1, m.m2, m.scv), (1.0, 2.0, 1.0));
        let m = DistSpec::deterministic(2.0).unwrap().moments();
        assert_eq!((m.m1, m.m2, m.scv), (2.0, 4.0, 0.0));
        let em = DistSpec::erlang_mixture(2, 1.7, 0.35).unwrap();
        let m = em.moments();
        let (n1, n2) = numeric_moments(&em);
        assert!(rel(m.m1, n1) < 1e-9 && rel(m.m2, n2) < 1e-9, "{m:?} vs {n1} {n2}");
    }

    #[test]
    fn fit_examples() {
        assert_eq!(fit_two_moment(1.0, 2.0).unwrap(), DistSpec::Exponential { rate: 1.0 });
        assert_eq!(fit_two_moment(2.0, 4.0).unwrap(), DistSpec::Deterministic { value: 2.0 });
        let em = fit_two_moment(1.0, 1.5).unwrap();
        assert!(matches!(em, DistSpec::ErlangMixture { k: 2, .. }));
        let m = em.moments();
        assert!((m.m1 - 1.0).abs() < 1e-12 && (m.m2 - 1.5).abs() < 1e-12);
        assert!(matches!(
            fit_two_moment(1.0, 0.5),
            Err(Error::NegativeVariance { .. })
        ));
    }

    #[test]
    fn bracket_boundary_takes_smaller_k() {
        // scv = 1/2 fits both k = 2 and k = 3
        let d = fit_two_moment(1.0, 1.5).unwrap();
        assert!(matches!(d, DistSpec::ErlangMixture { k: 2, .. }));
        let d = fit_two_moment(1.0, 1.0 + 1.0 / 3.0).unwrap();
        assert!(matches!(d, DistSpec::ErlangMixture { k: 3, .. }));
    }

    #[test]
    fn erlang_scv_bracket() {
        for &scv in &[0.9, 0.51, 0.3, 0.2, 0.05, 0.011] {
            let d = fit_two_moment(2.0, 4.0 * (1.0 + scv)).unwrap();
            let DistSpec::ErlangMixture { k, .. } = d else {
                panic!("expected mixture for scv {scv}")
            };
            let k = k as f64;
            assert!(1.0 / k <= scv + 1e-12 && scv <= 1.0 / (k - 1.0) + 1e-12);
            assert!(rel(d.moments().scv, scv) < 1e-10);
        }
    }

    #[test]
    fn sampling_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d2 = DistSpec::deterministic(2.0).unwrap();
        assert!((0..100).all(|_| d2.sample(&mut rng) == 2.0));

        let n = 1_000_000;
        let e1 = DistSpec::exponential(1.0).unwrap();
        let mean = (0..n).map(|_| e1.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.003, "{mean}");

        let h2 = fit_two_moment(1.0, 9.0).unwrap();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = h2.sample(&mut rng);
            s1 += x;
            s2 += x * x;
        }
        let (m1, m2) = (s1 / n as f64, s2 / n as f64);
        let scv = m2 / (m1 * m1) - 1.0;
        assert!((scv - 8.0).abs() < 0.5, "{scv}");
    }

    #[test]
    fn erlang_mixture_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = DistSpec::erlang_mixture(4, 2.0, 0.4).unwrap();
        let m = d.moments();
        let n = 400_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        let se = (m.variance() / n as f64).sqrt();
        assert!((mean - m.m1).abs() < 3.0 * se);
    }

    #[test]
    fn config_round_trip() {
        let d = DistSpec::hyper2(0.975, 100.0, 0.01).unwrap();
        let text = toml::to_string(&d).unwrap();
        let back: DistSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, d);

        let balanced: DistSpec =
            toml::from_str("family = \"hyper2\"\n[params]\nmean = 1.0\nscv = 8.0\n").unwrap();
        assert!(rel(balanced.moments().scv, 8.0) < 1e-12);

        let bad = toml::from_str::<DistSpec>("family = \"exponential\"\n[params]\nrat = 1.0\n");
        assert!(bad.is_err());
    }

    fn any_dist() -> impl Strategy<Value = DistSpec> {
        prop_oneof![
            (0.05f64..20.0).prop_map(|rate| DistSpec::Exponential { rate }),
            (0.05f64..20.0).prop_map(|value| DistSpec::Deterministic { value }),
            (2u64..12, 0.1f64..10.0, 0.0f64..=1.0)
                .prop_map(|(k, rate, q)| DistSpec::ErlangMixture { k, rate, q }),
            (65u64..120, 5.0f64..50.0, 0.0f64..=1.0)
                .prop_map(|(k, rate, q)| DistSpec::ErlangMixture { k, rate, q }),
            (0.01f64..0.99, 0.05f64..20.0, 0.05f64..20.0)
                .prop_map(|(p1, rate1, rate2)| DistSpec::Hyper2 { p1, rate1, rate2 }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn transform_derivatives_reproduce_moments(d in any_dist()) {
            let m = d.moments();
            let (n1, n2) = numeric_moments(&d);
            prop_assert!(rel(n1, m.m1) < 1e-6, "m1 {} vs {}", n1, m.m1);
            prop_assert!(rel(n2, m.m2) < 1e-6, "m2 {} vs {}", n2, m.m2);
        }

        #[test]
        fn refit_is_moment_idempotent(m1 in 0.01f64..50.0, scv in 0.0f64..20.0) {
            let first = fit_two_moment(m1, m1 * m1 * (1.0 + scv)).unwrap();
            let a = first.moments();
            let second = fit_two_moment(a.m1, a.m2).unwrap();
            let b = second.moments();
            prop_assert!(rel(b.m1, a.m1) < 1e-12);
            prop_assert!(rel(b.m2, a.m2) < 1e-12);
            prop_assert!(rel(a.m1, m1) < 1e-12);
            prop_assert!(rel(a.m2, m1 * m1 * (1.0 + scv)) < 1e-11);
        }

        #[test]
        fn lst_completely_monotone_on_real_axis(d in any_dist()) {
            let f: Vec<f64> = (0..=200).map(|i| d.lst_real(0.05 * i as f64).unwrap()).collect();
            for w in f.windows(3) {
                let d1 = w[1] - w[0];
                let d2 = w[2] - 2.0 * w[1] + w[0];
                prop_assert!(d1 <= 1e-15);
                prop_assert!(d2 >= -1e-15);
            }
            prop_assert!(f.iter().all(|&x| (0.0..=1.0 + 1e-15).contains(&x)));
        }

        #[test]
        fn complement_matches_direct_form(d in any_dist(), re in 0.0f64..5.0, im in -5.0f64..5.0) {
            let s = Complex64::new(re, im);
            let direct = 1.0 - d.transform(s);
            prop_assert!((d.complement(s) - direct).norm() < 1e-12);
            prop_assert!(d.transform(s).norm() <= 1.0 + 1e-12);
        }
    }
}

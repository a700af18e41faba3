//! Adaptive Gauss-Kronrod (7/15) quadrature for integrands valued in any [`Scalar`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<S> {
    pub value: S,
    pub error: f64,
    pub intervals: usize,
}

struct Panel<S> {
    a: f64,
    b: f64,
    value: S,
    error: f64,
}

fn gk15<S: Scalar, F>(f: &mut F, a: f64, b: f64) -> Result<Panel<S>>
where
    F: FnMut(f64) -> Result<S>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx)? + f(centre + dx)?;
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).magnitude();
    Ok(Panel { a, b, value, error })
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`, bisecting the
/// panel with the largest error estimate until the summed estimate is below
/// `tol` or `max_panels` is reached.
pub fn integrate<S, F>(f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<QuadResult<S>>
where
    S: Scalar,
    F: FnMut(f64) -> Result<S>,
{
    integrate_rel(f, a, b, tol, 0.0, max_panels)
}

/// As [`integrate`], stopping once the error estimate is below
/// `max(tol, rel_tol * |value|)`.
pub fn integrate_rel<S, F>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult<S>>
where
    S: Scalar,
    F: FnMut(f64) -> Result<S>,
{
    let initial = 4;
    let step = (b - a) / initial as f64;
    let mut panels = Vec::with_capacity(64);
    for i in 0..initial {
        let lo = a + step * i as f64;
        let hi = if i + 1 == initial { b } else { lo + step };
        panels.push(gk15(&mut f, lo, hi)?);
    }
    loop {
        let total: f64 = panels.iter().map(|p| p.error).sum();
        let value = panels.iter().fold(S::zero(), |acc, p| acc + p.value);
        let target = tol.max(rel_tol * value.magnitude());
        if total <= target || panels.len() >= max_panels {
            if total > target {
                return Err(Error::Quadrature {
                    estimate: total,
                    intervals: panels.len(),
                });
            }
            return Ok(QuadResult {
                value,
                error: total,
                intervals: panels.len(),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.error > best.1 { (i, p.error) } else { best });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // panel no longer divisible in floating point
            return Err(Error::Quadrature {
                estimate: total,
                intervals: panels.len() + 1,
            });
        }
        panels.push(gk15(&mut f, p.a, mid)?);
        panels.push(gk15(&mut f, mid, p.b)?);
    }
}

/// `int_0^inf exp(-c u) h(u) du` for `|h| <= bound` on the half-line. The
/// range is cut where the exponential envelope leaves `tol / 2` and the
/// finite part is integrated to `tol / 2`.
pub fn laplace_half_line<S, F>(f: F, c: f64, bound: f64, tol: f64) -> Result<QuadResult<S>>
where
    S: Scalar,
    F: FnMut(f64) -> Result<S>,
{
    laplace_half_line_rel(f, c, bound, tol, 0.0)
}

/// As [`laplace_half_line`], but also accepts an error estimate below
/// `rel_tol` times the magnitude of the running value.
pub fn laplace_half_line_rel<S, F>(f: F, c: f64, bound: f64, tol: f64, rel_tol: f64) -> Result<QuadResult<S>>
where
    S: Scalar,
    F: FnMut(f64) -> Result<S>,
{
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "exponential envelope rate must be positive, got {c}"
        )));
    }
    let mut f = f;
    let cut = ((2.0 * bound / (c * tol)).ln() / c).max(1.0 / c);
    let mut res = integrate_rel(move |u| Ok(f(u)? * (-c * u).exp()), 0.0, cut, 0.5 * tol, rel_tol, 2000)?;
    res.error += bound * (-c * cut).exp() / c;
    Ok(res)
}

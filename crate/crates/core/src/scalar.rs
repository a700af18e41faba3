//! Number types the transform code is generic over.
//!
//! Every transform in this crate (distribution LSTs, the dependence function,
//! the stationary downtime product, the queue kernels) is written once against
//! [`Scalar`] and evaluated either at complex points ([`Complex64`]) or on
//! truncated Taylor series ([`Jet`]). Jets give exact derivatives at points
//! where the PGF formulas have removable `0/0` singularities, which is where
//! finite differences and complex-step both lose all precision.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_real(x: f64) -> Self;
    fn exp(self) -> Self;
    /// `exp(self) - 1` without cancellation near zero.
    fn exp_m1(self) -> Self;
    fn ln(self) -> Self;
    /// `ln(1 + self)` without cancellation near zero.
    fn ln_1p(self) -> Self;
    /// Max-norm used for truncation and error control.
    fn magnitude(self) -> f64;

    fn zero() -> Self {
        Self::from_real(0.0)
    }

    fn one() -> Self {
        Self::from_real(1.0)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn powu(self, mut n: u64) -> Self {
        let mut base = self;
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    fn exp(self) -> Self {
        Complex64::exp(self)
    }

    fn exp_m1(self) -> Self {
        // exp(x+iy) - 1 = (expm1(x) cos y - 2 sin^2(y/2)) + i exp(x) sin y
        let (x, y) = (self.re, self.im);
        let half = (0.5 * y).sin();
        Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
    }

    fn ln(self) -> Self {
        Complex64::ln(self)
    }

    fn ln_1p(self) -> Self {
        if self.norm() < 1e-3 {
            // alternating series, truncation error below |z|^8 / 8
            let z = self;
            let mut term = z;
            let mut acc = z;
            for k in 2..=7 {
                term = -term * z;
                acc += term / k as f64;
            }
            acc
        } else {
            (self + 1.0).ln()
        }
    }

    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Truncated Taylor series `c[0] + c[1] e + ... + c[N-1] e^(N-1)` in a real
/// perturbation `e` around some expansion point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize>(pub [f64; N]);

/// Order used for expansions around `p = 1` and `p = phi`.
pub type Jet6 = Jet<6>;

impl<const N: usize> Jet<N> {
    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        Jet(c)
    }

    /// The independent variable expanded around `center`.
    pub fn variable(center: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = center;
        if N > 1 {
            c[1] = 1.0;
        }
        Jet(c)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.0[k]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.0[k] * fact
    }

    /// Drop the (vanishing) constant term and lower every coefficient by
    /// one order. The top coefficient becomes unknown and is zeroed.
    pub fn shift_down(self) -> Self {
        let mut c = [0.0; N];
        c[..N - 1].copy_from_slice(&self.0[1..]);
        Jet(c)
    }

    /// Ratio of two series that both vanish at the expansion point. The
    /// result is exact up to order `N - 2`.
    pub fn div_removable(num: Self, den: Self) -> Self {
        num.shift_down() / den.shift_down()
    }

    /// Sum the series at a (possibly complex) offset from the expansion point.
    pub fn eval_at(&self, offset: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * offset + c)
    }

    /// Series of `exp(self)` given `f0 = exp(self[0])`.
    fn compose_exp_like(self, f0: f64) -> Self {
        // b = exp(a) satisfies b' = a' b
        let a = self.0;
        let mut b = [0.0; N];
        b[0] = f0;
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * a[j] * b[k - j];
            }
            b[k] = s / k as f64;
        }
        Jet(b)
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x += y;
        }
        Jet(c)
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x -= y;
        }
        Jet(c)
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet(self.0.map(|x| -x))
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N {
            if self.0[i] == 0.0 {
                continue;
            }
            for j in 0..N - i {
                c[i + j] += self.0[i] * rhs.0[j];
            }
        }
        Jet(c)
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let a = self.0;
        let b = rhs.0;
        let mut q = [0.0; N];
        for k in 0..N {
            let mut s = a[k];
            for j in 1..=k {
                s -= b[j] * q[k - j];
            }
            q[k] = s / b[0];
        }
        Jet(q)
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.0[0] += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for Jet<N> {
    type Output = Self;
    fn sub(mut self, rhs: f64) -> Self {
        self.0[0] -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Jet(self.0.map(|x| x * rhs))
    }
}

impl<const N: usize> Div<f64> for Jet<N> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        Jet(self.0.map(|x| x / rhs))
    }
}

impl<const N: usize> Scalar for Jet<N> {
    fn from_real(x: f64) -> Self {
        Jet::constant(x)
    }

    fn exp(self) -> Self {
        let f0 = self.0[0].exp();
        self.compose_exp_like(f0)
    }

    fn exp_m1(self) -> Self {
        let mut out = self.exp();
        out.0[0] = self.0[0].exp_m1();
        out
    }

    fn ln(self) -> Self {
        // b = ln(a) satisfies a b' = a'
        let a = self.0;
        let mut b = [0.0; N];
        b[0] = a[0].ln();
        for k in 1..N {
            let mut s = k as f64 * a[k];
            for j in 1..k {
                s -= j as f64 * b[j] * a[k - j];
            }
            b[k] = s / (k as f64 * a[0]);
        }
        Jet(b)
    }

    fn ln_1p(self) -> Self {
        let mut shifted = self;
        shifted.0[0] += 1.0;
        let mut out = shifted.ln();
        out.0[0] = self.0[0].ln_1p();
        out
    }

    fn magnitude(self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type J = Jet<5>;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_and_ln_derivatives() {
        let x = J::variable(0.3);
        let e = (x * 2.0).exp();
        for k in 0..5 {
            let expected = 2f64.powi(k as i32) * (0.6f64).exp();
            assert!(close(e.derivative(k), expected, 1e-13));
        }
        let l = x.ln();
        // d^k/dx^k ln x = (-1)^(k-1) (k-1)! / x^k
        assert!(close(l.derivative(1), 1.0 / 0.3, 1e-13));
        assert!(close(l.derivative(2), -1.0 / 0.09, 1e-13));
        assert!(close(l.derivative(3), 2.0 / 0.027, 1e-12));
    }

    #[test]
    fn division_inverts_multiplication() {
        let x = J::variable(0.7);
        let a = x * x + 1.0;
        let b = (x * 3.0).exp();
        let back = (a * b) / b;
        for k in 0..5 {
            assert!(close(back.0[k], a.0[k], 1e-13));
        }
    }

    #[test]
    fn removable_ratio_recovers_limit() {
        // sin-free example: (e^x - 1) / x at 0 has series 1 + x/2 + x^2/6
        let x = J::variable(0.0);
        let r = J::div_removable(x.exp_m1(), x);
        assert!(close(r.0[0], 1.0, 1e-15));
        assert!(close(r.0[1], 0.5, 1e-15));
        assert!(close(r.0[2], 1.0 / 6.0, 1e-15));
    }

    #[test]
    fn complex_special_functions_match_naive_forms() {
        let z = Complex64::new(0.3, -1.1);
        assert!((z.exp_m1() - (z.exp() - 1.0)).norm() < 1e-15);
        let small = Complex64::new(2e-4, -1e-4);
        assert!((small.ln_1p() - (small + 1.0).ln()).norm() < 1e-15);
        assert!((z.ln_1p() - (z + 1.0).ln()).norm() < 1e-15);
        assert!((z.powu(7) - z.powf(7.0)).norm() < 1e-12);
    }

    #[test]
    fn taylor_evaluation() {
        let x = J::variable(0.0);
        let e = x.exp();
        let v = e.eval_at(Complex64::new(1e-3, 0.0));
        assert!((v.re - (1e-3f64).exp()).abs() < 1e-15);
    }
}

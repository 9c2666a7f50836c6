//! Hyper-dual numbers: second-order forward-mode differentiation.
//!
//! A [`HyperDual`] carries a value together with two first-order
//! sensitivities and the mixed second-order sensitivity, i.e. it is an
//! element of `R[e1, e2] / (e1^2, e2^2)`. Seeding `e1` on variable `i` and
//! `e2` on variable `j` and pushing the number through a composition of
//! elementary functions yields the exact `d/dx_i`, `d/dx_j` and
//! `d^2/dx_i dx_j` of the result, with no truncation error.
//!
//! All scalar math is routed through `libm` (also on std builds) so the
//! value component of a hyper-dual computation is bit-identical to the
//! plain `f64` evaluation of the same expression tree.

use core::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction shared by plain `f64` evaluation and hyper-dual
/// evaluation of expression trees.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// The value component (drops derivative information).
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    /// `self` raised to `exponent`. Integer-valued constant exponents are
    /// evaluated by repeated multiplication so that negative bases work.
    fn pow(self, exponent: Self) -> Self;
    /// True when the scalar carries no derivative information.
    fn is_constant(self) -> bool;
}

fn f64_powi(base: f64, mut n: i64) -> f64 {
    let mut inv = false;
    if n < 0 {
        inv = true;
        n = -n;
    }
    let mut acc = 1.0;
    let mut b = base;
    while n > 0 {
        if n & 1 == 1 {
            acc *= b;
        }
        b *= b;
        n >>= 1;
    }
    if inv {
        1.0 / acc
    } else {
        acc
    }
}

fn as_integer(v: f64) -> Option<i64> {
    let r = libm::round(v);
    if (v - r).abs() < 1e-9 && r.abs() < 9.0e15 {
        Some(r as i64)
    } else {
        None
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        libm::sin(self)
    }
    fn cos(self) -> Self {
        libm::cos(self)
    }
    fn tan(self) -> Self {
        libm::tan(self)
    }
    fn sinh(self) -> Self {
        libm::sinh(self)
    }
    fn cosh(self) -> Self {
        libm::cosh(self)
    }
    fn tanh(self) -> Self {
        libm::tanh(self)
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn exp(self) -> Self {
        libm::exp(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn pow(self, exponent: Self) -> Self {
        match as_integer(exponent) {
            Some(n) => f64_powi(self, n),
            None => libm::pow(self, exponent),
        }
    }
    fn is_constant(self) -> bool {
        true
    }
}

/// Truncated second-order dual number `v + d1*e1 + d2*e2 + d12*e1*e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperDual {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
}

impl HyperDual {
    pub const fn constant(value: f64) -> Self {
        HyperDual { value, d1: 0.0, d2: 0.0, d12: 0.0 }
    }

    pub const fn new(value: f64, d1: f64, d2: f64, d12: f64) -> Self {
        HyperDual { value, d1, d2, d12 }
    }

    /// Lift a univariate `f` through the chain rule given `f(v)`, `f'(v)`
    /// and `f''(v)`.
    #[inline]
    fn lift(self, f: f64, df: f64, ddf: f64) -> Self {
        HyperDual {
            value: f,
            d1: df * self.d1,
            d2: df * self.d2,
            d12: df * self.d12 + ddf * self.d1 * self.d2,
        }
    }

    pub fn recip(self) -> Self {
        let v = self.value;
        self.lift(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powi(self, n: i64) -> Self {
        // Derivatives from the analytic rule; value by repeated squaring to
        // match the plain f64 path exactly.
        let v = self.value;
        let f = f64_powi(v, n);
        let nf = n as f64;
        let df = nf * f64_powi(v, n - 1);
        let ddf = nf * (nf - 1.0) * f64_powi(v, n - 2);
        self.lift(f, df, ddf)
    }

    pub fn powf(self, p: f64) -> Self {
        let v = self.value;
        let f = libm::pow(v, p);
        let df = p * libm::pow(v, p - 1.0);
        let ddf = p * (p - 1.0) * libm::pow(v, p - 2.0);
        self.lift(f, df, ddf)
    }

    pub fn is_finite(self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d12.is_finite()
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        HyperDual {
            value: self.value + o.value,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d12: self.d12 + o.d12,
        }
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        HyperDual {
            value: self.value - o.value,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
            d12: self.d12 - o.d12,
        }
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        HyperDual {
            value: self.value * o.value,
            d1: self.value * o.d1 + self.d1 * o.value,
            d2: self.value * o.d2 + self.d2 * o.value,
            d12: self.value * o.d12 + self.d1 * o.d2 + self.d2 * o.d1 + self.d12 * o.value,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        HyperDual { value: -self.value, d1: -self.d1, d2: -self.d2, d12: -self.d12 }
    }
}

impl Real for HyperDual {
    fn from_f64(v: f64) -> Self {
        HyperDual::constant(v)
    }
    fn value(self) -> f64 {
        self.value
    }
    fn sin(self) -> Self {
        let (s, c) = (libm::sin(self.value), libm::cos(self.value));
        self.lift(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = (libm::sin(self.value), libm::cos(self.value));
        self.lift(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = libm::tan(self.value);
        let sec2 = 1.0 + t * t;
        self.lift(t, sec2, 2.0 * sec2 * t)
    }
    fn sinh(self) -> Self {
        let (s, c) = (libm::sinh(self.value), libm::cosh(self.value));
        self.lift(s, c, s)
    }
    fn cosh(self) -> Self {
        let (s, c) = (libm::sinh(self.value), libm::cosh(self.value));
        self.lift(c, s, c)
    }
    fn tanh(self) -> Self {
        let t = libm::tanh(self.value);
        let sech2 = 1.0 - t * t;
        self.lift(t, sech2, -2.0 * sech2 * t)
    }
    fn sqrt(self) -> Self {
        let r = libm::sqrt(self.value);
        self.lift(r, 0.5 / r, -0.25 / (r * self.value))
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.value);
        self.lift(e, e, e)
    }
    fn ln(self) -> Self {
        let v = self.value;
        self.lift(libm::log(v), 1.0 / v, -1.0 / (v * v))
    }
    fn pow(self, exponent: Self) -> Self {
        if exponent.is_constant() {
            match as_integer(exponent.value) {
                Some(n) => self.powi(n),
                None => self.powf(exponent.value),
            }
        } else {
            // a^b = exp(b ln a); only valid for positive bases, which the
            // evaluator reports as a non-finite result otherwise.
            (exponent * self.ln()).exp()
        }
    }
    fn is_constant(self) -> bool {
        self.d1 == 0.0 && self.d2 == 0.0 && self.d12 == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;
    use approx::assert_relative_eq;

    fn seeded(v: f64) -> HyperDual {
        HyperDual::new(v, 1.0, 1.0, 0.0)
    }

    #[test]
    fn constants_match_real_arithmetic() {
        let a = HyperDual::constant(1.25);
        let b = HyperDual::constant(-0.5);
        let out = (a * b + a / b - b).sin();
        assert_eq!(out.value, libm::sin(1.25 * -0.5 + 1.25 / -0.5 + 0.5));
        assert_eq!(out.d1, 0.0);
        assert_eq!(out.d2, 0.0);
        assert_eq!(out.d12, 0.0);
    }

    #[test]
    fn product_rule_mixed_partial() {
        // f(x, y) = x * y has d2f/dxdy = 1
        let x = HyperDual::new(3.0, 1.0, 0.0, 0.0);
        let y = HyperDual::new(5.0, 0.0, 1.0, 0.0);
        let f = x * y;
        assert_eq!(f.value, 15.0);
        assert_eq!(f.d1, 5.0);
        assert_eq!(f.d2, 3.0);
        assert_eq!(f.d12, 1.0);
    }

    #[test]
    fn quotient_second_derivative() {
        // f(t) = 1/t: f'' = 2/t^3
        let t = seeded(2.0);
        let f = HyperDual::constant(1.0) / t;
        assert_relative_eq!(f.value, 0.5, max_relative = 1e-15);
        assert_relative_eq!(f.d1, -0.25, max_relative = 1e-15);
        assert_relative_eq!(f.d12, 0.25, max_relative = 1e-15);
    }

    #[test]
    fn integer_power_with_negative_base() {
        let x = seeded(-2.0);
        let f = x.pow(HyperDual::constant(3.0));
        assert_eq!(f.value, -8.0);
        assert_eq!(f.d1, 12.0);
        assert_eq!(f.d12, -12.0);
    }

    // Composition f(g(t)) over the elementary function set: d12 must match
    // the analytic (f o g)'' on random inputs to near machine precision.
    #[test]
    fn chain_rule_against_analytic_second_derivative() {
        type Fns = (
            fn(HyperDual) -> HyperDual,
            fn(f64) -> f64,
            fn(f64) -> f64,
            fn(f64) -> f64,
        );
        let funcs: [Fns; 7] = [
            (|x| x.sin(), libm::sin, libm::cos, |t| -libm::sin(t)),
            (|x| x.cos(), libm::cos, |t| -libm::sin(t), |t| -libm::cos(t)),
            (|x| x.sinh(), libm::sinh, libm::cosh, libm::sinh),
            (|x| x.cosh(), libm::cosh, libm::sinh, libm::cosh),
            (|x| x.exp(), libm::exp, libm::exp, libm::exp),
            (
                |x| x.sqrt(),
                libm::sqrt,
                |t| 0.5 / libm::sqrt(t),
                |t| -0.25 / (t * libm::sqrt(t)),
            ),
            (
                |x| x.powf(3.0),
                |t| t * t * t,
                |t| 3.0 * t * t,
                |t| 6.0 * t,
            ),
        ];
        let mut rng = DetRng::new(2024);
        for trial in 0..1000 {
            let fi = rng.index(funcs.len());
            let gi = rng.index(funcs.len());
            let (f, fv, fd, fdd) = funcs[fi];
            let (g, gv, gd, gdd) = funcs[gi];
            // keep inputs where sqrt/pow chains stay well inside their domain
            let t = rng.uniform_in(0.3, 1.8);
            let out = f(g(seeded(t)));
            let inner = gv(t);
            let expected_val = fv(inner);
            let expected_d1 = fd(inner) * gd(t);
            let expected_d12 = fdd(inner) * gd(t) * gd(t) + fd(inner) * gdd(t);
            let scale = expected_d12.abs().max(1.0);
            assert_relative_eq!(out.value, expected_val, max_relative = 1e-12);
            assert_relative_eq!(out.d1, expected_d1, max_relative = 1e-12);
            assert!(
                (out.d12 - expected_d12).abs() / scale < 1e-12,
                "trial {trial}: d12 {} vs {}",
                out.d12,
                expected_d12
            );
        }
    }

    #[test]
    fn tan_and_tanh_second_derivatives() {
        let t = seeded(0.7);
        let f = t.tan();
        let tt = libm::tan(0.7);
        assert_relative_eq!(f.d12, 2.0 * (1.0 + tt * tt) * tt, max_relative = 1e-13);
        let g = t.tanh();
        let th = libm::tanh(0.7);
        assert_relative_eq!(g.d12, -2.0 * (1.0 - th * th) * th, max_relative = 1e-13);
    }
}

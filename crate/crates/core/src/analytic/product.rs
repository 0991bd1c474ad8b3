//! The arccosine law and tails of products of independent arccosine variables.
//!
//! `F = cos Φ` with `Φ` uniform on `(-π/2, π/2)` has `P(F > x) = (2/π) arccos x`.
//! Tails are evaluated in terms of the defect `δ = 1 - x`, which keeps full
//! relative precision in the region `x → 1` that drives the step tail.

use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

use super::quadrature::integrate;
use crate::error::{Error, Result};

const MAX_SEGMENTS: usize = 2000;

/// Stateless descriptor of the arccosine distribution on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ArccosineLaw;

impl ArccosineLaw {
    pub fn density(self, x: f64) -> f64 {
        if (0.0..1.0).contains(&x) {
            FRAC_2_PI / ((1.0 - x) * (1.0 + x)).sqrt()
        } else {
            0.0
        }
    }

    pub fn survival(self, x: f64) -> Result<f64> {
        arccos_survival(x)
    }

    pub fn cdf(self, x: f64) -> f64 {
        1.0 - FRAC_2_PI * x.clamp(0.0, 1.0).acos()
    }
}

/// `P(F > x) = (2/π) arccos x` for `x` in `[0, 1]`.
pub fn arccos_survival(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("arccosine survival needs x in [0, 1], got {x}")));
    }
    Ok(FRAC_2_PI * x.acos())
}

/// `P(F > 1 - δ) = (4/π) asin(√(δ/2))`, accurate for tiny `δ`.
fn arccos_survival_defect(delta: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    4.0 / PI * (0.5 * delta.min(2.0)).sqrt().asin()
}

/// `P(F1 ··· Fn > x)` for independent arccosine variables, `x` in `[0, 1]`.
pub fn product_survival(n: usize, x: f64, rel_tol: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("product survival needs x in [0, 1], got {x}")));
    }
    product_survival_defect(n, 1.0 - x, rel_tol)
}

/// [`product_survival`] at `x = 1 - δ`.
///
/// Conditioning on the last factor `cos φ` gives
/// `G_n(δ) = (2/π) ∫_0^{φ*} G_{n-1}((δ - 2 sin²(φ/2)) / cos φ) dφ` with
/// `φ* = 2 asin(√(δ/2))`. The square-root edge at `φ*` is removed by
/// `φ = φ*(1 - t²)`.
pub fn product_survival_defect(n: usize, delta: f64, rel_tol: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("product of zero factors".into()));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain(format!("defect δ = {delta} outside [0, 1]")));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidInput(format!("rel_tol = {rel_tol} must be positive")));
    }
    defect_rec(n, delta, rel_tol)
}

fn defect_rec(n: usize, delta: f64, rel_tol: f64) -> Result<f64> {
    if delta <= 0.0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(arccos_survival_defect(delta));
    }
    let phi_max = 2.0 * (0.5 * delta).sqrt().asin();
    let inner_tol = rel_tol * 0.1;
    let mut failure = None;
    let integrand = |t: f64| {
        let phi = phi_max * (1.0 - t * t);
        let half = (0.5 * phi).sin();
        let inner = (delta - 2.0 * half * half) / phi.cos();
        if failure.is_some() || inner <= 0.0 {
            return 0.0;
        }
        match defect_rec(n - 1, inner.min(1.0), inner_tol) {
            Ok(g) => g * 2.0 * phi_max * t,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let r = integrate(integrand, 0.0, 1.0, 0.0, rel_tol, MAX_SEGMENTS);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(FRAC_2_PI * r?.value)
}

/// A tail constant together with the index it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstant {
    pub index: usize,
    pub value: f64,
}

/// `n!!` as a float.
pub fn double_factorial(n: usize) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `c_n = lim (1-x)^{-n/2} P(F1 ··· Fn > x)` by the recursion
/// `c_n = 4 c_{n-2} / (π n)` from `c_1 = 2√2/π`, `c_2 = 2/π`.
pub fn product_tail_constant(n: usize) -> Result<TailConstant> {
    if n == 0 {
        return Err(Error::InvalidInput("product of zero factors".into()));
    }
    let mut c = if n % 2 == 1 { 2.0 * SQRT_2 / PI } else { 2.0 / PI };
    let mut k = if n % 2 == 1 { 1 } else { 2 };
    while k < n {
        k += 2;
        c *= 4.0 / (PI * k as f64);
    }
    Ok(TailConstant { index: n, value: c })
}

/// Closed form of [`product_tail_constant`]:
/// `(4/π)^{n/2} / n!!` for even `n`, `(4/π)^{(n+1)/2} / (√2 n!!)` for odd `n`.
pub fn product_tail_constant_closed(n: usize) -> Result<TailConstant> {
    if n == 0 {
        return Err(Error::InvalidInput("product of zero factors".into()));
    }
    let value = if n % 2 == 0 {
        (4.0 / PI).powi((n / 2) as i32) / double_factorial(n)
    } else {
        (4.0 / PI).powi(n.div_ceil(2) as i32) / (SQRT_2 * double_factorial(n))
    };
    Ok(TailConstant { index: n, value })
}

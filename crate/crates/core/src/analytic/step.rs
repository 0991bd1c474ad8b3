//! Law of the axial step `X` of one flight.
//!
//! For `x > 0`, `P(X > x) = ½ ∫_{v0}^1 P(F1 ··· F_{d-2} > g(v)) dv` with
//! `v0 = x/√(4+x²)` and `g(v) = (√(1-v²+x²) - √(1-v²)) / (xv)`, the `½`
//! being the density of `sin Θ` on `(-1, 1)`.

use std::f64::consts::{FRAC_PI_2, PI};

use super::product::{double_factorial, product_survival_defect, TailConstant};
use super::quadrature::integrate;
use crate::error::{Error, Result};
use crate::geometry::Dimension;

const MAX_SEGMENTS: usize = 2000;

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("step survival needs x > 0, got {x}")));
    }
    Ok(())
}

/// `1 - g` after the change of variables `v = (1 + εw)^{-1/2}`, `ε = 1/x²`,
/// where `g = √(1 + ε(1+ε)w) - ε√w`.
fn defect(eps: f64, w: f64) -> f64 {
    let a = (1.0 + eps * (1.0 + eps) * w).sqrt();
    if eps <= 1.0 {
        // Small defects: expand `a - 1` to avoid cancelling against 1.
        eps * (w.sqrt() - (1.0 + eps) * w / (1.0 + a))
    } else {
        // `g = (1 + εw) / (a + ε√w)` is free of the `a - ε√w` cancellation.
        1.0 - (1.0 + eps * w) / (a + eps * w.sqrt())
    }
}

/// `P(X > x)` through the general product formula.
///
/// In the variable `w` the integral becomes
/// `(ε/4) ∫_0^4 G_{d-2}(δ(w)) (1 + εw)^{-3/2} dw`, and `w = 4 sin⁴ψ`
/// flattens the root behaviour at both ends.
pub fn step_survival(dim: Dimension, x: f64, rel_tol: f64) -> Result<f64> {
    check_x(x)?;
    let n = dim.phi_count();
    let eps = 1.0 / (x * x);
    let inner_tol = rel_tol * 0.1;
    let mut failure = None;
    let integrand = |psi: f64| {
        let (s, c) = psi.sin_cos();
        let s2 = s * s;
        let w = 4.0 * s2 * s2;
        let dw = 16.0 * s2 * s * c;
        let delta = defect(eps, w);
        if failure.is_some() || delta <= 0.0 {
            return 0.0;
        }
        match product_survival_defect(n, delta.min(1.0), inner_tol) {
            Ok(g) => g * dw * (1.0 + eps * w).powf(-1.5),
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let r = integrate(integrand, 0.0, FRAC_PI_2, 0.0, rel_tol, MAX_SEGMENTS);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(0.25 * eps * r?.value)
}

/// `P(X > x)` for `d = 3` from the closed arccosine form
/// `(1/π) ∫_{v0}^1 arccos g(v) dv`, integrated directly in `v`.
pub fn step_survival_3d(x: f64, rel_tol: f64) -> Result<f64> {
    check_x(x)?;
    let v0 = x / (4.0 + x * x).sqrt();
    let span = 1.0 - v0;
    let integrand = |tau: f64| {
        // Smoothstep map: its derivative vanishes at both ends.
        let v = v0 + span * tau * tau * (3.0 - 2.0 * tau);
        let dv = span * 6.0 * tau * (1.0 - tau);
        let r = (1.0 - v) * (1.0 + v);
        let g = ((r + x * x).sqrt() - r.sqrt()) / (x * v);
        let acos = 2.0 * (0.5 * (1.0 - g).max(0.0)).sqrt().asin();
        acos * dv
    };
    Ok(integrate(integrand, 0.0, 1.0, 0.0, rel_tol, MAX_SEGMENTS)?.value / PI)
}

/// The tail constant `C_d = 2/(d-1)!! · (2/π)^{⌊(d-2)/2⌋}`, the limit of
/// `x^d P(|X| > x)`.
///
/// The survival of the simulated step law carries an extra factor ½, so
/// `x^d P(X > x)` from [`step_survival`] tends to [`step_tail_limit`], half of this value.
pub fn step_tail_constant(dim: Dimension) -> TailConstant {
    let d = dim.get();
    let value = 2.0 / double_factorial(d - 1) * (2.0 / PI).powi(((d - 2) / 2) as i32);
    TailConstant { index: d, value }
}

/// `lim x^d P(X > x)` for the step law itself.
pub fn step_tail_limit(dim: Dimension) -> f64 {
    0.5 * step_tail_constant(dim).value
}

/// `E[X²] = ∫_0^∞ 4x P(X > x) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoment {
    pub value: f64,
    /// Where quadrature stops and the fitted `C x^{-d}` tail takes over.
    pub cutoff: f64,
    /// Contribution of the closed-form tail beyond `cutoff`.
    pub tail: f64,
    /// Change in `value` caused by the last doubling of `cutoff`.
    pub last_change: f64,
}

/// Second moment of the axial step.
///
/// The integral is accumulated over `[0, 1]` and then over doubling
/// segments `[2^k, 2^{k+1}]`. Past a cutoff `x*` the survival is replaced by
/// `C x^{-d}` with `C = x*^d P(X > x*)`, whose contribution is
/// `4 ∫_{x*}^∞ x · C x^{-d} dx = 4 C x*^{2-d} / (d-2)`. The cutoff doubles
/// until the total moves by less than `rel_tol`.
pub fn second_moment(dim: Dimension, rel_tol: f64) -> Result<SecondMoment> {
    second_moment_with(dim, rel_tol, |x, tol| step_survival(dim, x, tol))
}

fn second_moment_with<F>(dim: Dimension, rel_tol: f64, survival: F) -> Result<SecondMoment>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let d = dim.get() as f64;
    let seg_tol = rel_tol * 0.1;
    let segment = |a: f64, b: f64| -> Result<f64> {
        let mut failure = None;
        let r = integrate(
            |x| {
                if failure.is_some() {
                    return 0.0;
                }
                match survival(x, seg_tol) {
                    Ok(p) => 4.0 * x * p,
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            a,
            b,
            0.0,
            seg_tol,
            MAX_SEGMENTS,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(r?.value)
    };
    let tail_at = |x: f64| -> Result<f64> {
        let c = x.powf(d) * survival(x, seg_tol)?;
        Ok(4.0 * c * x.powf(2.0 - d) / (d - 2.0))
    };
    let mut body = segment(0.0, 1.0)?;
    let mut cutoff = 1.0;
    let mut tail = tail_at(cutoff)?;
    let mut total = body + tail;
    for _ in 0..60 {
        body += segment(cutoff, 2.0 * cutoff)?;
        cutoff *= 2.0;
        tail = tail_at(cutoff)?;
        let next = body + tail;
        let change = (next - total).abs();
        total = next;
        if change < rel_tol * total && cutoff >= 8.0 {
            return Ok(SecondMoment { value: total, cutoff, tail, last_change: change });
        }
    }
    Err(Error::ToleranceNotMet { requested: rel_tol, achieved: f64::NAN })
}

/// `E[X²; |X| ≤ T] = ∫_0^T 4x P(X > x) dx - 2T² P(X > T)`, the moment a
/// truncated Monte Carlo sample estimates.
pub fn truncated_second_moment(dim: Dimension, t: f64, rel_tol: f64) -> Result<f64> {
    check_x(t)?;
    let tol = rel_tol * 0.1;
    let mut failure = None;
    let r = integrate(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            match step_survival(dim, x, tol) {
                Ok(p) => 4.0 * x * p,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        0.0,
        t,
        0.0,
        rel_tol,
        MAX_SEGMENTS,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value - 2.0 * t * t * step_survival(dim, t, tol)?)
}

//! Constants of the apparent-brightness limits near the axis and at the rim.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Dimension;

/// `π^{-(d-3)/2} / (4 Γ((d+1)/2) E[X²]) · (r2^{d-2} - r1^{d-2}) / (d-2)`.
pub fn brightness_constant(dim: Dimension, r1: f64, r2: f64, e_x2: f64) -> Result<f64> {
    if !(0.0 < r1 && r1 <= r2 && r2 < 1.0) {
        return Err(Error::Domain(format!("need 0 < r1 <= r2 < 1, got r1 = {r1}, r2 = {r2}")));
    }
    if !(e_x2 > 0.0 && e_x2.is_finite()) {
        return Err(Error::Domain(format!("second moment {e_x2} must be positive")));
    }
    let d = dim.get() as f64;
    let lead = PI.powf(-(d - 3.0) / 2.0) / (4.0 * gamma((d + 1.0) / 2.0) * e_x2);
    Ok(lead * (r2.powf(d - 2.0) - r1.powf(d - 2.0)) / (d - 2.0))
}

/// `Γ((d+1)/2) / ((d-1) π^{(d-1)/2}) · E[O0 + U0] / E[O0]`.
pub fn rim_brightness_constant(dim: Dimension, e_o0: f64, e_u0_plus_o0: f64) -> Result<f64> {
    if !(e_o0 > 0.0 && e_u0_plus_o0 > 0.0) {
        return Err(Error::Domain("ladder moments must be positive".into()));
    }
    let d = dim.get() as f64;
    Ok(gamma((d + 1.0) / 2.0) / ((d - 1.0) * PI.powf((d - 1.0) / 2.0)) * e_u0_plus_o0 / e_o0)
}

//! The limit exit measures `ρ∞` and `τ∞` on the unit disc `𝔻 ⊂ R^{d-1}`.
//!
//! `τ∞` has density `κ (1 + x_d)` with respect to Lebesgue measure, where
//! `κ = Γ((d+1)/2) / π^{(d-1)/2} = 1/λ(𝔻)` and `x_d` is the last coordinate.
//! The density is affine, so over any region it integrates to
//! `κ λ(A) (1 + c_d)` with `c` the centroid of `A`.

use rand::Rng;
use rand_distr::Open01;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sample_sphere, CrossSectionPoint, Dimension};

const CONTAINMENT_TOL: f64 = 1e-12;

/// Volume of the unit ball of `R^{d-1}`.
pub fn unit_disc_volume(dim: Dimension) -> f64 {
    let m = dim.cross_len() as f64;
    (0.5 * m * PI.ln() - ln_gamma(0.5 * m + 1.0)).exp()
}

/// `κ = 1 / λ(𝔻)`, the normalisation of the `τ∞` density.
pub fn tau_density_constant(dim: Dimension) -> f64 {
    1.0 / unit_disc_volume(dim)
}

/// A measurable subset of the cross-section.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    /// `B_r(0)`.
    pub fn centered_ball(dim: Dimension, radius: f64) -> Self {
        Region::Ball { center: vec![0.0; dim.cross_len()], radius }
    }

    /// The ball of radius `r` tangent to the rim at the base point,
    /// centred at `(0, ..., 0, -1 + r)`.
    pub fn offset_ball(dim: Dimension, radius: f64) -> Self {
        let mut center = vec![0.0; dim.cross_len()];
        center[dim.cross_len() - 1] = radius - 1.0;
        Region::Ball { center, radius }
    }

    pub fn len(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { lo, .. } => lo.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.volume() == 0.0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                d2 <= radius * radius
            }
            Region::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *l <= *v && *v <= *h),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Ball { center, radius } => {
                let m = center.len() as f64;
                (0.5 * m * PI.ln() - ln_gamma(0.5 * m + 1.0)).exp() * radius.powf(m)
            }
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match self {
            Region::Ball { center, .. } => center.clone(),
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
        }
    }

    fn validate(&self, dim: Dimension) -> Result<()> {
        if self.len() != dim.cross_len() {
            return Err(Error::InvalidInput(format!(
                "region has {} coordinates, the cross-section has {}",
                self.len(),
                dim.cross_len()
            )));
        }
        let inside = match self {
            Region::Ball { center, radius } => {
                if !(*radius >= 0.0) {
                    return Err(Error::InvalidInput(format!("negative radius {radius}")));
                }
                norm(center) + radius <= 1.0 + CONTAINMENT_TOL
            }
            Region::Box { lo, hi } => {
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidInput("box bounds out of order".into()));
                }
                let far: f64 = lo.iter().zip(hi).map(|(l, h)| l.abs().max(h.abs()).powi(2)).sum();
                far.sqrt() <= 1.0 + CONTAINMENT_TOL
            }
        };
        if inside {
            Ok(())
        } else {
            Err(Error::RegionNotContained)
        }
    }

    /// A uniform point of the region.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Region::Ball { center, radius } => {
                let m = center.len();
                let dir = sample_sphere(m, rng);
                let u: f64 = rng.sample(Open01);
                let r = radius * u.powf(1.0 / m as f64);
                center.iter().zip(&dir).map(|(c, e)| c + r * e).collect()
            }
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| {
                    let u: f64 = rng.random();
                    l + u * (h - l)
                })
                .collect(),
        }
    }
}

/// `τ∞(A) = κ ∫_A (1 + x_d) dx`.
pub fn tau_infty(dim: Dimension, region: &Region) -> Result<f64> {
    region.validate(dim)?;
    let c = region.centroid();
    Ok(tau_density_constant(dim) * region.volume() * (1.0 + c[c.len() - 1]))
}

/// `ρ∞(A) = 2^{-d} ∫_A (1 + x_d) dx`; `τ∞` is `ρ∞` normalised by `ρ∞(𝔻)`.
pub fn rho_infty(dim: Dimension, region: &Region) -> Result<f64> {
    region.validate(dim)?;
    let c = region.centroid();
    Ok(region.volume() * (1.0 + c[c.len() - 1]) / 2f64.powi(dim.get() as i32))
}

/// `τ∞(U^{y*}(A)) = κ ∫_A (1 - y·x) dx`, the limit exit law seen from a
/// source at `y` on the sphere.
pub fn tau_infty_rotated(dim: Dimension, region: &Region, y: &CrossSectionPoint) -> Result<f64> {
    region.validate(dim)?;
    if y.coords().len() != dim.cross_len() {
        return Err(Error::InvalidInput("source point has the wrong length".into()));
    }
    Ok(tau_density_constant(dim) * region.volume() * (1.0 - dot(y.coords(), &region.centroid())))
}

/// A Monte Carlo estimate with a three-standard-error band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
}

impl McEstimate {
    pub fn three_sigma(&self) -> f64 {
        3.0 * self.std_err
    }

    fn from_sums(sum: f64, sum_sq: f64, n: usize, scale: f64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sum_sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
        McEstimate { value: scale * mean, std_err: scale * (var / nf).sqrt() }
    }
}

/// `τ∞(A)` by averaging the density over uniform points of `A`.
pub fn tau_infty_mc<R: Rng + ?Sized>(dim: Dimension, region: &Region, n: usize, rng: &mut R) -> Result<McEstimate> {
    region.validate(dim)?;
    if n < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let last = dim.cross_len() - 1;
    let (mut s, mut q) = (0.0, 0.0);
    for _ in 0..n {
        let x = region.sample(rng);
        let f = 1.0 + x[last];
        s += f;
        q += f * f;
    }
    Ok(McEstimate::from_sums(s, q, n, tau_density_constant(dim) * region.volume()))
}

/// `τ∞` of an arbitrary region given by its indicator, from uniform points of `𝔻`.
pub fn tau_infty_indicator_mc<R, F>(dim: Dimension, indicator: F, n: usize, rng: &mut R) -> Result<McEstimate>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> bool,
{
    if n < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let disc = Region::centered_ball(dim, 1.0);
    let last = dim.cross_len() - 1;
    let (mut s, mut q) = (0.0, 0.0);
    for _ in 0..n {
        let x = disc.sample(rng);
        if indicator(&x) {
            let f = 1.0 + x[last];
            s += f;
            q += f * f;
        }
    }
    Ok(McEstimate::from_sums(s, q, n, 1.0))
}

/// Ball or disc `D_t(y0)` of radius `t` centred at `(1 - t) y0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetDisc {
    pub y0: CrossSectionPoint,
    pub t: f64,
}

impl OffsetDisc {
    pub fn new(y0: CrossSectionPoint, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("offset disc radius t = {t} outside [0, 1]")));
        }
        Ok(Self { y0, t })
    }

    pub fn center(&self) -> Vec<f64> {
        self.y0.coords().iter().map(|c| (1.0 - self.t) * c).collect()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let c = self.center();
        let d2: f64 = y.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
        d2.sqrt() <= self.t
    }

    pub fn region(&self) -> Region {
        Region::Ball { center: self.center(), radius: self.t }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn ball_laws() {
        let t = tau_infty(d(3), &Region::centered_ball(d(3), 0.5)).unwrap();
        assert!((t - 0.25).abs() < 1e-15);
        let t = tau_infty(d(3), &Region::offset_ball(d(3), 0.5)).unwrap();
        assert!((t - 0.125).abs() < 1e-15);
        for n in [3, 4, 6] {
            let t = tau_infty(d(n), &Region::centered_ball(d(n), 1.0)).unwrap();
            assert!((t - 1.0).abs() < 1e-13);
            let r: f64 = 0.3;
            let t = tau_infty(d(n), &Region::offset_ball(d(n), r)).unwrap();
            assert!((t - r.powi(n as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn rho_normalises_to_tau() {
        let dim = d(4);
        let disc = rho_infty(dim, &Region::centered_ball(dim, 1.0)).unwrap();
        let a = Region::offset_ball(dim, 0.4);
        let ratio = rho_infty(dim, &a).unwrap() / disc;
        assert!((ratio - tau_infty(dim, &a).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn containment() {
        let off = Region::Ball { center: vec![0.6, 0.0], radius: 0.5 };
        assert_eq!(tau_infty(d(3), &off), Err(Error::RegionNotContained));
        let b = Region::Box { lo: vec![-0.8, -0.8], hi: vec![0.8, 0.8] };
        assert_eq!(tau_infty(d(3), &b), Err(Error::RegionNotContained));
        assert!(tau_infty(d(4), &Region::centered_ball(d(3), 0.5)).is_err());
    }

    #[test]
    fn box_matches_mc() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = Region::Box { lo: vec![-0.3, -0.6], hi: vec![0.4, 0.1] };
        let exact = tau_infty(d(3), &b).unwrap();
        let mc = tau_infty_mc(d(3), &b, 100_000, &mut rng).unwrap();
        assert!((mc.value - exact).abs() < mc.three_sigma() + 1e-12);
        let ind = tau_infty_indicator_mc(d(3), |x| b.contains(x), 400_000, &mut rng).unwrap();
        assert!((ind.value - exact).abs() < ind.three_sigma());
    }

    #[test]
    fn rotated_form_at_base_point_is_plain() {
        let dim = d(4);
        let a = Region::Ball { center: vec![0.1, 0.2, -0.3], radius: 0.4 };
        let base = CrossSectionPoint::base(dim);
        let r = tau_infty_rotated(dim, &a, &base).unwrap();
        assert!((r - tau_infty(dim, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn offset_disc_bounds() {
        let y0 = CrossSectionPoint::new(&[0.0, -1.0]).unwrap();
        let full = OffsetDisc::new(y0.clone(), 1.0).unwrap();
        assert!(full.contains(&[0.5, 0.5]));
        let dot = OffsetDisc::new(y0.clone(), 0.0).unwrap();
        assert!(dot.contains(&[0.0, -1.0]));
        assert!(!dot.contains(&[0.0, -0.999]));
        assert!(OffsetDisc::new(y0, 1.5).is_err());
    }
}

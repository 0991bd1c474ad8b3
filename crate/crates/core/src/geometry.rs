//! Geometric primitives of a single Lambertian flight inside the unit tube.
//!
//! A reflection point is written as `(x1, y)` where `x1` is the axial
//! coordinate and `y` lies on the unit sphere of the cross-section. Every
//! flight is first built in the canonical frame where the source sits at the
//! base point `(0, ..., 0, -1)` and is then carried to the actual source by an
//! orthogonal operator of the cross-section.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Inline storage for short coordinate vectors; spills to the heap only for d > 9.
pub type Coords = SmallVec<[f64; 8]>;

const GRAZING_FLOOR: f64 = 1e-300;
const SPHERE_TOL: f64 = 1e-10;

/// Number of ambient dimensions of the tube, at least 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Self(d))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Length of a cross-section vector, `d - 1`.
    pub fn cross_len(self) -> usize {
        self.0 - 1
    }

    /// Number of azimuthal angles, `d - 2`.
    pub fn phi_count(self) -> usize {
        self.0 - 2
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        Self::new(d)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The random angles that drive one flight.
///
/// `theta` is kept through its sine, which is the uniform variable the
/// sampler draws; the trigonometric values of the azimuthal angles are cached
/// because every consumer needs them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionAngles {
    sin_theta: f64,
    phis: Coords,
    sin_phi: Coords,
    cos_phi: Coords,
}

impl ReflectionAngles {
    /// Builds angles from explicit values. Boundary values `±π/2` are accepted
    /// so degenerate configurations can be constructed by hand.
    pub fn new(theta: f64, phis: &[f64]) -> Result<Self> {
        check_angle(theta, "theta")?;
        let sin_theta = if theta.abs() == FRAC_PI_2 { theta.signum() } else { theta.sin() };
        Self::from_sin_theta(sin_theta, phis)
    }

    /// Builds angles from `sin(theta)` directly.
    pub fn from_sin_theta(sin_theta: f64, phis: &[f64]) -> Result<Self> {
        if !(-1.0..=1.0).contains(&sin_theta) {
            return Err(Error::Domain(format!("sin(theta) = {sin_theta} outside [-1, 1]")));
        }
        if phis.is_empty() {
            return Err(Error::InvalidDimension(phis.len() + 2));
        }
        let mut sin_phi = Coords::with_capacity(phis.len());
        let mut cos_phi = Coords::with_capacity(phis.len());
        for &phi in phis {
            check_angle(phi, "phi")?;
            let (s, c) = trig(phi);
            sin_phi.push(s);
            cos_phi.push(c);
        }
        Ok(Self { sin_theta, phis: Coords::from_slice(phis), sin_phi, cos_phi })
    }

    pub fn dim(&self) -> Dimension {
        Dimension(self.phis.len() + 2)
    }

    pub fn theta(&self) -> f64 {
        self.sin_theta.asin()
    }

    pub fn sin_theta(&self) -> f64 {
        self.sin_theta
    }

    pub fn cos_theta(&self) -> f64 {
        ((1.0 - self.sin_theta) * (1.0 + self.sin_theta)).sqrt()
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn sin_phi(&self) -> &[f64] {
        &self.sin_phi
    }

    pub fn cos_phi(&self) -> &[f64] {
        &self.cos_phi
    }

    /// `cos Φ1 ··· cos Φ_{d-2}`.
    pub fn cos_product(&self) -> f64 {
        self.cos_phi.iter().product()
    }

    /// `1 - (cos Φ1 ··· cos Φ_{d-2})²`, accumulated as a telescoping sum so it
    /// keeps full relative precision when every angle is small.
    pub fn cos_product_defect(&self) -> f64 {
        let mut prefix = 1.0;
        let mut acc = 0.0;
        for (s, c) in self.sin_phi.iter().zip(&self.cos_phi) {
            acc += s * s * prefix;
            prefix *= c * c;
        }
        acc
    }

    /// `1 - sin²Θ cos²Φ_{d-2} ··· cos²Φ1`, written as `cos²Θ + sin²Θ (1 - Π cos²)`.
    fn chord_denominator(&self) -> f64 {
        let s = self.sin_theta;
        (1.0 - s) * (1.0 + s) + s * s * self.cos_product_defect()
    }
}

fn check_angle(a: f64, name: &str) -> Result<()> {
    if !(a.abs() <= FRAC_PI_2) {
        return Err(Error::Domain(format!("{name} = {a} outside [-π/2, π/2]")));
    }
    Ok(())
}

fn trig(a: f64) -> (f64, f64) {
    if a.abs() == FRAC_PI_2 {
        (a.signum(), 0.0)
    } else {
        a.sin_cos()
    }
}

/// Draws the angles of one flight: `sin Θ` uniform on `(-1, 1)` and each `Φ_j`
/// uniform on `(-π/2, π/2)`, all independent.
pub fn sample_angles<R: Rng + ?Sized>(dim: Dimension, rng: &mut R) -> ReflectionAngles {
    let u: f64 = rng.sample(Open01);
    let sin_theta = 2.0 * u - 1.0;
    let n = dim.phi_count();
    let mut phis = Coords::with_capacity(n);
    let mut sin_phi = Coords::with_capacity(n);
    let mut cos_phi = Coords::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.sample(Open01);
        let phi = PI * (u - 0.5);
        let (s, c) = phi.sin_cos();
        phis.push(phi);
        sin_phi.push(s);
        cos_phi.push(c);
    }
    ReflectionAngles { sin_theta, phis, sin_phi, cos_phi }
}

/// Length of the flight from the base point to the next wall hit,
/// `R = 2 cos Θ / (1 - sin²Θ cos²Φ_{d-2} ··· cos²Φ1)`.
///
/// `R` is the full flight length, axial travel included, and is unbounded;
/// only its projection onto the cross-section is at most 2.
pub fn chord_length(angles: &ReflectionAngles) -> Result<f64> {
    let denominator = angles.chord_denominator();
    if !(denominator >= GRAZING_FLOOR) {
        return Err(Error::DegenerateGrazing { denominator });
    }
    let r = 2.0 * angles.cos_theta() / denominator;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::DegenerateGrazing { denominator });
    }
    Ok(r)
}

/// Displacement of one flight started at the base point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightVector {
    coords: Coords,
    chord: f64,
}

impl FlightVector {
    /// All `d` coordinates, axial first.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn chord(&self) -> f64 {
        self.chord
    }

    pub fn axial(&self) -> f64 {
        self.coords[0]
    }

    /// The last `d - 1` coordinates.
    pub fn transverse(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// Where the flight lands on the wall, in the canonical frame: the base
    /// point plus the transverse displacement.
    pub fn landing_point(&self) -> CrossSectionPoint {
        let mut y = Coords::from_slice(self.transverse());
        if let Some(last) = y.last_mut() {
            *last -= 1.0;
        }
        CrossSectionPoint(y)
    }
}

/// The flight displacement `v(R)` with the descending product-of-cosines
/// pattern, scaled by [`chord_length`].
pub fn flight_vector(angles: &ReflectionAngles) -> Result<FlightVector> {
    let chord = chord_length(angles)?;
    let n = angles.phis.len();
    let rs = chord * angles.sin_theta;
    let mut coords = Coords::from_elem(0.0, n + 2);
    // coords[k] = R sinΘ sinΦ_k Π_{j>k} cosΦ_j for k = 1..=n; coords[0] takes the full product.
    let mut suffix = 1.0;
    for k in (1..=n).rev() {
        coords[k] = rs * angles.sin_phi[k - 1] * suffix;
        suffix *= angles.cos_phi[k - 1];
    }
    coords[0] = rs * suffix;
    coords[n + 1] = chord * angles.cos_theta();
    Ok(FlightVector { coords, chord })
}

/// Axial advance of one flight, `X = 2 cos Θ sin Θ Π cos Φ / (1 - sin²Θ Π cos²Φ)`.
///
/// Agrees with the first coordinate of [`flight_vector`]. Inputs that make the
/// chord degenerate (only constructible by hand) yield a non-finite value.
pub fn axial_step(angles: &ReflectionAngles) -> f64 {
    let s = angles.sin_theta;
    2.0 * angles.cos_theta() * s * angles.cos_product() / angles.chord_denominator()
}

/// A point of the unit sphere in the cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionPoint(Coords);

impl CrossSectionPoint {
    /// Wraps `coords`, checking that the norm is 1 within `1e-10`.
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidDimension(coords.len() + 1));
        }
        let norm = norm(coords);
        if (norm - 1.0).abs() > SPHERE_TOL {
            return Err(Error::Domain(format!("cross-section point has norm {norm}")));
        }
        Ok(Self(Coords::from_slice(coords)))
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalized(coords: &[f64]) -> Result<Self> {
        let n = norm(coords);
        if !(n > 0.0 && n.is_finite()) || coords.len() < 2 {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self(coords.iter().map(|c| c / n).collect()))
    }

    /// The base point `(0, ..., 0, -1)`.
    pub fn base(dim: Dimension) -> Self {
        let mut y = Coords::from_elem(0.0, dim.cross_len());
        y[dim.cross_len() - 1] = -1.0;
        Self(y)
    }

    pub(crate) fn from_raw(coords: Coords) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

/// Draws a point uniformly on the unit sphere of `R^n` by normalizing a
/// standard Gaussian vector.
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Coords {
    loop {
        let g: Coords = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r = norm(&g);
        if r > 1e-150 {
            return g.into_iter().map(|x| x / r).collect();
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x ↦ x - coef (w·x) w`, a reflection when `coef = 2/|w|²`.
#[derive(Debug, Clone, PartialEq)]
struct Reflector {
    w: Coords,
    coef: f64,
}

impl Reflector {
    fn through(w: Coords) -> Option<Self> {
        let nn = dot(&w, &w);
        (nn > 1e-30).then(|| Self { coef: 2.0 / nn, w })
    }

    fn apply(&self, x: &mut [f64]) {
        let k = self.coef * dot(&self.w, x);
        for (xi, wi) in x.iter_mut().zip(&self.w) {
            *xi -= k * wi;
        }
    }
}

/// How the canonical frame is carried onto a source point of the sphere.
///
/// Any orthogonal map sending the base point to the source is admissible; two
/// deterministic constructions are provided so that law invariance under the
/// choice can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    /// The Householder reflection swapping the base point and the target.
    #[default]
    Householder,
    /// The Householder reflection followed by a second reflection that fixes
    /// the target, so the composite is a proper rotation.
    Twisted,
}

impl Frame {
    pub fn rotation_to(self, target: &CrossSectionPoint) -> RotationOperator {
        match self {
            Frame::Householder => rotation_to(target),
            Frame::Twisted => rotation_to_twisted(target),
        }
    }
}

/// An orthogonal operator of the cross-section mapping the base point to
/// `target`, stored as a product of at most two reflections.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationOperator {
    target: CrossSectionPoint,
    reflectors: SmallVec<[Reflector; 2]>,
}

impl RotationOperator {
    pub fn target(&self) -> &CrossSectionPoint {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.target.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.reflectors.is_empty()
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        for r in &self.reflectors {
            r.apply(x);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Coords {
        let mut y = Coords::from_slice(x);
        self.apply_in_place(&mut y);
        y
    }

    /// Dense row-major matrix of the operator.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = Coords::from_elem(0.0, n);
            e[j] = 1.0;
            self.apply_in_place(&mut e);
            for i in 0..n {
                m[i][j] = e[i];
            }
        }
        m
    }
}

/// The Householder reflection exchanging the base point and `target`;
/// the identity when they coincide.
pub fn rotation_to(target: &CrossSectionPoint) -> RotationOperator {
    let mut w = Coords::from_slice(&target.0);
    for x in w.iter_mut() {
        *x = -*x;
    }
    if let Some(last) = w.last_mut() {
        *last -= 1.0;
    }
    let reflectors = Reflector::through(w).into_iter().collect();
    RotationOperator { target: target.clone(), reflectors }
}

/// [`rotation_to`] followed by the reflection across the hyperplane orthogonal
/// to the first coordinate axis made orthogonal to `target` (the second axis
/// when the first is parallel to `target`). The second factor fixes `target`.
pub fn rotation_to_twisted(target: &CrossSectionPoint) -> RotationOperator {
    let mut op = rotation_to(target);
    let y = &target.0;
    for axis in 0..y.len() {
        let mut w = Coords::from_elem(0.0, y.len());
        w[axis] = 1.0;
        let k = y[axis];
        for (wi, yi) in w.iter_mut().zip(y) {
            *wi -= k * yi;
        }
        if dot(&w, &w) > 1e-6 {
            op.reflectors.extend(Reflector::through(w));
            break;
        }
    }
    op
}

/// Intersection of a ray with the exit plane `{x1 = 0}`, in cross-section coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneHit(Coords);

impl PlaneHit {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

/// Where a ray leaving `(-u, 0, ..., 0, -1)` along the flight direction of
/// `angles` crosses the plane `{x1 = 0}`; `None` when the axial component of
/// the direction is not positive and the ray never gets there.
pub fn plane_hit(u: f64, angles: &ReflectionAngles) -> Result<Option<PlaneHit>> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::Domain(format!("plane distance u = {u} must be positive")));
    }
    let p = angles.cos_product();
    if !(angles.sin_theta > 0.0 && p > 0.0) {
        return Ok(None);
    }
    let n = angles.phis.len();
    let mut z = Coords::with_capacity(n + 1);
    let mut prefix = 1.0;
    for k in 0..n {
        prefix *= angles.cos_phi[k];
        z.push(u * angles.sin_phi[k] / prefix);
    }
    z.push(u * angles.cos_theta() / angles.sin_theta / p - 1.0);
    Ok(Some(PlaneHit(z)))
}

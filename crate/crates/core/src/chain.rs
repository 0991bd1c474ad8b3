//! The Markov chain of reflection points and the first-passage data it produces.

use rand::Rng;
use rand_distr::Open01;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{
    dot, flight_vector, sample_angles, sample_sphere, Coords, CrossSectionPoint, Dimension, Frame,
    ReflectionAngles,
};

/// Position of the chain after `step_index` reflections.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub axial: f64,
    pub cross: CrossSectionPoint,
    pub step_index: u64,
}

/// Starts a chain at axial position 0 with a uniform cross-section point.
pub fn init_chain<R: Rng + ?Sized>(dim: Dimension, rng: &mut R) -> ChainState {
    let cross = CrossSectionPoint::from_raw(sample_sphere(dim.cross_len(), rng));
    ChainState { axial: 0.0, cross, step_index: 0 }
}

/// Full `d`-dimensional displacement of one flight in the tube frame, axial first.
pub type Displacement = Coords;

/// Advances `state` by the flight described by `angles`, with the canonical
/// frame carried to the current point by `frame`.
pub fn step_with_angles(
    state: &ChainState,
    angles: &ReflectionAngles,
    frame: Frame,
) -> Result<(ChainState, Displacement)> {
    let flight = flight_vector(angles)?;
    let op = frame.rotation_to(&state.cross);
    let mut cross = Coords::from_slice(flight.landing_point().coords());
    op.apply_in_place(&mut cross);
    // Project back onto the sphere; without this, rounding drift in the
    // source point is amplified by the next reflection and grows without bound.
    let len = dot(&cross, &cross).sqrt();
    cross.iter_mut().for_each(|c| *c /= len);
    let mut disp = Coords::with_capacity(cross.len() + 1);
    disp.push(flight.axial());
    disp.extend(cross.iter().zip(state.cross.coords()).map(|(a, b)| a - b));
    let next = ChainState {
        axial: state.axial + flight.axial(),
        cross: CrossSectionPoint::from_raw(cross),
        step_index: state.step_index + 1,
    };
    Ok((next, disp))
}

/// One step of the chain with freshly sampled angles and the Householder frame.
pub fn step_chain<R: Rng + ?Sized>(state: &ChainState, rng: &mut R) -> Result<ChainState> {
    let dim = Dimension::new(state.cross.coords().len() + 1)?;
    let angles = sample_angles(dim, rng);
    step_with_angles(state, &angles, Frame::Householder).map(|(s, _)| s)
}

/// What happened when the chain first went above level `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitRecord {
    /// `N_s`, the index of the first position above `s`.
    pub n_s: u64,
    pub overshoot: f64,
    pub undershoot: f64,
    pub pre_exit_axial: f64,
    pub pre_exit_cross: CrossSectionPoint,
    /// Where the last flight crosses the plane `{x1 = s}`, in cross-section coordinates.
    pub exit_point: Coords,
    /// Unit direction of the last flight.
    pub exit_dir: Coords,
}

impl ExitRecord {
    /// `U_s / (U_s + O_s)`.
    pub fn ratio(&self) -> f64 {
        self.undershoot / (self.undershoot + self.overshoot)
    }

    /// Whether the exit point lies in the disc of radius `t` centred at
    /// `(1 - t)` times the last reflection point.
    pub fn in_offset_disc(&self, t: f64) -> bool {
        let y0 = self.pre_exit_cross.coords();
        let d2: f64 = self.exit_point.iter().zip(y0).map(|(y, c)| (y - (1.0 - t) * c).powi(2)).sum();
        d2.sqrt() <= t
    }
}

/// Runs a chain from a uniform start until its axial coordinate first exceeds `s`.
pub fn run_to_exit<R: Rng + ?Sized>(dim: Dimension, s: f64, rng: &mut R, max_steps: u64) -> Result<ExitRecord> {
    run_to_exit_in(dim, s, rng, max_steps, Frame::Householder)
}

/// [`run_to_exit`] with an explicit choice of frame operator.
pub fn run_to_exit_in<R: Rng + ?Sized>(
    dim: Dimension,
    s: f64,
    rng: &mut R,
    max_steps: u64,
    frame: Frame,
) -> Result<ExitRecord> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("level s = {s} must be positive")));
    }
    let start = init_chain(dim, rng);
    let mut walker = Walker::new(dim, frame, start.cross.coords());
    let mut axial = 0.0;
    let mut k = 0u64;
    loop {
        if k >= max_steps {
            return Err(Error::StepBudgetExhausted { max_steps });
        }
        let x = walker.advance(rng)?;
        k += 1;
        if axial + x > s {
            let prev = ChainState {
                axial,
                cross: CrossSectionPoint::from_raw(Coords::from_slice(&walker.prev)),
                step_index: k - 1,
            };
            let next = ChainState {
                axial: axial + x,
                cross: CrossSectionPoint::from_raw(Coords::from_slice(&walker.cross)),
                step_index: k,
            };
            let mut disp = Coords::with_capacity(dim.get());
            disp.push(x);
            disp.extend(walker.cross.iter().zip(&walker.prev).map(|(a, b)| a - b));
            return Ok(exit_record(prev, next, &disp, s));
        }
        axial += x;
    }
}

/// Allocation-free stepping of the cross-section point.
///
/// Performs the same arithmetic as [`step_with_angles`] on the angles
/// [`sample_angles`] would draw, without materialising them.
struct Walker {
    frame: Frame,
    cross: Coords,
    prev: Coords,
    sin_phi: Coords,
    cos_phi: Coords,
}

impl Walker {
    fn new(dim: Dimension, frame: Frame, cross: &[f64]) -> Self {
        let n = dim.phi_count();
        Self {
            frame,
            cross: Coords::from_slice(cross),
            prev: Coords::from_slice(cross),
            sin_phi: Coords::from_elem(0.0, n),
            cos_phi: Coords::from_elem(0.0, n),
        }
    }

    /// Moves to the next reflection point and returns the axial increment.
    fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        let n = self.sin_phi.len();
        let u: f64 = rng.sample(Open01);
        let v = 2.0 * u - 1.0;
        for k in 0..n {
            let u: f64 = rng.sample(Open01);
            let (s, c) = (PI * (u - 0.5)).sin_cos();
            self.sin_phi[k] = s;
            self.cos_phi[k] = c;
        }
        let mut prefix = 1.0;
        let mut defect = 0.0;
        for k in 0..n {
            let (s, c) = (self.sin_phi[k], self.cos_phi[k]);
            defect += s * s * prefix;
            prefix *= c * c;
        }
        let denominator = (1.0 - v) * (1.0 + v) + v * v * defect;
        if !(denominator >= 1e-300) {
            return Err(Error::DegenerateGrazing { denominator });
        }
        let cos_theta = ((1.0 - v) * (1.0 + v)).sqrt();
        let chord = 2.0 * cos_theta / denominator;
        let rs = chord * v;

        std::mem::swap(&mut self.prev, &mut self.cross);
        let land = &mut self.cross;
        let mut suffix = 1.0;
        for k in (0..n).rev() {
            land[k] = rs * self.sin_phi[k] * suffix;
            suffix *= self.cos_phi[k];
        }
        land[n] = chord * cos_theta - 1.0;
        let axial = rs * suffix;

        match self.frame {
            Frame::Householder => {
                let y = &self.prev;
                let mut nn = 0.0;
                let mut wx = 0.0;
                for i in 0..=n {
                    let w = if i == n { -y[i] - 1.0 } else { -y[i] };
                    nn += w * w;
                    wx += w * land[i];
                }
                if nn > 1e-30 {
                    let k = 2.0 / nn * wx;
                    for i in 0..=n {
                        let w = if i == n { -y[i] - 1.0 } else { -y[i] };
                        land[i] -= k * w;
                    }
                }
            }
            Frame::Twisted => {
                let y = CrossSectionPoint::from_raw(self.prev.clone());
                self.frame.rotation_to(&y).apply_in_place(land);
            }
        }
        let len = dot(land, land).sqrt();
        land.iter_mut().for_each(|c| *c /= len);
        Ok(axial)
    }
}

fn exit_record(prev: ChainState, next: ChainState, disp: &[f64], s: f64) -> ExitRecord {
    let undershoot = s - prev.axial;
    let overshoot = next.axial - s;
    let lambda = undershoot / (next.axial - prev.axial);
    let exit_point = prev
        .cross
        .coords()
        .iter()
        .zip(next.cross.coords())
        .map(|(a, b)| a + lambda * (b - a))
        .collect();
    let len = dot(disp, disp).sqrt();
    ExitRecord {
        n_s: next.step_index,
        overshoot,
        undershoot,
        pre_exit_axial: prev.axial,
        pre_exit_cross: prev.cross,
        exit_point,
        exit_dir: disp.iter().map(|x| x / len).collect(),
    }
}

/// A supply of i.i.d. axial increments.
pub trait AxialStepSource {
    fn next_step(&mut self) -> f64;
}

/// Axial increments of Lambertian flights. Consumes the generator exactly as
/// [`sample_angles`] does, so it reproduces [`crate::geometry::axial_step`]
/// applied to those angles.
pub struct LambertSteps<'a, R: Rng + ?Sized> {
    dim: Dimension,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> LambertSteps<'a, R> {
    pub fn new(dim: Dimension, rng: &'a mut R) -> Self {
        Self { dim, rng }
    }
}

impl<R: Rng + ?Sized> AxialStepSource for LambertSteps<'_, R> {
    fn next_step(&mut self) -> f64 {
        let u: f64 = self.rng.sample(Open01);
        let v = 2.0 * u - 1.0;
        let mut prod = 1.0;
        let mut defect = 0.0;
        for _ in 0..self.dim.phi_count() {
            let u: f64 = self.rng.sample(Open01);
            let (s, c) = (PI * (u - 0.5)).sin_cos();
            defect += s * s * prod * prod;
            prod *= c;
        }
        let cos_theta = ((1.0 - v) * (1.0 + v)).sqrt();
        2.0 * cos_theta * v * prod / ((1.0 - v) * (1.0 + v) + v * v * defect)
    }
}

impl<F: FnMut() -> f64> AxialStepSource for F {
    fn next_step(&mut self) -> f64 {
        self()
    }
}

/// Undershoot and overshoot at level 0 of the axial walk started at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRecord {
    pub o0: f64,
    pub u0: f64,
    /// The first increment of the walk.
    pub first_step: f64,
    pub steps: u64,
}

/// Runs the axial walk from 0 until it is first strictly positive.
pub fn run_ladder<R: Rng + ?Sized>(dim: Dimension, rng: &mut R, max_steps: u64) -> Result<LadderRecord> {
    ladder_from(&mut LambertSteps::new(dim, rng), max_steps)
}

/// [`run_ladder`] over an arbitrary step source.
pub fn ladder_from<S: AxialStepSource + ?Sized>(steps: &mut S, max_steps: u64) -> Result<LadderRecord> {
    let mut pos = 0.0;
    let mut first_step = f64::NAN;
    for k in 1..=max_steps {
        let x = steps.next_step();
        if k == 1 {
            first_step = x;
        }
        let next = pos + x;
        if next > 0.0 {
            return Ok(LadderRecord { o0: next, u0: 0.0 - pos, first_step, steps: k });
        }
        pos = next;
    }
    Err(Error::StepBudgetExhausted { max_steps })
}

/// Visit counts of `S_k - s` for `k < N_s`, accumulated over many walks.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitHistogram {
    pub level: f64,
    /// Bin edges in units of `level`; bin `j` is `[e_j s, e_{j+1} s)`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Per-bin sums of squared per-trajectory counts.
    pub sum_sq: Vec<f64>,
    pub trajectories: u64,
    /// Walks dropped because they ran out of steps.
    pub excluded: u64,
}

impl VisitHistogram {
    pub fn new(level: f64, bin_edges: &[f64]) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(Error::Domain(format!("level s = {level} must be positive")));
        }
        if bin_edges.len() < 2 {
            return Err(Error::InvalidInput("need at least two bin edges".into()));
        }
        if bin_edges.windows(2).any(|w| !(w[0] < w[1])) || !(bin_edges[bin_edges.len() - 1] <= 0.0) {
            return Err(Error::InvalidInput("bin edges must increase and stay at or below 0".into()));
        }
        let n = bin_edges.len() - 1;
        Ok(Self {
            level,
            bin_edges: bin_edges.to_vec(),
            counts: vec![0; n],
            sum_sq: vec![0.0; n],
            trajectories: 0,
            excluded: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Index of the bin holding the relative position `x = S_k - s`.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let u = x / self.level;
        let j = self.bin_edges.partition_point(|&e| e <= u);
        (j >= 1 && j < self.bin_edges.len()).then(|| j - 1)
    }

    /// Merges the per-bin counts of one finished walk.
    pub fn record(&mut self, counts: &[u64]) {
        for ((c, q), &k) in self.counts.iter_mut().zip(&mut self.sum_sq).zip(counts) {
            *c += k;
            *q += (k as f64) * (k as f64);
        }
        self.trajectories += 1;
    }

    pub fn merge(&mut self, other: &VisitHistogram) {
        for j in 0..self.counts.len() {
            self.counts[j] += other.counts[j];
            self.sum_sq[j] += other.sum_sq[j];
        }
        self.trajectories += other.trajectories;
        self.excluded += other.excluded;
    }

    /// Estimated expected visits per walk in each bin.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.trajectories as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Standard error of [`Self::mean`] per bin.
    pub fn std_err(&self) -> Vec<f64> {
        let n = self.trajectories as f64;
        self.counts
            .iter()
            .zip(&self.sum_sq)
            .map(|(&c, &q)| {
                let m = c as f64 / n;
                ((q / n - m * m).max(0.0) / (n - 1.0)).sqrt()
            })
            .collect()
    }

    /// Fraction of walks dropped for exhausting the step budget.
    pub fn exclusion_rate(&self) -> f64 {
        self.excluded as f64 / (self.trajectories + self.excluded) as f64
    }
}

/// Per-bin visit counts of one walk before it first passes `hist.level`.
pub fn walk_visits<S: AxialStepSource + ?Sized>(
    hist: &VisitHistogram,
    steps: &mut S,
    max_steps: u64,
) -> Result<Vec<u64>> {
    let s = hist.level;
    let lo = hist.bin_edges[0] * s;
    let hi = hist.bin_edges[hist.bin_edges.len() - 1] * s;
    let mut counts = vec![0u64; hist.bins()];
    let mut pos = 0.0;
    let mut k = 0u64;
    while pos <= s {
        let x = pos - s;
        if x >= lo && x < hi {
            if let Some(j) = hist.bin_of(x) {
                counts[j] += 1;
            }
        }
        if k >= max_steps {
            return Err(Error::StepBudgetExhausted { max_steps });
        }
        pos += steps.next_step();
        k += 1;
    }
    Ok(counts)
}

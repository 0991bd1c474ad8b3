//! Batches of independent trajectories on reproducible streams.

use crate::chain::{run_ladder, run_to_exit_in, walk_visits, ExitRecord, LadderRecord, LambertSteps, VisitHistogram};
use crate::error::{Error, Result};
use crate::geometry::{Dimension, Frame};
use crate::runner::Runner;
use crate::streams::StreamKey;
use crate::chain::AxialStepSource;

/// Trajectories are generated in blocks of this many indices when sampling
/// until a target is met, so the truncation point never depends on timing.
pub const BLOCK: u64 = 4096;

/// Exit records of trajectories `0..n`, in index order, with the number of
/// trajectories dropped for exhausting `max_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitSample {
    pub records: Vec<ExitRecord>,
    pub excluded: u64,
    /// Indices examined, kept or not.
    pub attempted: u64,
}

impl ExitSample {
    pub fn exclusion_rate(&self) -> f64 {
        self.excluded as f64 / self.attempted.max(1) as f64
    }
}

fn exits_range(
    dim: Dimension,
    s: f64,
    key: &StreamKey,
    runner: &Runner,
    max_steps: u64,
    frame: Frame,
    range: (u64, u64),
) -> Result<Vec<Option<ExitRecord>>> {
    runner
        .map_indexed(range.0, range.1, |i| {
            let mut rng = key.stream(i);
            match run_to_exit_in(dim, s, &mut rng, max_steps, frame) {
                Ok(r) => Ok(Some(r)),
                Err(Error::StepBudgetExhausted { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .into_iter()
        .collect()
}

/// Runs `n` trajectories to level `s`.
pub fn simulate_exits(
    dim: Dimension,
    s: f64,
    n: u64,
    key: &StreamKey,
    runner: &Runner,
    max_steps: u64,
    frame: Frame,
) -> Result<ExitSample> {
    let out = exits_range(dim, s, key, runner, max_steps, frame, (0, n))?;
    let excluded = out.iter().filter(|r| r.is_none()).count() as u64;
    Ok(ExitSample { records: out.into_iter().flatten().collect(), excluded, attempted: n })
}

/// Runs trajectories in index order until at least `min_total` of them have
/// finished and at least `min_matching` satisfy `keep`, then truncates at the
/// smallest index prefix meeting both targets.
#[allow(clippy::too_many_arguments)]
pub fn simulate_exits_until<F>(
    dim: Dimension,
    s: f64,
    min_total: u64,
    min_matching: u64,
    keep: F,
    key: &StreamKey,
    runner: &Runner,
    max_steps: u64,
    max_attempts: u64,
) -> Result<ExitSample>
where
    F: Fn(&ExitRecord) -> bool,
{
    let mut records = Vec::new();
    let mut excluded = 0;
    let mut matching = 0;
    let mut next = 0u64;
    while next < max_attempts {
        let end = (next + BLOCK).min(max_attempts);
        let block = exits_range(dim, s, key, runner, max_steps, Frame::Householder, (next, end))?;
        for (off, r) in block.into_iter().enumerate() {
            match r {
                Some(r) => {
                    matching += keep(&r) as u64;
                    records.push(r);
                }
                None => excluded += 1,
            }
            if records.len() as u64 >= min_total && matching >= min_matching {
                return Ok(ExitSample { records, excluded, attempted: next + off as u64 + 1 });
            }
        }
        next = end;
    }
    Err(Error::InvalidInput(format!(
        "only {matching} matching exits among {} after {max_attempts} attempts",
        records.len()
    )))
}

/// Ladder records of walks `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderSample {
    pub records: Vec<LadderRecord>,
    pub excluded: u64,
}

pub fn simulate_ladders(dim: Dimension, n: u64, key: &StreamKey, runner: &Runner, max_steps: u64) -> Result<LadderSample> {
    let out = runner.map_indexed(0, n, |i| run_ladder(dim, &mut key.stream(i), max_steps).ok());
    let excluded = out.iter().filter(|r| r.is_none()).count() as u64;
    Ok(LadderSample { records: out.into_iter().flatten().collect(), excluded })
}

/// Visit histogram over walks `0..n`; walks that exhaust `max_steps` are
/// dropped and counted in `excluded`.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_visits(
    dim: Dimension,
    s: f64,
    bin_edges: &[f64],
    n: u64,
    key: &StreamKey,
    runner: &Runner,
    max_steps: u64,
) -> Result<VisitHistogram> {
    let mut hist = VisitHistogram::new(s, bin_edges)?;
    let template = hist.clone();
    let out = runner.map_indexed(0, n, |i| {
        let mut rng = key.stream(i);
        walk_visits(&template, &mut LambertSteps::new(dim, &mut rng), max_steps).ok()
    });
    for r in out {
        match r {
            Some(c) => hist.record(&c),
            None => hist.excluded += 1,
        }
    }
    Ok(hist)
}

/// `n` axial steps, the `i`-th drawn from stream `i`.
pub fn sample_axial_steps(dim: Dimension, n: u64, key: &StreamKey, runner: &Runner) -> Vec<f64> {
    const CHUNK: u64 = 1 << 16;
    let chunks = runner.map_indexed(0, n.div_ceil(CHUNK), |c| {
        let mut rng = key.stream(c);
        let mut src = LambertSteps::new(dim, &mut rng);
        let len = CHUNK.min(n - c * CHUNK);
        (0..len).map(|_| src.next_step()).collect::<Vec<f64>>()
    });
    chunks.concat()
}

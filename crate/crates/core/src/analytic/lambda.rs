//! The functional `Λ(t) = E[(t(U0 + O0) - U0)^+] / E[O0]` of the ladder
//! variables at level 0, the limit law of `U_s / (U_s + O_s)`.

use crate::chain::LadderRecord;
use crate::error::{Error, Result};

/// Number of batches used for the batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 32;

/// `Λ̂` on a grid of `t` values with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEstimate {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub mean_o0: f64,
    pub mean_u0: f64,
    /// `Ê[X 1{X > 0}]` over the first increments.
    pub mean_positive_step: f64,
    pub samples: usize,
}

impl LambdaEstimate {
    /// The lower bound `t E[X 1{X>0}] / E[O0]` at each grid point.
    pub fn lower_bound(&self) -> Vec<f64> {
        let k = self.mean_positive_step / self.mean_o0;
        self.t_grid.iter().map(|t| t * k).collect()
    }
}

/// Estimates `Λ` from ladder samples.
///
/// The ratio's standard error comes from the delta method applied to batch
/// sums, `z_b = num_b - Λ̂ den_b`. The values at `t = 0` and `t = 1` are
/// exactly 0 and 1.
pub fn lambda_from_ladders(ladders: &[LadderRecord], t_grid: &[f64], batches: usize) -> Result<LambdaEstimate> {
    if batches < 2 {
        return Err(Error::TooFewBatches { batches, required: 2 });
    }
    if ladders.len() < batches {
        return Err(Error::InvalidInput(format!("{} ladders cannot fill {batches} batches", ladders.len())));
    }
    if let Some(t) = t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
    }
    let n = ladders.len();
    let bounds: Vec<usize> = (0..=batches).map(|b| b * n / batches).collect();
    let sum_over = |f: &dyn Fn(&LadderRecord) -> f64| -> Vec<f64> {
        bounds.windows(2).map(|w| ladders[w[0]..w[1]].iter().map(f).sum()).collect()
    };
    let den_b = sum_over(&|l| l.o0);
    let den: f64 = den_b.iter().sum();
    let mean_o0 = den / n as f64;
    let mean_u0 = ladders.iter().map(|l| l.u0).sum::<f64>() / n as f64;
    let mean_positive_step = ladders.iter().map(|l| l.first_step.max(0.0)).sum::<f64>() / n as f64;

    let mut values = Vec::with_capacity(t_grid.len());
    let mut std_errs = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t == 0.0 || t == 1.0 {
            values.push(t);
            std_errs.push(0.0);
            continue;
        }
        let num_b = sum_over(&|l| (t * (l.u0 + l.o0) - l.u0).max(0.0));
        let lam = num_b.iter().sum::<f64>() / den;
        let z: Vec<f64> = num_b.iter().zip(&den_b).map(|(a, b)| a - lam * b).collect();
        let zm = z.iter().sum::<f64>() / batches as f64;
        let var = z.iter().map(|v| (v - zm).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let mean_den = den / batches as f64;
        values.push(lam);
        std_errs.push((var / batches as f64).sqrt() / mean_den);
    }
    Ok(LambdaEstimate {
        t_grid: t_grid.to_vec(),
        values,
        std_errs,
        mean_o0,
        mean_u0,
        mean_positive_step,
        samples: n,
    })
}

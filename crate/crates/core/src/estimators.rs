//! Empirical distributions, tail fits, Kolmogorov–Smirnov statistics and
//! batch-means confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Samples sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Sorts `samples`; NaNs are rejected.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("empirical distribution needs at least one sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidInput("samples contain NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Number of samples strictly greater than `x`.
    pub fn count_above(&self, x: f64) -> usize {
        self.len() - self.sorted.partition_point(|&v| v <= x)
    }

    /// Empirical quantile by the nearest-rank rule.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let k = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }
}

/// Fraction of samples strictly greater than `x`.
pub fn empirical_survival(dist: &EmpiricalDistribution, x: f64) -> f64 {
    dist.count_above(x) as f64 / dist.len() as f64
}

/// Least-squares line through `(log x, log P̂(X > x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub x_range: (f64, f64),
    pub stderr_slope: f64,
    pub grid_points: usize,
}

/// Minimum number of samples that must exceed the upper end of a fit window.
pub const MIN_EXCEEDANCES: usize = 100;

/// Fits `log P̂(X > x) = intercept + slope · log x` on `grid_points`
/// log-spaced abscissae in `[lo, hi]`.
pub fn loglog_tail_fit(dist: &EmpiricalDistribution, lo: f64, hi: f64, grid_points: usize) -> Result<TailFit> {
    if !(0.0 < lo && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("fit window [{lo}, {hi}] must satisfy 0 < lo < hi")));
    }
    if grid_points < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 grid points, got {grid_points}")));
    }
    let exceedances = dist.count_above(hi);
    if exceedances < MIN_EXCEEDANCES {
        return Err(Error::InsufficientTailData { exceedances, required: MIN_EXCEEDANCES });
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / (grid_points - 1) as f64;
    let pts: Vec<(f64, f64)> = (0..grid_points)
        .map(|k| {
            let lx = llo + step * k as f64;
            (lx, empirical_survival(dist, lx.exp()).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(TailFit {
        slope,
        intercept,
        x_range: (lo, hi),
        stderr_slope: (rss / (n - 2.0) / sxx).sqrt(),
        grid_points,
    })
}

/// The default window: `lo` at the 95th percentile, `hi` at the largest
/// order statistic that leaves 500 samples above it.
pub fn default_tail_window(dist: &EmpiricalDistribution) -> Result<(f64, f64)> {
    const KEEP: usize = 500;
    let n = dist.len();
    if n <= KEEP {
        return Err(Error::InsufficientTailData { exceedances: n, required: KEEP + 1 });
    }
    let lo = dist.quantile(0.95);
    let hi = dist.sorted[n - KEEP - 1];
    if !(lo < hi) {
        return Err(Error::InsufficientTailData { exceedances: dist.count_above(lo), required: KEEP + 1 });
    }
    Ok((lo, hi))
}

/// One-sample Kolmogorov–Smirnov distance `sup |F̂ - F|`.
///
/// Both one-sided gaps are taken at every sample point, with the left limit
/// of the reference evaluated just below the point so that atoms of `cdf`
/// are handled.
pub fn ks_statistic<F: Fn(f64) -> f64>(dist: &EmpiricalDistribution, cdf: F) -> f64 {
    let n = dist.len() as f64;
    let xs = &dist.sorted;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let at = (j + 1) as f64 / n;
        d = d.max((at - cdf(x)).abs()).max((below - cdf(x.next_down())).abs());
        i = j + 1;
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (xa, xb) = (&a.sorted, &b.sorted);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `P(K <= x)` for the Kolmogorov distribution.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // Jacobi-transformed series converges fast for small x.
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (0..50).map(|k| (-((2 * k + 1) as f64).powi(2) * c).exp()).sum();
        return (2.0 * std::f64::consts::PI).sqrt() / x * s;
    }
    let s: f64 = (1..100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * x * x).exp()
        })
        .sum();
    1.0 - 2.0 * s
}

/// Asymptotic critical value `K_{1-α} / √n` of the one-sample KS distance.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.1, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / (n as f64).sqrt()
}

/// Mean with a 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width_95: f64,
    pub std_err: f64,
}

/// Minimum number of batches for [`batch_mean_ci`].
pub const MIN_BATCHES: usize = 8;

/// Batch-means interval: the stream is cut into `batches` contiguous
/// batches of (nearly) equal length and a Student-t interval is built from
/// the batch means.
pub fn batch_mean_ci(values: &[f64], batches: usize) -> Result<MeanCi> {
    if batches < MIN_BATCHES {
        return Err(Error::TooFewBatches { batches, required: MIN_BATCHES });
    }
    let n = values.len();
    if n < batches {
        return Err(Error::InvalidInput(format!("{n} values cannot fill {batches} batches")));
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let chunk = &values[b * n / batches..(b + 1) * n / batches];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let bm = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let std_err = (var / batches as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (batches - 1) as f64)
        .map_err(|e| Error::InvalidInput(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(MeanCi { mean, half_width_95: t * std_err, std_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist(v: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn survival_examples() {
        let d = dist(&[1.0, 2.0, 3.0]);
        assert_eq!(empirical_survival(&d, 0.0), 1.0);
        assert_eq!(empirical_survival(&d, 4.0), 0.0);
        assert!((empirical_survival(&d, 1.5) - 2.0 / 3.0).abs() < 1e-15);
        assert!((empirical_survival(&d, 2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!(EmpiricalDistribution::new(vec![]).is_err());
        assert!(EmpiricalDistribution::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn ks_examples() {
        let d = dist(&[0.5]);
        assert!((ks_statistic(&d, |x| x.clamp(0.0, 1.0)) - 0.5).abs() < 1e-15);
        let d = dist(&[0.1, 0.4, 0.4, 0.9]);
        assert_eq!(ks_statistic(&d, |x| d.cdf(x)), 0.0);
        assert_eq!(ks_two_sample(&d, &d), 0.0);
    }

    #[test]
    fn kolmogorov_quantiles() {
        assert!((ks_critical_value(1, 0.01) - 1.6276).abs() < 1e-3);
        assert!((ks_critical_value(1, 0.05) - 1.3581).abs() < 1e-3);
        assert!((kolmogorov_cdf(1.0 - 1e-12) - kolmogorov_cdf(1.0)).abs() < 1e-10);
    }

    #[test]
    fn flat_survival_gives_zero_slope() {
        let mut v = vec![100.0; 1000];
        v.extend(std::iter::repeat_n(0.5, 1000));
        let fit = loglog_tail_fit(&dist(&v), 1.0, 10.0, 20).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!((fit.intercept - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pareto_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..1_000_000).map(|_| rng.random::<f64>().powf(-1.0 / 3.0)).collect();
        let fit = loglog_tail_fit(&dist(&v), 1.5, 10.0, 30).unwrap();
        assert!((fit.slope + 3.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn tail_fit_needs_exceedances() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert!(matches!(
            loglog_tail_fit(&dist(&v), 1.0, 950.0, 10),
            Err(Error::InsufficientTailData { exceedances: 50, required: 100 })
        ));
        assert!(loglog_tail_fit(&dist(&v), 1.0, 500.0, 5).is_err());
        let big = dist(&(1..=100_000).map(f64::from).collect::<Vec<_>>());
        assert_eq!(default_tail_window(&big).unwrap(), (95_000.0, 99_500.0));
        assert!(default_tail_window(&dist(&v)).is_err());
    }

    #[test]
    fn batch_means() {
        let ci = batch_mean_ci(&[3.0; 100], 10).unwrap();
        assert_eq!((ci.mean, ci.half_width_95), (3.0, 0.0));
        assert!(batch_mean_ci(&[1.0; 100], 4).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut covered = 0;
        for _ in 0..100 {
            let v: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
            let ci = batch_mean_ci(&v, 20).unwrap();
            if (ci.mean - 0.5).abs() <= ci.half_width_95 {
                covered += 1;
            }
        }
        assert!(covered >= 93, "{covered}");
    }
}

//! The experiments behind each subcommand.

use lambert_core::analytic::{
    brightness_constant, lambda_from_ladders, product_tail_constant, product_tail_constant_closed,
    rim_brightness_constant, second_moment, step_survival, step_tail_constant, step_tail_limit, tau_infty,
    Region,
};
use lambert_core::analytic::lambda::DEFAULT_BATCHES;
use lambert_core::chain::ExitRecord;
use lambert_core::estimators::{
    default_tail_window, empirical_survival, ks_critical_value, ks_statistic, loglog_tail_fit, EmpiricalDistribution,
};
use lambert_core::geometry::{Dimension, Frame};
use lambert_core::runner::Runner;
use lambert_core::sampling::{accumulate_visits, sample_axial_steps, simulate_exits, simulate_exits_until, simulate_ladders};
use lambert_core::streams::{domain, StreamKey};

use crate::config::{Command, ExperimentConfig};
use crate::table::{Columns, ResultTable};
use crate::CliError;

/// Number of points of the radius grid in `exit-cdf`.
const RADIUS_GRID: usize = 100;

/// Runs the command named in `config`.
pub fn run(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    config.validate()?;
    match config.command {
        Command::ExitCdf => cmd_exit_cdf(config),
        Command::Tail => cmd_tail(config),
        Command::Lambda => cmd_lambda(config),
        Command::Renewal => cmd_renewal(config),
        Command::DiscIdentity => cmd_disc_identity(config),
        Command::Constants => cmd_constants(config),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn runner(config: &ExperimentConfig) -> Result<Runner, CliError> {
    Ok(Runner::new(config.workers)?)
}

/// Quadrature tolerance actually used: nested integrals for `d >= 5` are
/// held to at most `1e-6`.
pub fn effective_tol(dim: Dimension, rel_tol: f64) -> f64 {
    if dim.get() >= 5 {
        rel_tol.max(1e-6)
    } else {
        rel_tol
    }
}

fn empirical(values: Vec<f64>) -> Result<Option<EmpiricalDistribution>, CliError> {
    if values.is_empty() {
        return Ok(None);
    }
    Ok(Some(EmpiricalDistribution::new(values)?))
}

fn cdf_column(dist: &Option<EmpiricalDistribution>, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&x| dist.as_ref().map_or(f64::NAN, |d| d.cdf(x))).collect()
}

/// Empirical CDFs of `|Y_s|`, unconditioned and conditioned on
/// `s - S_{N_s - 1} >= beta`, against the limit `r^{d-1}`.
pub fn cmd_exit_cdf(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let dim = config.dimension()?;
    let key = StreamKey::new(config.seed, domain::EXITS);
    let beta = config.beta;
    let sample = simulate_exits_until(
        dim,
        config.s,
        config.samples,
        config.samples,
        |r: &ExitRecord| r.undershoot >= beta,
        &key,
        &runner(config)?,
        config.max_steps,
        config.max_attempts,
    )?;
    let conditioned: Vec<&ExitRecord> = sample.records.iter().filter(|r| r.undershoot >= beta).collect();
    let radii_all: Vec<f64> = sample.records.iter().map(|r| norm(&r.exit_point)).collect();
    let radii_cond: Vec<f64> = conditioned.iter().map(|r| norm(&r.exit_point)).collect();
    let exponent = (dim.get() - 1) as i32;
    let reference = |r: f64| r.clamp(0.0, 1.0).powi(exponent);
    let all = empirical(radii_all.clone())?;
    let cond = empirical(radii_cond)?;

    let grid: Vec<f64> = (0..=RADIUS_GRID).map(|k| k as f64 / RADIUS_GRID as f64).collect();
    let mut t = ResultTable::new(config);
    t.columns
        .push("r", grid.clone())
        .push("cdf_all", cdf_column(&all, &grid))
        .push("cdf_conditioned", cdf_column(&cond, &grid))
        .push("reference", grid.iter().map(|&r| reference(r)).collect());

    let mut exits = Columns::new();
    let is_cond: Vec<f64> = sample.records.iter().map(|r| f64::from(u8::from(r.undershoot >= beta))).collect();
    exits.push("radius", radii_all);
    if dim.get() == 3 {
        exits
            .push("y1", sample.records.iter().map(|r| r.exit_point[0]).collect())
            .push("y2", sample.records.iter().map(|r| r.exit_point[1]).collect());
    }
    exits
        .push("undershoot", sample.records.iter().map(|r| r.undershoot).collect())
        .push("conditioned", is_cond);
    t.tables.insert("exits".into(), exits);

    let n_all = sample.records.len();
    let n_cond = conditioned.len();
    t.summary("n_total", n_all)
        .summary("n_conditioned", n_cond)
        .summary_f64("ks_all", all.as_ref().map_or(f64::NAN, |d| ks_statistic(d, reference)))
        .summary_f64("ks_conditioned", cond.as_ref().map_or(f64::NAN, |d| ks_statistic(d, reference)))
        .summary_f64("ks_critical_1pct_all", ks_critical_value(n_all.max(1), 0.01))
        .summary_f64("ks_critical_1pct_conditioned", ks_critical_value(n_cond.max(1), 0.01));
    t.diagnostic("attempted", sample.attempted)
        .diagnostic("excluded", sample.excluded)
        .diagnostic_f64("exclusion_rate", sample.exclusion_rate());
    Ok(t)
}

/// Quadrature and Monte Carlo survival of the axial step with the tail
/// scaling `x^d P(X > x)` and a log-log fit of the sample tail.
pub fn cmd_tail(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let dim = config.dimension()?;
    let tol = effective_tol(dim, config.rel_tol);
    let steps = sample_axial_steps(dim, config.samples, &StreamKey::new(config.seed, domain::STEPS), &runner(config)?);
    let dist = EmpiricalDistribution::new(steps)?;
    let n = dist.len() as f64;
    let d = dim.get() as i32;
    let c_d = step_tail_constant(dim).value;

    let mut quad = Vec::new();
    let mut mc = Vec::new();
    let mut se = Vec::new();
    for &x in &config.x_grid {
        quad.push(step_survival(dim, x, tol)?);
        let p = empirical_survival(&dist, x);
        mc.push(p);
        se.push((p * (1.0 - p) / n).sqrt());
    }
    let xs = &config.x_grid;
    let mut t = ResultTable::new(config);
    t.columns
        .push("x", xs.clone())
        .push("survival_quadrature", quad.clone())
        .push("survival_mc", mc.clone())
        .push("mc_std_err", se.clone())
        .push("z_score", mc.iter().zip(&quad).zip(&se).map(|((m, q), s)| (m - q) / s).collect())
        .push("scaled_quadrature", xs.iter().zip(&quad).map(|(x, q)| x.powi(d) * q).collect())
        .push("scaled_mc", xs.iter().zip(&mc).map(|(x, m)| x.powi(d) * m).collect())
        .push("tail_constant", vec![c_d; xs.len()])
        .push("tail_limit", vec![step_tail_limit(dim); xs.len()]);

    t.summary_f64("tail_constant", c_d).summary_f64("tail_limit", step_tail_limit(dim));
    match default_tail_window(&dist).and_then(|(lo, hi)| loglog_tail_fit(&dist, lo, hi, 20)) {
        Ok(fit) => {
            t.summary_f64("fit_slope", fit.slope)
                .summary_f64("fit_intercept", fit.intercept)
                .summary_f64("fit_slope_std_err", fit.stderr_slope)
                .summary_f64("fit_lo", fit.x_range.0)
                .summary_f64("fit_hi", fit.x_range.1);
        }
        Err(e) => {
            t.diagnostic("fit_error", e.to_string());
        }
    }
    t.diagnostic_f64("quadrature_rel_tol", tol).diagnostic("samples", config.samples);
    Ok(t)
}

/// `Λ̂` from ladder walks beside the empirical law of `U_s / (U_s + O_s)`,
/// unconditioned and conditioned on `S_{N_s - 1} <= s (1 - ε)`.
pub fn cmd_lambda(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let dim = config.dimension()?;
    let run = runner(config)?;
    let ladders = simulate_ladders(dim, config.ladders, &StreamKey::new(config.seed, domain::LADDERS), &run, config.max_steps)?;
    let lam = lambda_from_ladders(&ladders.records, &config.t_grid, DEFAULT_BATCHES)?;

    let depth = config.epsilon * config.s;
    let sample = simulate_exits_until(
        dim,
        config.s,
        config.samples,
        config.samples,
        |r: &ExitRecord| r.undershoot >= depth,
        &StreamKey::new(config.seed, domain::EXITS),
        &run,
        config.max_steps,
        config.max_attempts,
    )?;
    let ratios = empirical(sample.records.iter().map(ExitRecord::ratio).collect())?;
    let cond = empirical(sample.records.iter().filter(|r| r.undershoot >= depth).map(ExitRecord::ratio).collect())?;
    let d = dim.get() as i32;
    let tg = &config.t_grid;

    let mut t = ResultTable::new(config);
    t.columns
        .push("t", tg.clone())
        .push("lambda", lam.values.clone())
        .push("lambda_std_err", lam.std_errs.clone())
        .push("lower_bound", lam.lower_bound())
        .push("ratio_cdf", cdf_column(&ratios, tg))
        .push("conditioned_cdf", cdf_column(&cond, tg))
        .push("t_pow_d", tg.iter().map(|x| x.powi(d)).collect());
    let e_sum = lam.mean_o0 + lam.mean_u0;
    t.summary_f64("mean_o0", lam.mean_o0)
        .summary_f64("mean_u0", lam.mean_u0)
        .summary_f64("mean_positive_step", lam.mean_positive_step)
        .summary_f64("rim_brightness_constant", rim_brightness_constant(dim, lam.mean_o0, e_sum)?)
        .summary("ladders", lam.samples)
        .summary("exits", sample.records.len())
        .summary("conditioned_exits", cond.as_ref().map_or(0, EmpiricalDistribution::len));
    t.diagnostic("ladders_excluded", ladders.excluded)
        .diagnostic_f64("ladder_exclusion_rate", ladders.excluded as f64 / config.ladders as f64)
        .diagnostic("exits_excluded", sample.excluded)
        .diagnostic_f64("exit_exclusion_rate", sample.exclusion_rate());
    Ok(t)
}

/// Per-bin renewal measure `s^{-2} 𝕄̂_s` against its limit.
pub fn cmd_renewal(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let dim = config.dimension()?;
    let tol = effective_tol(dim, config.rel_tol);
    let e_x2 = second_moment(dim, tol)?;
    let hist = accumulate_visits(
        dim,
        config.s,
        &config.bins,
        config.samples,
        &StreamKey::new(config.seed, domain::VISITS),
        &runner(config)?,
        config.max_steps,
    )?;
    let s2 = config.s * config.s;
    let means = hist.mean();
    let ses = hist.std_err();
    let edges = &config.bins;
    let (mut a1, mut a2, mut scaled, mut scaled_se, mut limit, mut rel_dev, mut alt) =
        (vec![], vec![], vec![], vec![], vec![], vec![], vec![]);
    for j in 0..hist.bins() {
        // Bin [e_j s, e_{j+1} s) is the interval (-a2 s, -a1 s).
        let (lo, hi) = (-edges[j + 1], -edges[j]);
        let theory = renewal_limit(lo, hi, e_x2.value);
        let m = means[j] / s2;
        a1.push(lo);
        a2.push(hi);
        scaled.push(m);
        scaled_se.push(ses[j] / s2);
        limit.push(theory);
        rel_dev.push(m / theory - 1.0);
        alt.push(m / (2.0 * theory) - 1.0);
    }
    let total: f64 = scaled.iter().sum();
    let total_se = ses.iter().map(|e| e * e).sum::<f64>().sqrt() / s2;
    let lo_all = -edges[edges.len() - 1];
    let hi_all = -edges[0];
    let theory_all = renewal_limit(lo_all, hi_all, e_x2.value);

    let mut t = ResultTable::new(config);
    t.columns
        .push("a1", a1)
        .push("a2", a2)
        .push("scaled_visits", scaled)
        .push("scaled_visits_std_err", scaled_se)
        .push("limit", limit)
        .push("rel_deviation", rel_dev)
        .push("rel_deviation_doubled_limit", alt);
    t.summary_f64("second_moment", e_x2.value)
        .summary_f64("scaled_visits_total", total)
        .summary_f64("scaled_visits_total_std_err", total_se)
        .summary_f64("limit_total", theory_all)
        .summary_f64("rel_deviation_total", total / theory_all - 1.0)
        .summary_f64("brightness_constant", brightness_constant(dim, config.r1, config.r2, e_x2.value)?);
    t.diagnostic("trajectories", hist.trajectories)
        .diagnostic("excluded", hist.excluded)
        .diagnostic_f64("exclusion_rate", hist.exclusion_rate())
        .diagnostic_f64("second_moment_cutoff", e_x2.cutoff)
        .diagnostic_f64("quadrature_rel_tol", tol);
    Ok(t)
}

/// `(a2² - a1²) / (2 E[X²])`, the stated limit of `s^{-2} 𝕄_s(-a2 s, -a1 s)`.
pub fn renewal_limit(a1: f64, a2: f64, e_x2: f64) -> f64 {
    (a2 * a2 - a1 * a1) / (2.0 * e_x2)
}

/// Checks `{U_s/(U_s+O_s) <= t} = {Y_s ∈ D_t}` trajectory by trajectory.
pub fn cmd_disc_identity(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let dim = config.dimension()?;
    let sample = simulate_exits(
        dim,
        config.s,
        config.samples,
        &StreamKey::new(config.seed, domain::EXITS),
        &runner(config)?,
        config.max_steps,
        Frame::Householder,
    )?;
    let n = sample.records.len() as f64;
    let mut disagreements = Vec::new();
    let mut ties = Vec::new();
    let mut frac_ratio = Vec::new();
    let mut frac_disc = Vec::new();
    for &tv in &config.t_grid {
        let (mut bad, mut tie, mut by_ratio, mut by_disc) = (0u64, 0u64, 0u64, 0u64);
        for r in &sample.records {
            let q = r.ratio();
            let a = q <= tv;
            let b = r.in_offset_disc(tv);
            by_ratio += u64::from(a);
            by_disc += u64::from(b);
            if a != b {
                if (q - tv).abs() <= 1e-9 {
                    tie += 1;
                } else {
                    bad += 1;
                }
            }
        }
        disagreements.push(bad as f64);
        ties.push(tie as f64);
        frac_ratio.push(by_ratio as f64 / n);
        frac_disc.push(by_disc as f64 / n);
    }
    let total: f64 = disagreements.iter().sum();
    let max = disagreements.iter().cloned().fold(0.0, f64::max);
    let mut t = ResultTable::new(config);
    t.columns
        .push("t", config.t_grid.clone())
        .push("disagreements", disagreements)
        .push("boundary_ties", ties)
        .push("fraction_ratio_le_t", frac_ratio)
        .push("fraction_in_disc", frac_disc);
    t.summary("trajectories", sample.records.len())
        .summary_f64("total_disagreements", total)
        .summary_f64("max_disagreements", max);
    t.diagnostic("excluded", sample.excluded).diagnostic_f64("exclusion_rate", sample.exclusion_rate());
    Ok(t)
}

/// Tail constants, second moments, `τ∞` ball values and the brightness constant.
pub fn cmd_constants(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let dim = config.dimension()?;
    let mut t = ResultTable::new(config);

    let ns: Vec<usize> = (1..=20).collect();
    let mut rec = Vec::new();
    let mut closed = Vec::new();
    for &n in &ns {
        rec.push(product_tail_constant(n)?.value);
        closed.push(product_tail_constant_closed(n)?.value);
    }
    t.columns
        .push("n", ns.iter().map(|&n| n as f64).collect())
        .push("c_n_recursion", rec)
        .push("c_n_closed_form", closed);

    let mut step = Columns::new();
    let ds: Vec<usize> = (3..=10).collect();
    let dims: Vec<Dimension> = ds.iter().map(|&d| Dimension::new(d)).collect::<Result<_, _>>()?;
    step.push("d", ds.iter().map(|&d| d as f64).collect())
        .push("tail_constant", dims.iter().map(|&d| step_tail_constant(d).value).collect())
        .push("tail_limit", dims.iter().map(|&d| step_tail_limit(d)).collect());
    t.tables.insert("step_tail".into(), step);

    let mut moments = Columns::new();
    let mut m = Vec::new();
    for d in 3..=5 {
        let dd = Dimension::new(d)?;
        m.push(second_moment(dd, effective_tol(dd, config.rel_tol))?.value);
    }
    moments.push("d", vec![3.0, 4.0, 5.0]).push("second_moment", m);
    t.tables.insert("second_moment".into(), moments);

    let mut balls = Columns::new();
    let radii = [0.25, 0.5, 0.75, 1.0];
    let (mut col_d, mut col_r, mut centered, mut offset) = (vec![], vec![], vec![], vec![]);
    for d in 3..=6 {
        let dd = Dimension::new(d)?;
        for &r in &radii {
            col_d.push(d as f64);
            col_r.push(r);
            centered.push(tau_infty(dd, &Region::centered_ball(dd, r))?);
            offset.push(tau_infty(dd, &Region::offset_ball(dd, r))?);
        }
    }
    balls.push("d", col_d).push("r", col_r).push("centered", centered).push("offset", offset);
    t.tables.insert("tau_balls".into(), balls);

    let e_x2 = second_moment(dim, effective_tol(dim, config.rel_tol))?.value;
    t.summary_f64("second_moment", e_x2)
        .summary_f64("brightness_constant", brightness_constant(dim, config.r1, config.r2, e_x2)?);
    Ok(t)
}

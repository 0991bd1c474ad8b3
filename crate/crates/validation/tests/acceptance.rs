//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line and
//! then asserts its verdict.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use lambert_cli::{run, Cli};
use clap::Parser;
use lambert_core::analytic::lambda::DEFAULT_BATCHES;
use lambert_core::analytic::{
    brightness_constant, lambda_from_ladders, product_survival, product_tail_constant, product_tail_constant_closed,
    second_moment, step_survival, step_tail_constant, tau_infty, tau_infty_mc, Region,
};
use lambert_core::chain::ExitRecord;
use lambert_core::estimators::{empirical_survival, ks_critical_value, ks_statistic, EmpiricalDistribution};
use lambert_core::runner::Runner;
use lambert_core::sampling::{accumulate_visits, sample_axial_steps, simulate_exits_until, simulate_ladders, ExitSample};
use lambert_core::streams::{domain, StreamKey};
use lambert_core::Dimension;
use lambert_validation::report;

const SEED: u64 = 20_240_501;
/// Step budget for the level-50 exits; see the exclusion rate in each report.
const EXIT_BUDGET: u64 = 1_000_000;

fn d(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn runner() -> Runner {
    Runner::new(std::thread::available_parallelism().map_or(1, |n| n.get())).unwrap()
}

fn radius(r: &ExitRecord) -> f64 {
    r.exit_point.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exits at `d = 3, s = 50` until 10⁴ have `s - S_{N_s - 1} >= 3`. The
/// depth 3 is both the β of the radius law and `ε s` with `ε = 0.06`.
fn level_50_exits() -> &'static (ExitSample, f64) {
    static CELL: OnceLock<(ExitSample, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let sample = simulate_exits_until(
            d(3),
            50.0,
            10_000,
            10_000,
            |r| r.undershoot >= 3.0,
            &StreamKey::new(SEED, domain::EXITS),
            &runner(),
            EXIT_BUDGET,
            10_000_000,
        )
        .unwrap();
        (sample, start.elapsed().as_secs_f64())
    })
}

fn conditioned(sample: &ExitSample) -> Vec<&ExitRecord> {
    sample.records.iter().filter(|r| r.undershoot >= 3.0).collect()
}

#[test]
fn c01_exit_radius_law() {
    let (sample, secs) = level_50_exits();
    let cond = conditioned(sample);
    let dist = EmpiricalDistribution::new(cond.iter().map(|r| radius(r)).collect()).unwrap();
    let ks = ks_statistic(&dist, |r| r.clamp(0.0, 1.0).powi(2));
    let crit = ks_critical_value(dist.len(), 0.01);
    report(
        1,
        "conditioned |Y_s| against r^2 (d=3, s=50, beta=3)",
        dist.len() >= 10_000 && ks < 0.0163,
        &format!(
            "n={} KS={ks:.5} threshold=0.0163 (asymptotic 1% value {crit:.5}); exits={} excluded={} rate={:.2e}; {secs:.0}s",
            dist.len(),
            sample.records.len(),
            sample.excluded,
            sample.exclusion_rate()
        ),
    );
}

#[test]
fn c02_step_tail_constant() {
    let mut ok = true;
    let mut parts = Vec::new();
    for dd in 3..=5 {
        let dim = d(dd);
        let tol = if dd >= 5 { 1e-6 } else { 1e-8 };
        let c = step_tail_constant(dim).value;
        let scaled = 50f64.powi(dd as i32) * step_survival(dim, 50.0, tol).unwrap();
        let ratio = scaled / c;
        ok &= (ratio - 1.0).abs() < 0.05;
        parts.push(format!("d={dd}: x^d P/C_d={ratio:.4}"));

        let n = 10_000_000u64;
        let steps = sample_axial_steps(dim, n, &StreamKey::new(SEED + dd as u64, domain::STEPS), &runner());
        let dist = EmpiricalDistribution::new(steps).unwrap();
        let mut zs = Vec::new();
        for x in [2.0, 5.0, 10.0] {
            let q = step_survival(dim, x, tol).unwrap();
            let p = empirical_survival(&dist, x);
            let z = (p - q) / (q * (1.0 - q) / n as f64).sqrt();
            ok &= z.abs() < 4.0;
            zs.push(format!("{z:+.2}"));
        }
        parts.push(format!("MC z at x=2,5,10 [{}]", zs.join(" ")));
    }
    report(2, "x^d P(X>x) -> C_d and MC vs quadrature", ok, &parts.join("; "));
}

#[test]
fn c03_product_tail_constants() {
    let mut worst: f64 = 0.0;
    for n in 1..=20 {
        let a = product_tail_constant(n).unwrap().value;
        let b = product_tail_constant_closed(n).unwrap().value;
        worst = worst.max((a - b).abs());
    }
    let g = product_survival(2, 0.999, 1e-10).unwrap();
    let rel = g / 0.001 / (2.0 / PI) - 1.0;
    report(
        3,
        "product-tail recursion vs closed form",
        worst <= 1e-14 && rel.abs() < 0.03,
        &format!("max |recursion - closed| = {worst:.2e}; G_2(0.999)/0.001 vs 2/pi rel dev {rel:+.4}"),
    );
}

#[test]
fn c04_conditional_ratio_law() {
    let (sample, _) = level_50_exits();
    let cond = conditioned(sample);
    let dist = EmpiricalDistribution::new(cond.iter().map(|r| r.ratio()).collect()).unwrap();
    let mut ok = dist.len() >= 10_000;
    let mut parts = Vec::new();
    for t in [0.25f64, 0.5, 0.75] {
        let f = dist.cdf(t);
        ok &= (f - t.powi(3)).abs() < 0.03;
        parts.push(format!("t={t}: {f:.4} vs {:.4}", t.powi(3)));
    }
    report(
        4,
        "ratio CDF given S_{N_s-1} <= s(1-eps) against t^3",
        ok,
        &format!("n={}; {}", dist.len(), parts.join(", ")),
    );
}

#[test]
fn c05_lambda_functional() {
    let start = Instant::now();
    let ladders =
        simulate_ladders(d(3), 1_000_000, &StreamKey::new(SEED, domain::LADDERS), &runner(), EXIT_BUDGET).unwrap();
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let lam = lambda_from_ladders(&ladders.records, &grid, DEFAULT_BATCHES).unwrap();
    let (v, e) = (&lam.values, &lam.std_errs);
    let mut ok = v[0] == 0.0 && v[20] == 1.0;
    for i in 0..grid.len() {
        ok &= v[i] <= grid[i] + 3.0 * e[i];
        if i > 0 {
            ok &= v[i] >= v[i - 1] - 3.0 * (e[i] + e[i - 1]);
        }
    }
    let (sample, _) = level_50_exits();
    let ratios = EmpiricalDistribution::new(sample.records.iter().map(ExitRecord::ratio).collect()).unwrap();
    let gap = grid.iter().zip(v).map(|(&t, l)| (ratios.cdf(t) - l).abs()).fold(0.0, f64::max);
    ok &= gap < 0.02;
    report(
        5,
        "Lambda from ladders",
        ok,
        &format!(
            "ladders={} excluded={} ({:.1e}); Lambda(0.5)={:.4}+-{:.4}; max |ratio CDF(s=50, n={}) - Lambda| = {gap:.4}; {:.0}s",
            lam.samples,
            ladders.excluded,
            ladders.excluded as f64 / 1e6,
            v[10],
            e[10],
            ratios.len(),
            start.elapsed().as_secs_f64()
        ),
    );
}

/// Scaled visit counts at `d = 3, s = 200` with the quadrature `E[X²]`.
fn renewal() -> &'static (Vec<f64>, Vec<f64>, Vec<f64>, f64, String) {
    static CELL: OnceLock<(Vec<f64>, Vec<f64>, Vec<f64>, f64, String)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let s = 200.0;
        let edges = [-0.5, -0.4, -0.3, -0.2];
        let e_x2 = second_moment(d(3), 1e-8).unwrap().value;
        let hist = accumulate_visits(d(3), s, &edges, 4_000, &StreamKey::new(SEED, domain::VISITS), &runner(), 100_000_000)
            .unwrap();
        let scaled: Vec<f64> = hist.mean().iter().map(|m| m / (s * s)).collect();
        let se: Vec<f64> = hist.std_err().iter().map(|m| m / (s * s)).collect();
        let theory: Vec<f64> =
            (0..3).map(|j| (edges[j].powi(2) - edges[j + 1].powi(2)) / (2.0 * e_x2)).collect();
        let info = format!(
            "walks={} excluded={} ({:.1e}); {:.0}s",
            hist.trajectories,
            hist.excluded,
            hist.exclusion_rate(),
            start.elapsed().as_secs_f64()
        );
        (scaled, se, theory, e_x2, info)
    })
}

fn renewal_verdict() -> (bool, String) {
    let (scaled, se, theory, e_x2, info) = renewal();
    let mut ok = true;
    let mut parts = Vec::new();
    for j in 0..3 {
        let dev = scaled[j] / theory[j] - 1.0;
        ok &= dev.abs() < 0.10;
        parts.push(format!("bin{j}: {:.5}+-{:.5} vs {:.5} ({dev:+.3})", scaled[j], se[j], theory[j]));
    }
    (ok, format!("E[X^2]={e_x2:.8}; {}; {info}", parts.join(", ")))
}

#[test]
fn c06_renewal_measure() {
    let (ok, detail) = renewal_verdict();
    report(6, "s^-2 M_s per bin within 10% of (a2^2-a1^2)/(2E[X^2])", ok, &detail);
}

#[test]
fn c07_tau_ball_laws() {
    let mut rng = StreamKey::new(SEED, domain::TAU).stream(0);
    let mut ok = true;
    let mut worst_exact: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for dd in 3..=6 {
        let dim = d(dd);
        for r in [0.2, 0.5, 0.8, 1.0] {
            let pairs = [
                (Region::centered_ball(dim, r), r.powi(dd as i32 - 1)),
                (Region::offset_ball(dim, r), r.powi(dd as i32)),
            ];
            for (region, expected) in pairs {
                let exact = tau_infty(dim, &region).unwrap();
                worst_exact = worst_exact.max((exact - expected).abs());
                let mc = tau_infty_mc(dim, &region, 200_000, &mut rng).unwrap();
                ok &= (mc.value - exact).abs() <= mc.three_sigma();
                worst_z = worst_z.max((mc.value - exact).abs() / mc.std_err.max(f64::MIN_POSITIVE));
            }
        }
    }
    ok &= worst_exact < 1e-12;
    report(
        7,
        "tau_infinity of centred and rim balls",
        ok,
        &format!("max |exact - r^k| = {worst_exact:.1e}; max MC |z| = {worst_z:.2} (d=3..6)"),
    );
}

#[test]
fn c08_exit_identity() {
    let start = Instant::now();
    let sample = simulate_exits_until(
        d(3),
        10.0,
        100_000,
        0,
        |_| true,
        &StreamKey::new(SEED + 8, domain::EXITS),
        &runner(),
        EXIT_BUDGET,
        10_000_000,
    )
    .unwrap();
    let (mut bad, mut ties) = (0u64, 0u64);
    for r in &sample.records {
        let q = r.ratio();
        for k in 1..100 {
            let t = k as f64 / 100.0;
            if (q <= t) != r.in_offset_disc(t) {
                if (q - t).abs() <= 1e-9 {
                    ties += 1;
                } else {
                    bad += 1;
                }
            }
        }
    }
    report(
        8,
        "{U/(U+O) <= t} = {Y_s in D_t} per trajectory",
        bad == 0 && sample.records.len() >= 100_000,
        &format!(
            "trajectories={} x 99 t-values: disagreements={bad}, rounding ties={ties}; excluded={} ({:.1e}); {:.0}s",
            sample.records.len(),
            sample.excluded,
            sample.exclusion_rate(),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn c09_brightness_constant() {
    let e_x2 = second_moment(d(3), 1e-10).unwrap().value;
    let (r1, r2) = (0.25, 0.75);
    let b = brightness_constant(d(3), r1, r2, e_x2).unwrap();
    // d = 3: (r2 - r1) / (4 E[X²]) with E[X²] = π/2.
    let closed = (r2 - r1) / (2.0 * PI);
    let part_a = (b - closed).abs() < 1e-9 && (e_x2 - PI / 2.0).abs() < 1e-8;
    let mut dims = Vec::new();
    for dd in 4..=5 {
        let m = second_moment(d(dd), 1e-6).unwrap().value;
        dims.push(format!("d={dd}: {:.6}", brightness_constant(d(dd), r1, r2, m).unwrap()));
    }
    let (part_b, detail_b) = renewal_verdict();
    report(
        9,
        "brightness constant and its renewal ingredient",
        part_a && part_b,
        &format!(
            "(a) {} d=3 constant {b:.10} vs (r2-r1)/(2 pi) {closed:.10}, {}; (b) criterion 6 {} [{detail_b}]",
            if part_a { "ok" } else { "mismatch" },
            dims.join(", "),
            if part_b { "passes" } else { "fails" },
        ),
    );
}

#[test]
fn c10_reproducible_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["exit-cdf", "--seed", "101", "--samples", "300", "--max-steps", "1000000"],
        &["lambda", "--seed", "102", "--ladders", "20000", "--samples", "100", "--max-steps", "1000000"],
        &["renewal", "--seed", "103", "--samples", "100"],
    ];
    let mut ok = true;
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outs = Vec::new();
        for w in ["1", "4"] {
            let path = dir.path().join(format!("run{i}-w{w}.csv"));
            let mut full = vec!["lambert"];
            full.extend_from_slice(args);
            full.extend_from_slice(&["--workers", w, "--out", path.to_str().unwrap()]);
            let written = run(&Cli::try_parse_from(&full).unwrap(), &mut std::io::sink()).unwrap();
            outs.push(written.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
        }
        files += outs[0].len();
        ok &= outs[0] == outs[1];
    }
    report(
        10,
        "byte-identical outputs for 1 and 4 workers",
        ok,
        &format!("{} runs, {files} files compared", runs.len()),
    );
}

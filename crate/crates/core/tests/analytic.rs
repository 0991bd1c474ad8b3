use lambert_core::analytic::{
    lambda_from_ladders, product_survival, tau_infty, tau_infty_mc, tau_infty_rotated, Region,
};
use lambert_core::estimators::{
    empirical_survival, ks_statistic, loglog_tail_fit, EmpiricalDistribution,
};
use lambert_core::analytic::tau::unit_disc_volume;
use lambert_core::geometry::{sample_sphere, CrossSectionPoint};
use lambert_core::runner::Runner;
use lambert_core::sampling::simulate_ladders;
use lambert_core::streams::{domain, StreamKey};
use lambert_core::Dimension;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn sphere_average_of_rotated_law_is_normalised_volume() {
    let n = 100_000;
    let mut rng = StreamKey::new(31, domain::TEST).stream(0);
    for d in 3..=5 {
        let dim = Dimension::new(d).unwrap();
        let mut center = vec![0.0; dim.cross_len()];
        center[0] = 0.3;
        center[dim.cross_len() - 1] = -0.2;
        let region = Region::Ball { center, radius: 0.4 };
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let y = CrossSectionPoint::new(&sample_sphere(dim.cross_len(), &mut rng)).unwrap();
                tau_infty_rotated(dim, &region, &y).unwrap()
            })
            .collect();
        let m = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let expected = region.volume() / unit_disc_volume(dim);
        assert!((m - expected).abs() < 4.0 * sd / (n as f64).sqrt(), "d={d}: {m} vs {expected}");
    }
}

#[test]
fn ball_laws_match_monte_carlo() {
    let mut rng = StreamKey::new(32, domain::TEST).stream(0);
    for d in [3, 4, 6] {
        let dim = Dimension::new(d).unwrap();
        for r in [0.3, 0.7] {
            let centered = Region::centered_ball(dim, r);
            let offset = Region::offset_ball(dim, r);
            assert!((tau_infty(dim, &centered).unwrap() - r.powi(d as i32 - 1)).abs() < 1e-12);
            assert!((tau_infty(dim, &offset).unwrap() - r.powi(d as i32)).abs() < 1e-12);
            for region in [centered, offset] {
                let exact = tau_infty(dim, &region).unwrap();
                let mc = tau_infty_mc(dim, &region, 200_000, &mut rng).unwrap();
                assert!((mc.value - exact).abs() <= mc.three_sigma(), "d={d} r={r}: {mc:?} vs {exact}");
            }
        }
    }
}

#[test]
fn lambda_is_monotone_convex_and_above_its_bound() {
    let dim = Dimension::new(3).unwrap();
    let ladders = simulate_ladders(dim, 100_000, &StreamKey::new(33, domain::LADDERS), &Runner::new(1).unwrap(), 1_000_000)
        .unwrap();
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let lam = lambda_from_ladders(&ladders.records, &grid, 32).unwrap();
    let (v, e) = (&lam.values, &lam.std_errs);
    assert_eq!((v[0], v[20]), (0.0, 1.0));
    let lb = lam.lower_bound();
    for i in 0..grid.len() {
        assert!(v[i] <= grid[i] + 3.0 * e[i]);
        assert!(v[i] >= lb[i] - 3.0 * e[i]);
        if i > 0 {
            assert!(v[i] >= v[i - 1] - 3.0 * (e[i] + e[i - 1]));
        }
        if i > 0 && i < 20 {
            let second = v[i + 1] - 2.0 * v[i] + v[i - 1];
            assert!(second >= -3.0 * (e[i + 1] + 2.0 * e[i] + e[i - 1]), "t={}: {second}", grid[i]);
        }
    }
}

#[test]
fn product_tail_near_one() {
    // P(cosΦ1 cosΦ2 > 1 - δ) ~ (2/π) δ as δ -> 0.
    let g = product_survival(2, 0.999, 1e-10).unwrap();
    assert!((g / 0.001 / (2.0 / PI) - 1.0).abs() < 0.03, "{g}");
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..100.0, 1..200)
}

proptest! {
    #[test]
    fn survival_is_nonincreasing_and_right_continuous(v in samples(), a in 0.0f64..120.0, b in 0.0f64..120.0) {
        let dist = EmpiricalDistribution::new(v.clone()).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(empirical_survival(&dist, lo) >= empirical_survival(&dist, hi));
        for &x in &v {
            prop_assert_eq!(empirical_survival(&dist, x), empirical_survival(&dist, x + 1e-12 * x));
        }
    }

    #[test]
    fn ks_is_invariant_under_increasing_maps(v in prop::collection::vec(-3.0f64..3.0, 1..300)) {
        let cdf = |x: f64| 1.0 / (1.0 + (-x).exp());
        let d1 = ks_statistic(&EmpiricalDistribution::new(v.clone()).unwrap(), cdf);
        let w: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        let d2 = ks_statistic(&EmpiricalDistribution::new(w).unwrap(), |y: f64| if y <= 0.0 { 0.0 } else { cdf(y.ln()) });
        prop_assert!((d1 - d2).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tail_fit_is_scale_equivariant(seed in any::<u64>(), scale in 0.1f64..50.0) {
        use rand::Rng;
        let mut rng = StreamKey::new(seed, domain::TEST).stream(0);
        let v: Vec<f64> = (0..5_000).map(|_| rng.random::<f64>().max(1e-12).powf(-0.5)).collect();
        let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let a = loglog_tail_fit(&EmpiricalDistribution::new(v).unwrap(), 1.5, 5.0, 20).unwrap();
        let b = loglog_tail_fit(&EmpiricalDistribution::new(w).unwrap(), 1.5 * scale, 5.0 * scale, 20).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-12);
        prop_assert!((b.intercept - (a.intercept - a.slope * scale.ln())).abs() < 1e-9);
    }
}

mod common;

use common::*;
use emotrait::stats::{ols_fit, pearson, student_t_sf, vif, Stars};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn t_tail_matches_textbook_points() {
    // two-sided critical values from standard t tables
    for (t, df, p) in [(12.706, 1, 0.05), (2.228, 10, 0.05), (2.042, 30, 0.05), (2.750, 30, 0.01), (3.646, 30, 0.001)] {
        let got = student_t_sf(t, df).unwrap();
        assert!((got - p).abs() < 2e-3 * p, "t={t} df={df}: {got}");
    }
    assert_eq!(student_t_sf(0.0, 5).unwrap(), 1.0);
}

#[test]
fn gamma_half_oracle_is_sane() {
    assert!((gamma_half(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
    assert_eq!(gamma_half(2), 1.0);
    assert_eq!(gamma_half(10), 24.0);
    assert!((gamma_half(5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
}

#[test]
fn perfect_line_gives_unit_correlation() {
    let x: Vec<f64> = (0..20).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
    let c = pearson(&x, &y).unwrap();
    assert!((c.r + 1.0).abs() < 1e-12);
    assert!(c.p < 1e-12);
}

#[test]
fn constant_column_is_rejected() {
    assert!(pearson(&[1.0, 1.0, 1.0, 1.0], &[1.0, 2.0, 3.0, 4.0]).is_err());
}

#[test]
fn star_thresholds() {
    assert_eq!(Stars::correlation(0.049), Stars::One);
    assert_eq!(Stars::correlation(0.0099), Stars::Two);
    assert_eq!(Stars::correlation(0.05), Stars::None);
    assert_eq!(Stars::regression(0.00099), Stars::Three);
    assert_eq!(Stars::regression(0.0099), Stars::Two);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pearson_matches_raw_sums(seed in any::<u64>(), n in 5usize..60, rho in -0.95f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normal_vec(&mut rng, n);
        let e = normal_vec(&mut rng, n);
        let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| rho * a + b).collect();
        let c = pearson(&x, &y).unwrap();
        let r = pearson_oracle(&x, &y);
        prop_assert!((c.r - r).abs() <= 1e-10);
        prop_assert!((-1.0..=1.0).contains(&c.r));
        let swapped = pearson(&y, &x).unwrap();
        prop_assert!((swapped.r - c.r).abs() <= 1e-14);
        let t = r * ((n as f64 - 2.0) / (1.0 - r * r)).sqrt();
        prop_assert!((c.p - t_two_sided_oracle(t, n as u32 - 2)).abs() <= 1e-9);
    }

    #[test]
    fn ols_matches_normal_equations(seed in any::<u64>(), p in 1usize..5, extra in 3usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p + 2 + extra;
        let cols: Vec<Vec<f64>> = (0..p).map(|_| normal_vec(&mut rng, n)).collect();
        let e = normal_vec(&mut rng, n);
        let y: Vec<f64> = (0..n).map(|i| 1.0 + cols.iter().map(|c| 0.7 * c[i]).sum::<f64>() + e[i]).collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let fit = ols_fit(&refs, &y).unwrap();
        let o = ols_normal_equations(&refs, &y).unwrap();
        for j in 0..=p {
            prop_assert!(close(fit.coefficients[j], o.coefficients[j], 1e-9));
            prop_assert!(close(fit.std_errors[j], o.std_errors[j], 1e-9));
        }
        prop_assert!((fit.r2 - o.r2).abs() <= 1e-10);
        prop_assert!((fit.adj_r2 - o.adj_r2).abs() <= 1e-10);
        prop_assert!(fit.adj_r2 <= fit.r2 + 1e-15);
    }

    #[test]
    fn vif_matches_auxiliary_regressions(seed in any::<u64>(), p in 2usize..6, extra in 3usize..30, mix in 0.0f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p + 2 + extra;
        let base = normal_vec(&mut rng, n);
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|_| normal_vec(&mut rng, n).iter().zip(&base).map(|(a, b)| a + mix * b).collect())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let got = vif(&refs).unwrap();
        for (a, b) in got.iter().zip(vif_brute(&refs)) {
            prop_assert!(*a >= 1.0 - 1e-12);
            prop_assert!(close(*a, b, 1e-9));
        }
    }

    #[test]
    fn t_tail_matches_integration(t in -10.0f64..10.0, df in 1u32..100) {
        let got = student_t_sf(t, df).unwrap();
        prop_assert!((got - t_two_sided_oracle(t, df)).abs() <= 1e-10);
        prop_assert!((got - student_t_sf(-t, df).unwrap()).abs() <= 1e-15);
    }
}

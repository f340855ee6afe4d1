mod common;

use emotrait::gbt::{self, leaf_weight, split_gain, softmax, BoostParams, Ensemble};
use emotrait::matrix::RowMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(n: usize, nf: usize, k: usize, seed: u64) -> (RowMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = RowMatrix::new(nf);
    let mut y = Vec::new();
    for i in 0..n {
        let mut r = common::normal_vec(&mut rng, nf);
        if rng.random_bool(0.05) {
            r[0] = f64::NAN;
        }
        x.push_row(&r);
        y.push(if i < k { i } else { rng.random_range(0..k) });
    }
    (x, y)
}

#[test]
fn gain_and_weight_formulas() {
    // G_L = -2, H_L = 1, G_R = 3, H_R = 2, lambda = 1, gamma = 0
    let g = split_gain(-2.0, 1.0, 3.0, 2.0, 1.0, 0.0);
    let expected = 0.5 * (4.0 / 2.0 + 9.0 / 3.0 - 1.0 / 4.0);
    assert!((g - expected).abs() < 1e-15);
    assert_eq!(leaf_weight(-2.0, 1.0, 1.0), 1.0);
}

#[test]
fn softmax_is_a_distribution() {
    let p = softmax(&[1000.0, 1000.0, -1000.0]);
    assert!((p[0] - 0.5).abs() < 1e-12 && p[2] < 1e-300);
}

#[test]
fn model_json_round_trips() {
    let (x, y) = data(80, 4, 3, 1);
    let e = gbt::train(
        &x,
        &y,
        &BoostParams {
            rounds: 12,
            n_classes: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let back = Ensemble::from_json(&e.to_json()).unwrap();
    for i in 0..x.n_rows() {
        assert_eq!(e.predict_margin(x.row(i)).unwrap(), back.predict_margin(x.row(i)).unwrap());
    }
    assert_eq!(back.to_json(), e.to_json());
}

#[test]
fn training_is_deterministic() {
    let (x, y) = data(100, 5, 3, 2);
    let p = BoostParams {
        rounds: 10,
        n_classes: 3,
        learning_rate: 0.3,
        max_depth: 4,
        ..Default::default()
    };
    assert_eq!(gbt::train(&x, &y, &p).unwrap().to_json(), gbt::train(&x, &y, &p).unwrap().to_json());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loss_never_increases(seed in any::<u64>(), n in 20usize..120, nf in 1usize..6, k in 2usize..5) {
        let (x, y) = data(n, nf, k, seed);
        let params = BoostParams { rounds: 25, n_classes: k, ..Default::default() };
        let (e, trace) = gbt::train_traced(&x, &y, &params).unwrap();
        prop_assert_eq!(trace.loss.len(), 26);
        for w in trace.loss.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for s in &trace.max_grad_sum {
            prop_assert!(s.abs() <= 1e-12);
        }
        for tree in &e.trees {
            prop_assert!(tree.depth() <= params.max_depth);
        }
        for i in 0..n {
            let p = e.predict_proba(x.row(i)).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

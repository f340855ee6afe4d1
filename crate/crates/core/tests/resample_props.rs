mod common;

use emotrait::matrix::RowMatrix;
use emotrait::resample::{adasyn_allocation, balance, interpolate, smote, ResamplePlan, ResampleStrategy};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dataset(sizes: &[usize], dims: usize, seed: u64) -> (RowMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = RowMatrix::new(dims);
    let mut labels = Vec::new();
    for (c, &m) in sizes.iter().enumerate() {
        for _ in 0..m {
            let row: Vec<f64> = common::normal_vec(&mut rng, dims).iter().map(|v| v + c as f64).collect();
            x.push_row(&row);
            labels.push(c);
        }
    }
    (x, labels)
}

#[test]
fn interpolation_endpoints() {
    let a = [1.0, -2.0, 4.0];
    let b = [3.0, 0.0, 4.0];
    assert_eq!(interpolate(&a, &b, 0.0), a.to_vec());
    assert_eq!(interpolate(&a, &b, 1.0), b.to_vec());
    assert_eq!(interpolate(&a, &b, 0.5), vec![2.0, -1.0, 4.0]);
}

#[test]
fn smote_needs_two_rows() {
    let mut x = RowMatrix::new(2);
    x.push_row(&[0.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(smote(&x, 3, 1, &mut rng).is_err());
}

#[test]
fn adasyn_favours_hard_minority_points() {
    // minority point 0 sits inside the majority cloud, point 3 far away
    let mut x = RowMatrix::new(1);
    for v in [0.0, 0.1, -0.1, 0.2, -0.2, 0.05, 10.0, 10.5, 11.0] {
        x.push_row(&[v]);
    }
    let labels = [1, 0, 0, 0, 0, 0, 1, 1, 1];
    let alloc = adasyn_allocation(&x, &labels, 1, 3).unwrap();
    assert_eq!(alloc.target, 1);
    assert_eq!(alloc.minority_rows, vec![0, 6, 7, 8]);
    assert!(alloc.weights[0] > alloc.weights[1]);
}

#[test]
fn balancing_is_seeded() {
    let (x, y) = dataset(&[30, 7, 12], 3, 5);
    let plan = ResamplePlan {
        strategy: ResampleStrategy::Smote,
        k_neighbors: 5,
    };
    let a = balance(&x, &y, &plan, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = balance(&x, &y, &plan, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a.features, b.features);
    assert_eq!(a.labels, b.labels);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthetic_rows_lie_on_parent_segments(
        sizes in prop::collection::vec(2usize..30, 2..4),
        dims in 1usize..6,
        seed in any::<u64>(),
        adasyn in any::<bool>(),
    ) {
        let (x, y) = dataset(&sizes, dims, seed);
        let plan = ResamplePlan {
            strategy: if adasyn { ResampleStrategy::Adasyn } else { ResampleStrategy::Smote },
            k_neighbors: 5,
        };
        let b = balance(&x, &y, &plan, &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
        let n = x.n_rows();
        let counts = b.class_counts(sizes.len());
        prop_assert!(counts.iter().all(|c| *c == counts[0]));
        prop_assert_eq!(counts[0], *sizes.iter().max().unwrap());
        for i in 0..n {
            prop_assert_eq!(b.features.row(i), x.row(i));
            prop_assert_eq!(b.labels[i], y[i]);
            prop_assert!(!b.synthetic[i] && b.parents[i].is_none());
        }
        for i in n..b.features.n_rows() {
            let (p, q) = b.parents[i].expect("synthetic row has parents");
            prop_assert!(b.synthetic[i]);
            prop_assert_eq!(y[p], b.labels[i]);
            prop_assert_eq!(y[q], b.labels[i]);
            for d in 0..dims {
                let (lo, hi) = (x.row(p)[d].min(x.row(q)[d]), x.row(p)[d].max(x.row(q)[d]));
                let v = b.features.row(i)[d];
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}

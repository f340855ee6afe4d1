//! SMOTE and ADASYN on a small imbalanced problem.
//!
//!     cargo run --example resampling

use emotrait::matrix::RowMatrix;
use emotrait::resample::{adasyn_allocation, balance, ResamplePlan, ResampleStrategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> emotrait::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut x = RowMatrix::new(2);
    let mut labels = Vec::new();
    for (class, n, cx) in [(0, 40, 0.0), (1, 12, 1.5), (2, 6, 3.0)] {
        for _ in 0..n {
            x.push_row(&[cx + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            labels.push(class);
        }
    }

    for strategy in [ResampleStrategy::Smote, ResampleStrategy::Adasyn] {
        let plan = ResamplePlan { strategy, k_neighbors: 5 };
        let b = balance(&x, &labels, &plan, &mut rng)?;
        println!("{strategy:?}: counts {:?} -> {:?}, {} synthetic", [40, 12, 6], b.class_counts(3), b.n_synthetic());
        for i in (x.n_rows()..b.features.n_rows()).take(3) {
            let (p, q) = b.parents[i].expect("synthetic");
            let r = b.features.row(i);
            println!("  [{:.3}, {:.3}] between rows {p} and {q}", r[0], r[1]);
        }
    }

    let alloc = adasyn_allocation(&x, &labels, 2, 5)?;
    println!("ADASYN draws per class-2 point: {:?}", alloc.counts);
    Ok(())
}

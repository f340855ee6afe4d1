//! Trains a softmax boosted-tree classifier and prints its loss trace.
//!
//!     cargo run --example boosting

use emotrait::gbt::{self, BoostParams, Ensemble};
use emotrait::matrix::RowMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> emotrait::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = RowMatrix::new(4);
    let mut y = Vec::new();
    for _ in 0..300 {
        let r: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = r[0] + 0.5 * r[1] * r[2];
        y.push(if s < -0.3 { 0 } else if s < 0.3 { 1 } else { 2 });
        x.push_row(&r);
    }
    let params = BoostParams {
        rounds: 60,
        max_depth: 3,
        ..Default::default()
    };
    let (model, trace) = gbt::train_traced(&x, &y, &params)?;
    for (round, loss) in trace.loss.iter().enumerate().step_by(10) {
        println!("round {round:>3}  log loss {loss:.4}");
    }
    let hits = model.predict_rows(&x)?.iter().zip(&y).filter(|(a, b)| a == b).count();
    println!("training accuracy {:.3}", hits as f64 / y.len() as f64);

    let json = model.to_json();
    let back = Ensemble::from_json(&json)?;
    println!(
        "model JSON {} bytes, {} trees; reload predicts {:?}",
        json.len(),
        back.trees.len(),
        back.predict_proba(&[0.8, 0.0, 0.0, 0.0])?
    );
    Ok(())
}

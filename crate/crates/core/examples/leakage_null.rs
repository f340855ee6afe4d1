//! On a cohort with no planted signal, compares leak-free evaluation with
//! oversampling before the split.
//!
//!     cargo run --release --example leakage_null

use emotrait::cohort::TraitKind;
use emotrait::eval::{evaluate, experiment_rows, BinningMethod, EvalConfig, EvalMode};
use emotrait::features::{build_feature_matrix, FeatureOptions};
use emotrait::gbt::BoostParams;
use emotrait::synth::{plant_cohort, PlantSpec};

fn main() -> emotrait::Result<()> {
    println!("{:<6}{:<26}{:>11}{:>11}{:>10}", "seed", "trait", "leak-free", "paper", "leaked");
    for seed in 0..6u64 {
        let synth = plant_cohort(&PlantSpec {
            n_participants: 300,
            hz: 1.0,
            ..PlantSpec::desk(100 + seed)
        })?;
        let m = build_feature_matrix(&synth.cohort()?, &FeatureOptions::default());
        let t = TraitKind::ALL[(seed * 5) as usize % TraitKind::COUNT];
        let (x, y) = experiment_rows(&m, &synth.traits, t);
        let base = EvalConfig {
            binning: BinningMethod::EqualWidth,
            boost: BoostParams {
                rounds: 30,
                ..Default::default()
            },
            seed,
            ..Default::default()
        };
        let lf = evaluate(&x, &y, t, &base)?;
        let pr = evaluate(
            &x,
            &y,
            t,
            &EvalConfig {
                mode: EvalMode::PaperReplication,
                ..base
            },
        )?;
        println!(
            "{seed:<6}{:<26}{:>11.3}{:>11.3}{:>10}",
            t.display_name(),
            lf.cv.kappa,
            pr.cv.kappa,
            pr.synthetic_in_validation
        );
    }
    println!("columns: pooled CV kappa; leaked = synthetic rows scored during validation");
    Ok(())
}

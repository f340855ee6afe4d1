//! Tercile classification of one trait with stratified CV and a holdout.
//!
//!     cargo run --release --example evaluate_trait

use emotrait::cohort::TraitKind;
use emotrait::eval::{run_experiment, EvalConfig};
use emotrait::features::{build_feature_matrix, FeatureOptions};
use emotrait::gbt::BoostParams;
use emotrait::synth::{one_link_per_trait, plant_cohort, PlantSpec};

fn main() -> emotrait::Result<()> {
    let synth = plant_cohort(&PlantSpec {
        hz: 2.0,
        n_participants: 300,
        links: one_link_per_trait(0.012, 0.002),
        ..PlantSpec::desk(6)
    })?;
    let m = build_feature_matrix(&synth.cohort()?, &FeatureOptions::default());
    let config = EvalConfig {
        boost: BoostParams {
            rounds: 60,
            ..Default::default()
        },
        ..Default::default()
    };
    let r = run_experiment(&m, &synth.traits, TraitKind::HarmCare, &config)?;
    println!("{} ({:?}, {:?}, {:?})", r.trait_kind.long_name(), r.mode, r.binning, r.strategy);
    println!("training class counts {:?}", r.class_counts);
    for (i, f) in r.folds.iter().enumerate() {
        println!("  fold {:>2}: accuracy {:.3}", i + 1, f.accuracy);
    }
    println!("average accuracy {:.1}%", 100.0 * r.average_accuracy);
    println!("pooled CV  accuracy {:.3} kappa {:.3}", r.cv.accuracy, r.cv.kappa);
    println!(
        "holdout    accuracy {:.3} kappa {:.3} (n {}, majority baseline {:.3})",
        r.holdout.accuracy, r.holdout.kappa, r.holdout_size, r.holdout.majority_baseline
    );
    Ok(())
}

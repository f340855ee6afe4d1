//! Builds the participant x (emotion, video) matrix and shows a corner of it.
//!
//!     cargo run --example feature_matrix

use emotrait::features::{build_feature_matrix, describe, Aggregation, FeatureKey, FeatureOptions};
use emotrait::cohort::{EmotionKind, VideoId};
use emotrait::synth::{plant_cohort, PlantSpec};

fn main() -> emotrait::Result<()> {
    let synth = plant_cohort(&PlantSpec {
        n_participants: 40,
        hz: 4.0,
        ..PlantSpec::desk(2)
    })?;
    let cohort = synth.cohort()?;
    let m = build_feature_matrix(&cohort, &FeatureOptions::default());
    println!("{} participants x {} features", m.n_rows(), m.n_cols());

    let keys: Vec<FeatureKey> = FeatureKey::all().filter(|k| k.index() % 15 < 3).take(6).collect();
    print!("{:<8}", "id");
    for k in &keys {
        print!("{:>12}", k.name());
    }
    println!();
    for i in 0..5 {
        print!("{:<8}", m.participants()[i]);
        for k in &keys {
            print!("{:>12.4}", m.get(i, *k).unwrap_or(f64::NAN));
        }
        println!();
    }

    let happy = FeatureKey::new(EmotionKind::Happy, VideoId::new(14)?);
    let d = describe(&m.column(happy))?;
    println!("{}: M {:.3} SD {:.3} range [{:.3}, {:.3}]", happy.name(), d.mean, d.sd, d.min, d.max);

    let maxed = build_feature_matrix(
        &cohort,
        &FeatureOptions {
            aggregation: Aggregation::Max,
            ..Default::default()
        },
    );
    println!("{} with per-emotion max: {:.3}", happy.name(), maxed.get(0, happy).unwrap_or(f64::NAN));
    Ok(())
}

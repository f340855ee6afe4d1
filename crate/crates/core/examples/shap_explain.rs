//! Exact TreeSHAP attributions and the mean-|SHAP| feature ranking.
//!
//!     cargo run --release --example shap_explain

use emotrait::cohort::TraitKind;
use emotrait::eval::{experiment_rows, train_final, EvalConfig};
use emotrait::features::{build_feature_matrix, FeatureOptions};
use emotrait::gbt::BoostParams;
use emotrait::shap::{explain, rank_importance};
use emotrait::synth::{one_link_per_trait, plant_cohort, PlantSpec};

fn main() -> emotrait::Result<()> {
    let synth = plant_cohort(&PlantSpec {
        hz: 2.0,
        n_participants: 300,
        links: one_link_per_trait(0.012, 0.001),
        ..PlantSpec::desk(8)
    })?;
    let m = build_feature_matrix(&synth.cohort()?, &FeatureOptions::default());
    let t = TraitKind::Conservation;
    let planted = synth.truth.links.iter().find(|l| l.link.trait_kind == t).expect("planted");
    let (x, y) = experiment_rows(&m, &synth.traits, t);
    let config = EvalConfig {
        boost: BoostParams {
            rounds: 60,
            ..Default::default()
        },
        ..Default::default()
    };
    let (model, _) = train_final(&x, &y, t, &config)?;

    let a = explain(&model, x.row(0))?;
    let margins = model.predict_margin(x.row(0))?;
    for c in 0..3 {
        println!("class {c}: base {:+.3} + attributions = {:+.3} (model {:+.3})", a.base[c], a.margin(c), margins[c]);
    }

    let ranking = rank_importance(&model, &x)?;
    println!("planted feature: {}", planted.link.feature.name());
    for e in ranking.top(5) {
        let dir = e.direction.map_or("n/a".to_string(), |d| format!("{d:+.2}"));
        println!("  {:<14} mean|SHAP| {:.4}  direction {dir}", e.name, e.mean_abs);
    }
    Ok(())
}

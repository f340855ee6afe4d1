//! Plants one strong link per trait, runs regression, classification and
//! SHAP, and checks how many links come back.
//!
//!     cargo run --release --example planted_recovery

use std::time::Instant;

use emotrait::cohort::TraitKind;
use emotrait::eval::{evaluate_with_model, experiment_rows, EvalConfig};
use emotrait::features::{build_feature_matrix, FeatureOptions};
use emotrait::gbt::BoostParams;
use emotrait::shap::rank_importance;
use emotrait::stats::{correlation_table, forward_select, trait_column, SelectionConfig};
use emotrait::synth::{one_link_per_trait, plant_cohort, verify_recovery, PlantSpec, RecoveryInputs, RecoveryThresholds};
use emotrait::util::fingerprint_ids;

fn main() -> emotrait::Result<()> {
    let start = Instant::now();
    let spec = PlantSpec {
        hz: 8.0,
        links: one_link_per_trait(0.012, 0.0005),
        ..PlantSpec::desk(7)
    };
    let synth = plant_cohort(&spec)?;
    let cohort = synth.cohort()?;
    let features = build_feature_matrix(&cohort, &FeatureOptions::default());
    println!("cohort {} x {} in {:.1?}", features.n_rows(), features.n_cols(), start.elapsed());

    let config = EvalConfig {
        boost: BoostParams {
            rounds: 100,
            ..Default::default()
        },
        seed: 7,
        ..Default::default()
    };
    let mut models = Vec::new();
    let mut reports = Vec::new();
    let mut rankings = Vec::new();
    for t in TraitKind::ALL {
        let y = trait_column(&features, &synth.traits, t);
        models.push(forward_select(&features, &y, t, &SelectionConfig::default())?);
        let (x, y) = experiment_rows(&features, &synth.traits, t);
        let (report, model) = evaluate_with_model(&x, &y, t, &config)?;
        rankings.push((t, rank_importance(&model, &x)?));
        println!(
            "{:<28} holdout acc {:.3} kappa {:.3}  cv kappa {:.3}",
            t.long_name(),
            report.holdout.accuracy,
            report.holdout.kappa,
            report.cv.kappa
        );
        reports.push(report);
    }
    let corr = correlation_table(&features, &synth.traits);
    let fp = fingerprint_ids(features.participants().iter().map(String::as_str));
    let score = verify_recovery(
        &synth.truth,
        &RecoveryInputs {
            cohort_fingerprint: &fp,
            reports: &reports,
            models: &models,
            correlations: Some(&corr),
            rankings: &rankings,
        },
        &RecoveryThresholds::default(),
    )?;
    let strong = reports
        .iter()
        .filter(|r| r.holdout.accuracy >= 0.8 && r.holdout.kappa >= 0.6)
        .count();
    println!("traits with holdout acc >= 0.80 and kappa >= 0.6: {strong}/22");
    println!(
        "selection recall {:?}, SHAP top-5 recall {:?}, correlation error {:?}",
        score.selection_recall, score.shap_top5_recall, score.correlation_error
    );
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}

//! Pearson correlations and a forward-selected OLS model for one trait.
//!
//!     cargo run --release --example correlation_regression

use emotrait::cohort::TraitKind;
use emotrait::features::{build_feature_matrix, FeatureKey, FeatureOptions};
use emotrait::report::{format_coefficient, format_correlation};
use emotrait::stats::{correlation_table, forward_select, trait_column, SelectionConfig};
use emotrait::synth::{one_link_per_trait, plant_cohort, PlantSpec};

fn main() -> emotrait::Result<()> {
    let synth = plant_cohort(&PlantSpec {
        hz: 2.0,
        links: one_link_per_trait(0.012, 0.002),
        ..PlantSpec::paper_scale(3)
    })?;
    let m = build_feature_matrix(&synth.cohort()?, &FeatureOptions::default());
    let t = TraitKind::Extraversion;
    let link = synth.truth.links.iter().find(|l| l.link.trait_kind == t).expect("one link per trait");
    println!("planted: {} -> {}", link.link.feature.name(), t.display_name());

    let corr = correlation_table(&m, &synth.traits);
    let mut cells: Vec<(FeatureKey, String, f64)> = FeatureKey::all()
        .filter_map(|k| corr.get(k, t).map(|c| (k, format_correlation(c), c.r.abs())))
        .collect();
    cells.sort_by(|a, b| b.2.total_cmp(&a.2));
    println!("strongest correlations with {}:", t.display_name());
    for (k, s, _) in cells.iter().take(5) {
        println!("  {:<14}{s}", k.name());
    }

    let y = trait_column(&m, &synth.traits, t);
    let model = forward_select(&m, &y, t, &SelectionConfig::default())?;
    println!("forward selection, N = {}:", model.n);
    for (term, vif) in model.terms.iter().zip(&model.vifs) {
        println!("  {:<14}{:<12} VIF {vif:.2}", term.name(), format_coefficient(term.coefficient, term.stars));
    }
    println!("  {:<14}{}", "Constant", format_coefficient(model.intercept.coefficient, model.intercept.stars));
    println!("  adjusted R² {:.3}", model.adj_r2);
    Ok(())
}

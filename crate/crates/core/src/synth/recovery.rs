use serde::{Deserialize, Serialize};

use super::{GroundTruth, PlantedLink};
use crate::cohort::TraitKind;
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::shap::ImportanceRanking;
use crate::stats::{CorrelationTable, RegressionModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryThresholds {
    pub selection_recall: f64,
    pub shap_top5_recall: f64,
    /// Largest acceptable mean |r − ρ| over planted links.
    pub correlation_error: f64,
}

impl Default for RecoveryThresholds {
    fn default() -> Self {
        RecoveryThresholds {
            selection_recall: 0.9,
            shap_top5_recall: 0.9,
            correlation_error: 0.1,
        }
    }
}

/// Pipeline outputs to score against the ground truth.
pub struct RecoveryInputs<'a> {
    /// Fingerprint of the participant ids the pipeline ran on.
    pub cohort_fingerprint: &'a str,
    pub reports: &'a [EvalReport],
    pub models: &'a [RegressionModel],
    pub correlations: Option<&'a CorrelationTable>,
    pub rankings: &'a [(TraitKind, ImportanceRanking)],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkRecovery {
    #[serde(flatten)]
    pub link: PlantedLink,
    pub implied_rho: f64,
    pub selected: Option<bool>,
    /// 1-based SHAP rank of the planted feature.
    pub shap_rank: Option<usize>,
    pub observed_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScore {
    pub n_links: usize,
    /// Fraction of links whose feature the trait's regression selected.
    pub selection_recall: Option<f64>,
    /// Fraction of links whose feature is in the trait's SHAP top 5.
    pub shap_top5_recall: Option<f64>,
    /// Mean |r − ρ| over links, or mean |r| over all cells without links.
    pub correlation_error: Option<f64>,
    pub mean_holdout_kappa: Option<f64>,
    pub links: Vec<LinkRecovery>,
    pub thresholds: RecoveryThresholds,
    pub passed: bool,
}

fn fraction(hits: impl Iterator<Item = Option<bool>>) -> Option<f64> {
    let v: Vec<bool> = hits.flatten().collect();
    (!v.is_empty()).then(|| v.iter().filter(|b| **b).count() as f64 / v.len() as f64)
}

/// Scores how well pipeline outputs recover the planted links.
pub fn verify_recovery(
    truth: &GroundTruth,
    inputs: &RecoveryInputs<'_>,
    thresholds: &RecoveryThresholds,
) -> Result<RecoveryScore> {
    if truth.cohort_fingerprint != inputs.cohort_fingerprint {
        return Err(Error::CohortMismatch {
            expected: truth.cohort_fingerprint.clone(),
            got: inputs.cohort_fingerprint.to_string(),
        });
    }
    let links: Vec<LinkRecovery> = truth
        .links
        .iter()
        .map(|lt| {
            let l = lt.link;
            let selected = inputs
                .models
                .iter()
                .find(|m| m.dependent == l.trait_kind)
                .map(|m| m.features().any(|f| f == l.feature));
            let shap_rank = inputs
                .rankings
                .iter()
                .find(|(t, _)| *t == l.trait_kind)
                .and_then(|(_, r)| r.entries.iter().position(|e| e.feature == l.feature.index()))
                .map(|p| p + 1);
            let observed_r = inputs
                .correlations
                .and_then(|c| c.get(l.feature, l.trait_kind))
                .map(|c| c.r);
            LinkRecovery {
                link: l,
                implied_rho: lt.implied_rho,
                selected,
                shap_rank,
                observed_r,
            }
        })
        .collect();

    let selection_recall = fraction(links.iter().map(|l| l.selected));
    let shap_top5_recall = fraction(links.iter().map(|l| {
        inputs
            .rankings
            .iter()
            .any(|(t, _)| *t == l.link.trait_kind)
            .then(|| l.shap_rank.is_some_and(|r| r <= 5))
    }));
    let correlation_error = if links.is_empty() {
        inputs.correlations.and_then(|c| {
            let rs: Vec<f64> = c.cells.iter().flatten().map(|c| c.r.abs()).collect();
            (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64)
        })
    } else {
        let errs: Vec<f64> = links
            .iter()
            .filter_map(|l| l.observed_r.map(|r| (r - l.implied_rho).abs()))
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    };
    let mean_holdout_kappa = (!inputs.reports.is_empty())
        .then(|| inputs.reports.iter().map(|r| r.holdout.kappa).sum::<f64>() / inputs.reports.len() as f64);

    let passed = selection_recall.is_none_or(|v| v >= thresholds.selection_recall)
        && shap_top5_recall.is_none_or(|v| v >= thresholds.shap_top5_recall)
        && correlation_error.is_none_or(|v| v <= thresholds.correlation_error);
    Ok(RecoveryScore {
        n_links: links.len(),
        selection_recall,
        shap_top5_recall,
        correlation_error,
        mean_holdout_kappa,
        links,
        thresholds: *thresholds,
        passed,
    })
}

//! Table-shaped CSV exports, alluvial link data and run manifests.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cohort::{TraitFamily, TraitKind, VideoId};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::features::{DescriptiveStats, FeatureKey, FEATURE_COUNT};
use crate::shap::ImportanceRanking;
use crate::stats::{CorrelationCell, CorrelationTable, RegressionModel, RegressionTerm, Stars};

pub const SCHEMA_VERSION: &str = "1.0";

/// Rejects artifacts whose major schema version differs from ours.
pub fn check_schema(version: &str) -> Result<()> {
    let major = version.split('.').next().unwrap_or("");
    if major == SCHEMA_VERSION.split('.').next().unwrap_or("") {
        Ok(())
    } else {
        Err(Error::SchemaVersion(version.to_string()))
    }
}

/// JSON wrapper that stamps an artifact with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub data: T,
}

impl<T> Envelope<T> {
    pub fn new(config_hash: &str, seed: u64, data: T) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            data,
        }
    }
}

impl<T: Serialize> Envelope<T> {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

impl<T: serde::de::DeserializeOwned> Envelope<T> {
    pub fn from_json(s: &str) -> Result<Self> {
        let e: Envelope<T> = serde_json::from_str(s)?;
        check_schema(&e.schema_version)?;
        Ok(e)
    }
}

/// `0.233*`: three decimals with two-level stars appended.
pub fn format_correlation(cell: &CorrelationCell) -> String {
    format!("{:.3}{}", cell.r, cell.stars.as_str())
}

/// `0.226 **`: three decimals, a space, then three-level stars.
pub fn format_coefficient(value: f64, stars: Stars) -> String {
    match stars {
        Stars::None => format!("{value:.3}"),
        s => format!("{value:.3} {}", s.as_str()),
    }
}

fn format_term(t: &RegressionTerm) -> String {
    format_coefficient(t.coefficient, t.stars)
}

/// Feature rows by trait columns; blank where the correlation is undefined.
pub fn write_correlation_csv<W: Write>(sink: W, table: &CorrelationTable) -> Result<()> {
    let (rows, _) = table.dims();
    if rows != FEATURE_COUNT {
        return Err(Error::WidthMismatch {
            expected: FEATURE_COUNT,
            got: rows,
        });
    }
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["Variable"];
    header.extend(TraitKind::ALL.iter().map(|t| t.display_name()));
    w.write_record(&header)?;
    for f in FeatureKey::all() {
        let mut rec = vec![f.name()];
        rec.extend(
            TraitKind::ALL
                .iter()
                .map(|t| table.get(f, *t).map(format_correlation).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One column per model: selected predictors in canonical order, then
/// Constant, adjusted R² and N.
pub fn write_regression_csv<W: Write>(sink: W, models: &[RegressionModel]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["Predictor/Dependent"];
    header.extend(models.iter().map(|m| m.dependent.display_name()));
    w.write_record(&header)?;
    let mut used: Vec<FeatureKey> = models.iter().flat_map(|m| m.features()).collect();
    used.sort();
    used.dedup();
    for f in used {
        let mut rec = vec![f.name()];
        rec.extend(models.iter().map(|m| {
            m.terms
                .iter()
                .find(|t| t.feature == Some(f))
                .map(format_term)
                .unwrap_or_default()
        }));
        w.write_record(&rec)?;
    }
    let mut rec = vec!["Constant".to_string()];
    rec.extend(models.iter().map(|m| format_term(&m.intercept)));
    w.write_record(&rec)?;
    let mut rec = vec!["Adjusted R²".to_string()];
    rec.extend(models.iter().map(|m| format!("{:.3}", m.adj_r2)));
    w.write_record(&rec)?;
    let mut rec = vec!["N".to_string()];
    rec.extend(models.iter().map(|m| m.n.to_string()));
    w.write_record(&rec)?;
    w.flush()?;
    Ok(())
}

/// Models of one instrument, in canonical trait order.
pub fn family_models(models: &[RegressionModel], family: TraitFamily) -> Vec<RegressionModel> {
    family
        .traits()
        .filter_map(|t| models.iter().find(|m| m.dependent == t).cloned())
        .collect()
}

pub fn write_descriptives_csv<W: Write>(sink: W, rows: &[(TraitKind, DescriptiveStats)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["Variable", "N", "M", "SD", "Min", "Max"])?;
    for (t, d) in rows {
        w.write_record([
            t.display_name().to_string(),
            d.n.to_string(),
            format!("{:.2}", d.mean),
            format!("{:.2}", d.sd),
            format!("{:.2}", d.min),
            format!("{:.2}", d.max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const ACCURACY_HEADER: [&str; 3] = ["Variable", "Average Accuracy", "Cohen's Kappa"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccuracySplit {
    /// Mean fold accuracy with the pooled out-of-fold kappa.
    CrossValidation,
    Holdout,
}

/// Accuracy as a percentage with one decimal, kappa with two.
pub fn write_accuracy_csv<W: Write>(sink: W, reports: &[EvalReport], split: AccuracySplit) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(ACCURACY_HEADER)?;
    for r in reports {
        let (acc, kappa) = match split {
            AccuracySplit::CrossValidation => (r.average_accuracy, r.cv.kappa),
            AccuracySplit::Holdout => (r.holdout.accuracy, r.holdout.kappa),
        };
        w.write_record([
            r.trait_kind.long_name().to_string(),
            format!("{:.1}%", acc * 100.0),
            format!("{kappa:.2}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlluvialStage {
    VideoEmotion,
    EmotionTrait,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlluvialBasis {
    /// Significant terms of the selected regression models.
    Regression,
    /// Top-k features of the SHAP ranking.
    Shap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlluvialLink {
    pub stage: AlluvialStage,
    pub basis: AlluvialBasis,
    pub source: String,
    pub target: String,
    /// Number of terms or features behind the link.
    pub count: usize,
    /// Summed |coefficient| (regression) or summed mean |SHAP| (SHAP).
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlluvialLinkTable {
    pub links: Vec<AlluvialLink>,
}

pub fn video_node(v: VideoId) -> String {
    format!("video-{}", v.get())
}

pub fn trait_node(t: TraitKind) -> String {
    t.display_name().to_lowercase()
}

type LinkKey = (AlluvialStage, AlluvialBasis, String, String);

fn add_feature(acc: &mut BTreeMap<LinkKey, (usize, f64)>, basis: AlluvialBasis, f: FeatureKey, t: TraitKind, w: f64) {
    let emotion = f.emotion.key().to_string();
    for key in [
        (AlluvialStage::VideoEmotion, basis, video_node(f.video), emotion.clone()),
        (AlluvialStage::EmotionTrait, basis, emotion, trait_node(t)),
    ] {
        let e = acc.entry(key).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += w.abs();
    }
}

/// Builds video→emotion and emotion→trait links from regression terms
/// with p < `alpha` and from each trait's SHAP top `top_k`.
pub fn alluvial_links(
    models: &[RegressionModel],
    rankings: &[(TraitKind, ImportanceRanking)],
    top_k: usize,
    alpha: f64,
) -> AlluvialLinkTable {
    let mut acc: BTreeMap<LinkKey, (usize, f64)> = BTreeMap::new();
    for m in models {
        for term in &m.terms {
            if let Some(f) = term.feature.filter(|_| term.p < alpha) {
                add_feature(&mut acc, AlluvialBasis::Regression, f, m.dependent, term.coefficient);
            }
        }
    }
    for (t, ranking) in rankings {
        for e in ranking.top(top_k).iter().filter(|e| e.mean_abs > 0.0) {
            if let Some(f) = FeatureKey::from_index(e.feature) {
                add_feature(&mut acc, AlluvialBasis::Shap, f, *t, e.mean_abs);
            }
        }
    }
    AlluvialLinkTable {
        links: acc
            .into_iter()
            .map(|((stage, basis, source, target), (count, weight))| AlluvialLink {
                stage,
                basis,
                source,
                target,
                count,
                weight,
            })
            .collect(),
    }
}

pub fn write_alluvial_csv<W: Write>(sink: W, table: &AlluvialLinkTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["stage", "basis", "source", "target", "count", "weight"])?;
    for l in &table.links {
        let stage = match l.stage {
            AlluvialStage::VideoEmotion => "video-emotion",
            AlluvialStage::EmotionTrait => "emotion-trait",
        };
        let basis = match l.basis {
            AlluvialBasis::Regression => "regression",
            AlluvialBasis::Shap => "shap",
        };
        w.write_record([
            stage.to_string(),
            basis.to_string(),
            l.source.clone(),
            l.target.clone(),
            l.count.to_string(),
            l.weight.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Top-k SHAP bars for one trait.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapBars {
    #[serde(rename = "trait")]
    pub trait_kind: TraitKind,
    pub ranking: ImportanceRanking,
}

/// Everything a run wrote, with content hashes relative to the output dir.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub stages: Vec<String>,
    /// Input file name → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Artifact path → SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

/// Machine-readable failure written next to the artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub schema_version: String,
    pub stage: Option<String>,
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorReport {
    pub fn new(stage: Option<&str>, err: &Error) -> Self {
        ErrorReport {
            schema_version: SCHEMA_VERSION.to_string(),
            stage: stage.map(str::to_string),
            kind: err.kind().to_string(),
            message: err.to_string(),
            exit_code: err.exit_code(),
        }
    }
}

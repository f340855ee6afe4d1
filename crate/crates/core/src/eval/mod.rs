//! Trait classification experiments: three-class binning, stratified
//! cross-validation with in-fold oversampling, and a held-out test split.

mod binning;
mod metrics;
mod split;

pub use binning::{
    bin_equal_width, bin_scores, bin_terciles, equal_width_edges, quantile, BinEdges, BinFallback, BinningMethod,
    Binning, CLASS_NAMES, HIGH, LOW, MEDIUM,
};
pub use metrics::{cohen_kappa, ConfusionMatrix, Kappa};
pub use split::{stratified_holdout, stratified_kfold, FoldPlan};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{TraitKind, TraitTable};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gbt::{self, BoostParams, Ensemble};
use crate::matrix::RowMatrix;
use crate::resample::{balance, ResamplePlan, ResampleStrategy};
use crate::util::derive_seed;

const N_CLASSES: usize = 3;

// stream tags for derive_seed
const HOLDOUT: u64 = 1;
const FOLDS: u64 = 2;
const RESAMPLE: u64 = 3;
const PRE_RESAMPLE: u64 = 4;
const REFIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Bin and oversample inside each training split only.
    #[default]
    LeakFree,
    /// Bin on all rows and oversample before splitting.
    PaperReplication,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub folds: usize,
    pub holdout_fraction: f64,
    pub mode: EvalMode,
    pub binning: BinningMethod,
    pub resample: ResamplePlan,
    pub boost: BoostParams,
    /// Pick learning rate and depth from a small grid by CV kappa.
    pub tune: bool,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 10,
            holdout_fraction: 0.1,
            mode: EvalMode::LeakFree,
            binning: BinningMethod::Tercile,
            resample: ResamplePlan::default(),
            boost: BoostParams::default(),
            tune: false,
            seed: 0,
        }
    }
}

pub const GRID_LEARNING_RATES: [f64; 3] = [0.05, 0.1, 0.3];
pub const GRID_DEPTHS: [usize; 3] = [2, 3, 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_synthetic: usize,
    pub n_validation: usize,
    pub accuracy: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub n: usize,
    pub accuracy: f64,
    pub kappa: f64,
    pub kappa_degenerate: bool,
    /// Accuracy of always predicting the training majority class.
    pub majority_baseline: f64,
    pub confusion: ConfusionMatrix,
}

impl SplitMetrics {
    fn new(cm: ConfusionMatrix, majority_baseline: f64) -> Result<Self> {
        let k = cohen_kappa(&cm)?;
        Ok(SplitMetrics {
            n: cm.total() as usize,
            accuracy: cm.accuracy(),
            kappa: k.value,
            kappa_degenerate: k.degenerate,
            majority_baseline,
            confusion: cm,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "trait")]
    pub trait_kind: TraitKind,
    pub mode: EvalMode,
    pub binning: BinningMethod,
    pub n_rows: usize,
    /// Edges used for the training labels.
    pub edges: BinEdges,
    pub binning_fallback: BinFallback,
    /// Training-split class counts before oversampling.
    pub class_counts: Vec<usize>,
    pub strategy: ResampleStrategy,
    pub params: BoostParams,
    pub folds: Vec<FoldMetrics>,
    /// Mean of per-fold validation accuracy.
    pub average_accuracy: f64,
    /// Metrics over the pooled out-of-fold predictions.
    pub cv: SplitMetrics,
    pub holdout: SplitMetrics,
    pub holdout_size: usize,
    /// Synthetic rows that ended up in a validation fold or the holdout.
    pub synthetic_in_validation: usize,
    /// Synthetic rows added for the final refit.
    pub n_synthetic_refit: usize,
}

struct CvOutcome {
    folds: Vec<FoldMetrics>,
    pooled: ConfusionMatrix,
    baseline_correct: usize,
    synthetic_in_validation: usize,
}

impl CvOutcome {
    fn kappa(&self) -> f64 {
        cohen_kappa(&self.pooled).map(|k| k.value).unwrap_or(0.0)
    }
}

fn majority(labels: &[usize]) -> usize {
    let mut c = [0usize; N_CLASSES];
    for l in labels {
        c[*l] += 1;
    }
    gbt::argmax(&c.map(|v| v as f64))
}

fn class_counts(labels: &[usize]) -> Vec<usize> {
    let mut c = vec![0; N_CLASSES];
    for l in labels {
        c[*l] += 1;
    }
    c
}

/// Oversamples (when a plan is given) and trains one ensemble.
fn fit(
    x: &RowMatrix,
    labels: &[usize],
    resample: Option<&ResamplePlan>,
    params: &BoostParams,
    seed: u64,
) -> Result<(Ensemble, usize)> {
    match resample {
        Some(plan) if plan.strategy != ResampleStrategy::None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = balance(x, labels, plan, &mut rng)?;
            let e = gbt::train(&b.features, &b.labels, params)?;
            Ok((e, b.n_synthetic()))
        }
        _ => Ok((gbt::train(x, labels, params)?, 0)),
    }
}

fn cross_validate(
    x: &RowMatrix,
    labels: &[usize],
    synthetic: &[bool],
    plan: &FoldPlan,
    resample: Option<&ResamplePlan>,
    params: &BoostParams,
    seed: u64,
) -> Result<CvOutcome> {
    let per_fold: Vec<Result<(FoldMetrics, ConfusionMatrix, usize, usize)>> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train = plan.training(f);
            let valid = &plan.folds[f];
            let xt = x.select(&train);
            let yt: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let (model, n_syn) = fit(&xt, &yt, resample, params, derive_seed(seed, &[RESAMPLE, f as u64]))?;
            let yv: Vec<usize> = valid.iter().map(|&i| labels[i]).collect();
            let pred = model.predict_rows(&x.select(valid))?;
            let cm = ConfusionMatrix::from_pairs(&yv, &pred, N_CLASSES);
            let kappa = cohen_kappa(&cm)?.value;
            let m = majority(&yt);
            let base = yv.iter().filter(|l| **l == m).count();
            let leaked = valid.iter().filter(|&&i| synthetic[i]).count();
            Ok((
                FoldMetrics {
                    fold: f,
                    n_train: train.len(),
                    n_synthetic: n_syn,
                    n_validation: valid.len(),
                    accuracy: cm.accuracy(),
                    kappa,
                },
                cm,
                base,
                leaked,
            ))
        })
        .collect();
    let mut out = CvOutcome {
        folds: Vec::with_capacity(plan.k),
        pooled: ConfusionMatrix::new(N_CLASSES),
        baseline_correct: 0,
        synthetic_in_validation: 0,
    };
    for r in per_fold {
        let (m, cm, base, leaked) = r?;
        out.pooled.merge(&cm);
        out.folds.push(m);
        out.baseline_correct += base;
        out.synthetic_in_validation += leaked;
    }
    Ok(out)
}

/// Chooses learning rate and depth from the fixed grid by pooled CV kappa.
/// Earlier grid points win ties.
pub fn tune_params(
    x: &RowMatrix,
    labels: &[usize],
    plan: &FoldPlan,
    resample: Option<&ResamplePlan>,
    base: &BoostParams,
    seed: u64,
) -> Result<BoostParams> {
    let mut best = (f64::NEG_INFINITY, *base);
    for &eta in &GRID_LEARNING_RATES {
        for &depth in &GRID_DEPTHS {
            let p = BoostParams {
                learning_rate: eta,
                max_depth: depth,
                ..*base
            };
            let cv = cross_validate(x, labels, &vec![false; labels.len()], plan, resample, &p, seed)?;
            let k = cv.kappa();
            if k > best.0 {
                best = (k, p);
            }
        }
    }
    Ok(best.1)
}

/// Rows with the trait present and at least one observed feature.
pub fn experiment_rows(features: &FeatureMatrix, traits: &TraitTable, t: TraitKind) -> (RowMatrix, Vec<f64>) {
    let mut x = RowMatrix::new(features.n_cols());
    let mut y = Vec::new();
    for (i, p) in features.participants().iter().enumerate() {
        let Some(v) = traits.get(p, t) else { continue };
        let row = features.row(i);
        if row.iter().all(|c| c.is_nan()) {
            continue;
        }
        x.push_row(row);
        y.push(v);
    }
    (x, y)
}

/// Runs the full classification protocol for one trait.
pub fn run_experiment(
    features: &FeatureMatrix,
    traits: &TraitTable,
    t: TraitKind,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let (x, y) = experiment_rows(features, traits, t);
    evaluate(&x, &y, t, config)
}

/// Classification protocol on a prepared design matrix and raw scores.
pub fn evaluate(x: &RowMatrix, y: &[f64], t: TraitKind, config: &EvalConfig) -> Result<EvalReport> {
    evaluate_with_model(x, y, t, config).map(|(r, _)| r)
}

/// As [`evaluate`], also returning the ensemble refit on the whole
/// training split.
pub fn evaluate_with_model(
    x: &RowMatrix,
    y: &[f64],
    t: TraitKind,
    config: &EvalConfig,
) -> Result<(EvalReport, Ensemble)> {
    if x.n_rows() != y.len() {
        return Err(Error::WidthMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    let seed = derive_seed(config.seed, &[t.index() as u64]);
    let params = BoostParams {
        n_classes: N_CLASSES,
        seed,
        ..config.boost
    };
    match config.mode {
        EvalMode::LeakFree => leak_free(x, y, t, config, params, seed),
        EvalMode::PaperReplication => paper_replication(x, y, t, config, params, seed),
    }
}

/// Bins every row, oversamples and fits one ensemble on all of it. No
/// rows are held out; use [`evaluate`] for accuracy estimates. An `auto`
/// resample strategy falls back to SMOTE here.
pub fn train_final(x: &RowMatrix, y: &[f64], t: TraitKind, config: &EvalConfig) -> Result<(Ensemble, Binning)> {
    if x.n_rows() != y.len() {
        return Err(Error::WidthMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    let seed = derive_seed(config.seed, &[t.index() as u64]);
    let params = BoostParams {
        n_classes: N_CLASSES,
        seed,
        ..config.boost
    };
    let binned = bin_scores(y, config.binning)?;
    require_all_classes(&binned.labels)?;
    let strategy = match config.resample.strategy {
        ResampleStrategy::Auto => ResampleStrategy::Smote,
        s => s,
    };
    let rp = ResamplePlan {
        strategy,
        ..config.resample
    };
    let (model, _) = fit(x, &binned.labels, Some(&rp), &params, derive_seed(seed, &[RESAMPLE, REFIT]))?;
    Ok((model, binned))
}

fn require_all_classes(labels: &[usize]) -> Result<()> {
    for (c, n) in class_counts(labels).iter().enumerate() {
        if *n == 0 {
            return Err(Error::MissingClass {
                class: CLASS_NAMES[c].into(),
            });
        }
    }
    Ok(())
}

fn leak_free(
    x: &RowMatrix,
    y: &[f64],
    t: TraitKind,
    config: &EvalConfig,
    params: BoostParams,
    seed: u64,
) -> Result<(EvalReport, Ensemble)> {
    // all-row labels only stratify the holdout; they never reach a model
    let prelim = bin_scores(y, config.binning)?;
    let (train, hold) = stratified_holdout(&prelim.labels, config.holdout_fraction, derive_seed(seed, &[HOLDOUT]))?;
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let binned = bin_scores(&yt, config.binning)?;
    let labels = binned.labels.clone();
    require_all_classes(&labels)?;
    let xt = x.select(&train);

    let plan = stratified_kfold(&labels, config.folds, derive_seed(seed, &[FOLDS]))?;
    let no_synth = vec![false; labels.len()];
    let params = if config.tune {
        tune_params(&xt, &labels, &plan, Some(&config.resample), &params, seed)?
    } else {
        params
    };

    let (strategy, cv) = match config.resample.strategy {
        ResampleStrategy::Auto => {
            let mut best: Option<(ResampleStrategy, CvOutcome)> = None;
            for s in [ResampleStrategy::Smote, ResampleStrategy::Adasyn] {
                let rp = ResamplePlan {
                    strategy: s,
                    ..config.resample
                };
                let cv = cross_validate(&xt, &labels, &no_synth, &plan, Some(&rp), &params, seed)?;
                if best.as_ref().is_none_or(|(_, b)| cv.kappa() > b.kappa()) {
                    best = Some((s, cv));
                }
            }
            best.expect("two strategies tried")
        }
        s => (
            s,
            cross_validate(&xt, &labels, &no_synth, &plan, Some(&config.resample), &params, seed)?,
        ),
    };
    let rp = ResamplePlan {
        strategy,
        ..config.resample
    };
    let (model, n_syn) = fit(&xt, &labels, Some(&rp), &params, derive_seed(seed, &[RESAMPLE, REFIT]))?;
    let yh: Vec<usize> = hold.iter().map(|&i| binned.edges.classify(y[i])).collect();
    let pred = model.predict_rows(&x.select(&hold))?;
    let m = majority(&labels);
    let hold_base = yh.iter().filter(|l| **l == m).count() as f64 / yh.len().max(1) as f64;
    let holdout = SplitMetrics::new(ConfusionMatrix::from_pairs(&yh, &pred, N_CLASSES), hold_base)?;

    if cv.synthetic_in_validation != 0 {
        return Err(Error::Invariant(format!(
            "{} synthetic rows reached validation folds in leak-free mode",
            cv.synthetic_in_validation
        )));
    }
    let report = finish_report(ReportParts {
        t,
        config,
        n_rows: y.len(),
        binned,
        class_counts: class_counts(&labels),
        strategy,
        params,
        cv,
        holdout,
        holdout_size: hold.len(),
        holdout_synthetic: 0,
        n_synthetic_refit: n_syn,
    })?;
    Ok((report, model))
}

fn paper_replication(
    x: &RowMatrix,
    y: &[f64],
    t: TraitKind,
    config: &EvalConfig,
    params: BoostParams,
    seed: u64,
) -> Result<(EvalReport, Ensemble)> {
    let binned = bin_scores(y, config.binning)?;
    require_all_classes(&binned.labels)?;
    let strategy = match config.resample.strategy {
        ResampleStrategy::Auto => ResampleStrategy::Smote,
        s => s,
    };
    let rp = ResamplePlan {
        strategy,
        ..config.resample
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[PRE_RESAMPLE]));
    let all = balance(x, &binned.labels, &rp, &mut rng)?;

    let (train, hold) = stratified_holdout(&all.labels, config.holdout_fraction, derive_seed(seed, &[HOLDOUT]))?;
    let xt = all.features.select(&train);
    let labels: Vec<usize> = train.iter().map(|&i| all.labels[i]).collect();
    let synth_t: Vec<bool> = train.iter().map(|&i| all.synthetic[i]).collect();
    let plan = stratified_kfold(&labels, config.folds, derive_seed(seed, &[FOLDS]))?;
    let params = if config.tune {
        tune_params(&xt, &labels, &plan, None, &params, seed)?
    } else {
        params
    };
    let cv = cross_validate(&xt, &labels, &synth_t, &plan, None, &params, seed)?;
    let (model, _) = fit(&xt, &labels, None, &params, 0)?;
    let yh: Vec<usize> = hold.iter().map(|&i| all.labels[i]).collect();
    let pred = model.predict_rows(&all.features.select(&hold))?;
    let m = majority(&labels);
    let hold_base = yh.iter().filter(|l| **l == m).count() as f64 / yh.len().max(1) as f64;
    let holdout = SplitMetrics::new(ConfusionMatrix::from_pairs(&yh, &pred, N_CLASSES), hold_base)?;
    let holdout_synthetic = hold.iter().filter(|&&i| all.synthetic[i]).count();

    let report = finish_report(ReportParts {
        t,
        config,
        n_rows: y.len(),
        class_counts: class_counts(&binned.labels),
        binned,
        strategy,
        params,
        cv,
        holdout,
        holdout_size: hold.len(),
        holdout_synthetic,
        n_synthetic_refit: all.n_synthetic(),
    })?;
    Ok((report, model))
}

struct ReportParts<'a> {
    t: TraitKind,
    config: &'a EvalConfig,
    n_rows: usize,
    binned: Binning,
    class_counts: Vec<usize>,
    strategy: ResampleStrategy,
    params: BoostParams,
    cv: CvOutcome,
    holdout: SplitMetrics,
    holdout_size: usize,
    holdout_synthetic: usize,
    n_synthetic_refit: usize,
}

fn finish_report(p: ReportParts<'_>) -> Result<EvalReport> {
    let n_cv = p.cv.pooled.total() as usize;
    let cv_base = p.cv.baseline_correct as f64 / n_cv.max(1) as f64;
    let average_accuracy = p.cv.folds.iter().map(|f| f.accuracy).sum::<f64>() / p.cv.folds.len() as f64;
    let synthetic_in_validation = p.cv.synthetic_in_validation + p.holdout_synthetic;
    Ok(EvalReport {
        trait_kind: p.t,
        mode: p.config.mode,
        binning: p.config.binning,
        n_rows: p.n_rows,
        edges: p.binned.edges,
        binning_fallback: p.binned.fallback,
        class_counts: p.class_counts,
        strategy: p.strategy,
        params: p.params,
        average_accuracy,
        cv: SplitMetrics::new(p.cv.pooled, cv_base)?,
        folds: p.cv.folds,
        holdout: p.holdout,
        holdout_size: p.holdout_size,
        synthetic_in_validation,
        n_synthetic_refit: p.n_synthetic_refit,
    })
}

//! Stage runner behind the command-line tool. Every stage reads its inputs
//! from disk (or from the previous stage in the same run), writes its
//! artifacts under the output directory and records their hashes in
//! `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::cohort::{
    load_trait_table, write_trait_table, AssemblyReport, Cohort, FrameFormat, PlausibilityRanges, TraitFamily,
    TraitKind, TraitTable, ValidationReport,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate, experiment_rows, train_final, EvalReport};
use crate::features::{build_feature_matrix, describe, DescriptiveStats, FeatureMatrix};
use crate::gbt::Ensemble;
use crate::report::{
    alluvial_links, family_models, write_accuracy_csv, write_alluvial_csv, write_correlation_csv,
    write_descriptives_csv, write_regression_csv, AccuracySplit, AlluvialLinkTable, Envelope, ErrorReport,
    Manifest, ShapBars, SCHEMA_VERSION,
};
use crate::shap::{explain_rows, rank_attributions, write_attribution_csv, ImportanceRanking};
use crate::stats::{correlation_table, forward_select, trait_column, CorrelationTable, RegressionModel};
use crate::synth::{plant_cohort, verify_recovery, GroundTruth, RecoveryInputs, RecoveryScore, RecoveryThresholds};
use crate::util::{fingerprint_ids, sha256_hex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Features,
    Correlate,
    Regress,
    Train,
    Evaluate,
    Explain,
    Synth,
    Report,
    All,
}

impl Stage {
    /// Stages `all` runs, in order. `synth` is separate.
    pub const CHAIN: [Stage; 8] = [
        Stage::Ingest,
        Stage::Features,
        Stage::Correlate,
        Stage::Regress,
        Stage::Train,
        Stage::Evaluate,
        Stage::Explain,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Features => "features",
            Stage::Correlate => "correlate",
            Stage::Regress => "regress",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Explain => "explain",
            Stage::Synth => "synth",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

pub const MANIFEST: &str = "manifest.json";
pub const ERROR_REPORT: &str = "error.json";

pub const FRAMES: &str = "synth/frames.jsonl";
pub const TRAITS: &str = "synth/traits.csv";
pub const GROUND_TRUTH: &str = "synth/ground_truth.json";
pub const VALIDATION: &str = "ingest/validation.json";
pub const ASSEMBLY: &str = "ingest/assembly.json";
pub const DESCRIPTIVES: &str = "ingest/descriptives.csv";
pub const FEATURES_CSV: &str = "features/features.csv";
pub const FEATURES_JSON: &str = "features/features.json";
pub const CORRELATIONS_CSV: &str = "correlate/correlations.csv";
pub const CORRELATIONS_JSON: &str = "correlate/correlations.json";
pub const REGRESSIONS: &str = "regress/regressions.json";
pub const EVAL_REPORTS: &str = "evaluate/eval_reports.json";
pub const TABLE_CV: &str = "evaluate/accuracy_cv.csv";
pub const TABLE_HOLDOUT: &str = "evaluate/accuracy_holdout.csv";
pub const SHAP_TOP: &str = "explain/shap_top.json";
pub const ALLUVIAL_JSON: &str = "report/alluvial.json";
pub const ALLUVIAL_CSV: &str = "report/alluvial.csv";
pub const RECOVERY: &str = "report/recovery.json";

pub fn regression_csv(family: TraitFamily) -> String {
    let stem = match family {
        TraitFamily::BigFive => "big_five",
        TraitFamily::Dospert => "dospert",
        TraitFamily::Schwartz => "schwartz",
        TraitFamily::Haidt => "haidt",
    };
    format!("regress/{stem}.csv")
}

pub fn ensemble_path(t: TraitKind) -> String {
    format!("train/{}.json", t.key())
}

pub fn shap_csv(t: TraitKind) -> String {
    format!("explain/shap_{}.csv", t.key())
}

/// Runs stages against one output directory.
pub struct Pipeline {
    config: RunConfig,
    out: PathBuf,
    hash: String,
    manifest: Manifest,
    cohort: Option<Cohort>,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let out = config.paths.out.clone();
        let hash = config.hash();
        // keep artifacts from earlier stages of the same configuration
        let manifest = fs::read_to_string(out.join(MANIFEST))
            .ok()
            .and_then(|s| serde_json::from_str::<Manifest>(&s).ok())
            .filter(|m| m.config_hash == hash && m.seed == config.seed)
            .unwrap_or_else(|| Manifest {
                schema_version: SCHEMA_VERSION.into(),
                config_hash: hash.clone(),
                seed: config.seed,
                ..Default::default()
            });
        Ok(Pipeline {
            config,
            out,
            hash,
            manifest,
            cohort: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Runs `stage` (inside a dedicated thread pool when `threads` is
    /// set) and rewrites the manifest. On failure writes `error.json`.
    pub fn run(&mut self, stage: Stage) -> Result<()> {
        let result = match self.config.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(e.to_string()))?;
                pool.install(|| self.run_inner(stage))
            }
            None => self.run_inner(stage),
        };
        if let Err(e) = &result {
            let report = ErrorReport::new(Some(stage.name()), e);
            fs::create_dir_all(&self.out)?;
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            fs::write(self.out.join(ERROR_REPORT), s)?;
        }
        result
    }

    fn run_inner(&mut self, stage: Stage) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        let _ = fs::remove_file(self.out.join(ERROR_REPORT));
        let stages: Vec<Stage> = if stage == Stage::All {
            Stage::CHAIN.to_vec()
        } else {
            vec![stage]
        };
        for s in stages {
            info!("stage {}", s.name());
            match s {
                Stage::Synth => self.synth()?,
                Stage::Ingest => self.ingest()?,
                Stage::Features => self.features()?,
                Stage::Correlate => self.correlate()?,
                Stage::Regress => self.regress()?,
                Stage::Train => self.train()?,
                Stage::Evaluate => self.evaluate()?,
                Stage::Explain => self.explain()?,
                Stage::Report => self.report()?,
                Stage::All => unreachable!("expanded above"),
            }
            let name = s.name().to_string();
            if !self.manifest.stages.contains(&name) {
                self.manifest.stages.push(name);
            }
            self.write_manifest()?;
        }
        Ok(())
    }

    fn write_manifest(&self) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&self.manifest)?;
        s.push('\n');
        fs::write(self.out.join(MANIFEST), s)?;
        Ok(())
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.manifest.artifacts.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, data: T) -> Result<()> {
        let s = Envelope::new(&self.hash, self.config.seed, data).to_json()?;
        self.write(rel, s.as_bytes())
    }

    fn write_with(&mut self, rel: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(rel, &buf)
    }

    fn read_artifact(&self, rel: &str, producer: Stage) -> Result<String> {
        fs::read_to_string(self.out.join(rel)).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(format!(
                "{} (run the {} stage first)",
                self.out.join(rel).display(),
                producer.name()
            )),
            _ => Error::Io(e),
        })
    }

    fn read_json<T: DeserializeOwned>(&self, rel: &str, producer: Stage) -> Result<T> {
        Ok(Envelope::<T>::from_json(&self.read_artifact(rel, producer)?)?.data)
    }

    fn input(&self, configured: &Option<PathBuf>, default: &str, what: &str) -> Result<PathBuf> {
        let path = configured.clone().unwrap_or_else(|| self.out.join(default));
        if path.is_file() {
            Ok(path)
        } else {
            Err(Error::MissingInput(format!("{what} {}", path.display())))
        }
    }

    fn record_input(&mut self, name: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path)?;
        self.manifest.inputs.insert(name.to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    fn load_traits(&mut self) -> Result<TraitTable> {
        let path = self.input(&self.config.paths.traits.clone(), TRAITS, "trait table")?;
        let bytes = self.record_input("traits", &path)?;
        load_trait_table(bytes.as_slice(), &PlausibilityRanges::default())
    }

    fn frame_format(&self, path: &Path) -> FrameFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => FrameFormat::Csv,
            Some("jsonl") => FrameFormat::Jsonl,
            _ => self.config.frame_format,
        }
    }

    fn synth(&mut self) -> Result<()> {
        let spec = self.config.synth.plant_spec(self.config.seed);
        let cohort = plant_cohort(&spec)?;
        self.write_with(FRAMES, |buf| cohort.write_frames(buf, FrameFormat::Jsonl))?;
        self.write_with(TRAITS, |buf| write_trait_table(buf, &cohort.traits))?;
        let truth = cohort.truth.to_json();
        self.write(GROUND_TRUTH, truth.as_bytes())
    }

    fn ingest(&mut self) -> Result<()> {
        let traits = self.load_traits()?;
        let frames = self.input(&self.config.paths.frames.clone(), FRAMES, "frame log")?;
        let format = self.frame_format(&frames);
        self.record_input("frames", &frames)?;
        let reader = BufReader::new(fs::File::open(&frames)?);
        let (cohort, validation, assembly): (Cohort, ValidationReport, AssemblyReport) =
            Cohort::ingest(reader, format, traits)?;
        let rows: Vec<(TraitKind, DescriptiveStats)> = TraitKind::ALL
            .iter()
            .filter_map(|&t| {
                let v: Vec<f64> = cohort.traits.rows.values().filter_map(|r| r.get(t)).collect();
                describe(&v).ok().map(|d| (t, d))
            })
            .collect();
        self.write_json(VALIDATION, &validation)?;
        self.write_json(ASSEMBLY, &assembly)?;
        self.write_with(DESCRIPTIVES, |buf| write_descriptives_csv(buf, &rows))?;
        self.cohort = Some(cohort);
        Ok(())
    }

    fn features(&mut self) -> Result<()> {
        if self.cohort.is_none() {
            self.ingest()?;
        }
        let cohort = self.cohort.as_ref().expect("ingested above");
        let m = build_feature_matrix(cohort, &self.config.features);
        self.write_with(FEATURES_CSV, |buf| m.write_csv(buf))?;
        self.write_json(FEATURES_JSON, m.to_json())
    }

    fn load_features(&self) -> Result<FeatureMatrix> {
        FeatureMatrix::read_csv(self.read_artifact(FEATURES_CSV, Stage::Features)?.as_bytes())
    }

    fn correlate(&mut self) -> Result<()> {
        let m = self.load_features()?;
        let traits = self.load_traits()?;
        let table = correlation_table(&m, &traits);
        self.write_with(CORRELATIONS_CSV, |buf| write_correlation_csv(buf, &table))?;
        self.write_json(CORRELATIONS_JSON, &table)
    }

    fn regress(&mut self) -> Result<()> {
        let m = self.load_features()?;
        let traits = self.load_traits()?;
        let models: Vec<RegressionModel> = TraitKind::ALL
            .iter()
            .map(|&t| forward_select(&m, &trait_column(&m, &traits, t), t, &self.config.selection))
            .collect::<Result<_>>()?;
        for family in TraitFamily::ALL {
            let fm = family_models(&models, family);
            self.write_with(&regression_csv(family), |buf| write_regression_csv(buf, &fm))?;
        }
        self.write_json(REGRESSIONS, &models)
    }

    fn train(&mut self) -> Result<()> {
        let m = self.load_features()?;
        let traits = self.load_traits()?;
        let cfg = self.config.eval_config();
        for t in TraitKind::ALL {
            let (x, y) = experiment_rows(&m, &traits, t);
            let (model, _) = train_final(&x, &y, t, &cfg)?;
            self.write(&ensemble_path(t), model.to_json().as_bytes())?;
        }
        Ok(())
    }

    fn evaluate(&mut self) -> Result<()> {
        let m = self.load_features()?;
        let traits = self.load_traits()?;
        let cfg = self.config.eval_config();
        let reports: Vec<EvalReport> = TraitKind::ALL
            .iter()
            .map(|&t| {
                let (x, y) = experiment_rows(&m, &traits, t);
                evaluate(&x, &y, t, &cfg)
            })
            .collect::<Result<_>>()?;
        self.write_with(TABLE_CV, |buf| write_accuracy_csv(buf, &reports, AccuracySplit::CrossValidation))?;
        self.write_with(TABLE_HOLDOUT, |buf| write_accuracy_csv(buf, &reports, AccuracySplit::Holdout))?;
        self.write_json(EVAL_REPORTS, &reports)
    }

    fn explain(&mut self) -> Result<()> {
        let m = self.load_features()?;
        let traits = self.load_traits()?;
        let mut bars = Vec::new();
        for t in TraitKind::ALL {
            let model = Ensemble::from_json(&self.read_artifact(&ensemble_path(t), Stage::Train)?)?;
            let (x, _) = experiment_rows(&m, &traits, t);
            let attr = explain_rows(&model, &x)?;
            self.write_with(&shap_csv(t), |buf| write_attribution_csv(buf, &model, &attr))?;
            let ranking = rank_attributions(&attr, &x);
            bars.push(ShapBars {
                trait_kind: t,
                ranking: ImportanceRanking {
                    entries: ranking.top(self.config.report.top_k).to_vec(),
                },
            });
        }
        self.write_json(SHAP_TOP, &bars)
    }

    fn report(&mut self) -> Result<()> {
        let models: Vec<RegressionModel> = self.read_json(REGRESSIONS, Stage::Regress)?;
        let bars: Vec<ShapBars> = self.read_json(SHAP_TOP, Stage::Explain)?;
        let rankings: Vec<(TraitKind, ImportanceRanking)> =
            bars.into_iter().map(|b| (b.trait_kind, b.ranking)).collect();
        let table: AlluvialLinkTable =
            alluvial_links(&models, &rankings, self.config.report.top_k, self.config.report.alpha);
        self.write_with(ALLUVIAL_CSV, |buf| write_alluvial_csv(buf, &table))?;
        self.write_json(ALLUVIAL_JSON, &table)?;

        let gt_path = self
            .config
            .paths
            .ground_truth
            .clone()
            .or_else(|| Some(self.out.join(GROUND_TRUTH)).filter(|p| p.is_file()));
        if let Some(path) = gt_path {
            let truth = GroundTruth::from_json(&String::from_utf8_lossy(&self.record_input("ground_truth", &path)?))?;
            let reports: Vec<EvalReport> = self.read_json(EVAL_REPORTS, Stage::Evaluate)?;
            let corr: CorrelationTable = self.read_json(CORRELATIONS_JSON, Stage::Correlate)?;
            let traits = self.load_traits()?;
            let fp = fingerprint_ids(traits.participants());
            let score: RecoveryScore = verify_recovery(
                &truth,
                &RecoveryInputs {
                    cohort_fingerprint: &fp,
                    reports: &reports,
                    models: &models,
                    correlations: Some(&corr),
                    rankings: &rankings,
                },
                &RecoveryThresholds::default(),
            )?;
            self.write_json(RECOVERY, &score)?;
        }
        Ok(())
    }
}

/// Hashes every file under `dir`, keyed by relative path with `/`
/// separators. Used to compare artifact trees.
pub fn hash_tree(dir: &Path) -> Result<BTreeMap<String, String>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p.strip_prefix(root).expect("under root");
                let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                out.insert(key, sha256_hex(&fs::read(&p)?));
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}

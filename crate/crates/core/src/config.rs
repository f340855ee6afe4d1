//! Run configuration, read from and written to TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::FrameFormat;
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::features::FeatureOptions;
use crate::stats::SelectionConfig;
use crate::synth::{one_link_per_trait, PlantSpec};
use crate::util::sha256_hex;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Frame log. Defaults to `<out>/synth/frames.jsonl` when that exists.
    pub frames: Option<PathBuf>,
    /// Trait CSV. Defaults to `<out>/synth/traits.csv` when that exists.
    pub traits: Option<PathBuf>,
    /// Ground-truth sidecar; enables the recovery report.
    pub ground_truth: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthPreset {
    /// 500 participants, complete data.
    Desk,
    /// 85 participants with survey dropout and a few missing videos.
    PaperScale,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub preset: SynthPreset,
    /// Overrides the preset's participant count.
    pub n_participants: Option<usize>,
    pub hz: f64,
    pub jitter_concentration: f64,
    /// Slope of the one planted link per trait; 0 plants nothing.
    pub beta: f64,
    pub sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            preset: SynthPreset::Desk,
            n_participants: None,
            hz: 30.0,
            jitter_concentration: 100.0,
            beta: 0.0,
            sigma: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn plant_spec(&self, seed: u64) -> PlantSpec {
        let base = match self.preset {
            SynthPreset::Desk => PlantSpec::desk(seed),
            SynthPreset::PaperScale => PlantSpec::paper_scale(seed),
        };
        PlantSpec {
            n_participants: self.n_participants.unwrap_or(base.n_participants),
            hz: self.hz,
            jitter_concentration: self.jitter_concentration,
            links: if self.beta == 0.0 {
                Vec::new()
            } else {
                one_link_per_trait(self.beta, self.sigma)
            },
            ..base
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    /// SHAP features per trait kept in bar data and alluvial links.
    pub top_k: usize,
    /// Regression terms below this p-value feed the alluvial table.
    pub alpha: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { top_k: 5, alpha: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed. Every stage derives its streams from it; `eval.seed`
    /// is overwritten with it.
    pub seed: u64,
    /// Worker threads; unset uses all cores.
    pub threads: Option<usize>,
    pub frame_format: FrameFormat,
    pub paths: Paths,
    pub features: FeatureOptions,
    pub selection: SelectionConfig,
    pub eval: EvalConfig,
    pub synth: SynthConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            threads: None,
            frame_format: FrameFormat::Jsonl,
            paths: Paths {
                out: PathBuf::from("out"),
                ..Default::default()
            },
            features: FeatureOptions::default(),
            selection: SelectionConfig::default(),
            eval: EvalConfig::default(),
            synth: SynthConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

/// The part of a config that determines artifact contents.
#[derive(Serialize)]
struct HashedView<'a> {
    seed: u64,
    frame_format: FrameFormat,
    features: &'a FeatureOptions,
    selection: &'a SelectionConfig,
    eval: &'a EvalConfig,
    synth: &'a SynthConfig,
    report: &'a ReportConfig,
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.display().to_string()),
            _ => Error::Io(e),
        })?;
        Self::from_toml(&s)
    }

    pub fn validate(&self) -> Result<()> {
        self.eval.boost.validate()?;
        if self.eval.folds < 2 {
            return Err(Error::Config("eval.folds must be >= 2".into()));
        }
        if !(self.eval.holdout_fraction > 0.0 && self.eval.holdout_fraction < 1.0) {
            return Err(Error::Config("eval.holdout_fraction must be in (0, 1)".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        if !(self.synth.hz > 0.0) {
            return Err(Error::Config("synth.hz must be > 0".into()));
        }
        Ok(())
    }

    /// Evaluation settings seeded from the master seed.
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seed: self.seed,
            ..self.eval
        }
    }

    /// SHA-256 of the canonical JSON of every setting except paths and
    /// thread count, so relocating a run or changing parallelism keeps
    /// the hash.
    pub fn hash(&self) -> String {
        let view = HashedView {
            seed: self.seed,
            frame_format: self.frame_format,
            features: &self.features,
            selection: &self.selection,
            eval: &self.eval_config(),
            synth: &self.synth,
            report: &self.report,
        };
        sha256_hex(serde_json::to_string(&view).expect("config serializes").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::EvalMode;

    #[test]
    fn default_round_trips_through_toml() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn edited_config_round_trips() {
        let mut c = RunConfig::default();
        c.seed = 42;
        c.threads = Some(3);
        c.paths.frames = Some("a/frames.csv".into());
        c.eval.mode = EvalMode::PaperReplication;
        c.eval.boost.learning_rate = 0.1 + 0.2;
        c.synth.beta = 0.012;
        c.synth.sigma = 1.0 / 3.0;
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_takes_defaults() {
        let c = RunConfig::from_toml("seed = 9\n[eval]\nfolds = 5\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.eval.folds, 5);
        assert_eq!(c.eval.holdout_fraction, 0.1);
        assert_eq!(c.report.top_k, 5);
    }

    #[test]
    fn hash_ignores_paths_and_threads() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.paths.out = "elsewhere".into();
        b.threads = Some(8);
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(matches!(RunConfig::from_toml("[eval]\nfolds = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("seed = \"x\"\n"), Err(Error::Config(_))));
    }
}

//! Per-video emotion aggregation and the participant × 105 feature matrix.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, EmotionKind, EmotionScores, EmotionStream, VideoId};
use crate::error::{Error, Result};

pub const FEATURE_COUNT: usize = EmotionKind::COUNT * VideoId::COUNT;

/// One (emotion, video) feature. Canonical order is emotion-major.
/// Serialized by name, e.g. `"Happy 8"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureKey {
    pub emotion: EmotionKind,
    pub video: VideoId,
}

impl FeatureKey {
    pub fn new(emotion: EmotionKind, video: VideoId) -> Self {
        FeatureKey { emotion, video }
    }

    pub fn index(self) -> usize {
        self.emotion.index() * VideoId::COUNT + self.video.index()
    }

    pub fn from_index(i: usize) -> Option<Self> {
        if i >= FEATURE_COUNT {
            return None;
        }
        Some(FeatureKey {
            emotion: EmotionKind::ALL[i / VideoId::COUNT],
            video: VideoId::new((i % VideoId::COUNT) as u8 + 1).ok()?,
        })
    }

    pub fn all() -> impl Iterator<Item = FeatureKey> {
        (0..FEATURE_COUNT).filter_map(FeatureKey::from_index)
    }

    /// Display name, e.g. "Happy 8".
    pub fn name(self) -> String {
        format!("{} {}", self.emotion.label(), self.video)
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.emotion.label(), self.video)
    }
}

impl From<FeatureKey> for String {
    fn from(k: FeatureKey) -> String {
        k.name()
    }
}

impl TryFrom<String> for FeatureKey {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for FeatureKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (e, v) = s
            .rsplit_once(' ')
            .ok_or_else(|| Error::invalid(format!("feature name {s:?} is not \"<Emotion> <video>\"")))?;
        let emotion = EmotionKind::from_key(e)
            .ok_or_else(|| Error::invalid(format!("unknown emotion in feature name {s:?}")))?;
        Ok(FeatureKey::new(emotion, v.parse()?))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Unweighted mean over frames.
    #[default]
    Mean,
    /// Frames weighted by the time until the next frame (non-default).
    TimeWeightedMean,
    /// Per-emotion maximum (non-default; rows no longer sum to 1).
    Max,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureOptions {
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Z-score each column over its present values.
    #[serde(default)]
    pub standardize: bool,
}

/// Collapses one stream to a single value per emotion; `None` when empty.
pub fn aggregate_video(stream: &EmotionStream, mode: Aggregation) -> Option<EmotionScores> {
    let frames = &stream.frames;
    if frames.is_empty() {
        return None;
    }
    let mut out = [0.0; EmotionKind::COUNT];
    match mode {
        Aggregation::Mean => {
            for f in frames {
                for (o, s) in out.iter_mut().zip(&f.scores) {
                    *o += s;
                }
            }
            let n = frames.len() as f64;
            out.iter_mut().for_each(|o| *o /= n);
        }
        Aggregation::TimeWeightedMean => {
            if frames.len() == 1 {
                return Some(frames[0].scores);
            }
            let span = (frames[frames.len() - 1].timestamp_ms - frames[0].timestamp_ms) as f64;
            let last_gap = span / (frames.len() - 1) as f64;
            let mut total = 0.0;
            for (i, f) in frames.iter().enumerate() {
                let w = match frames.get(i + 1) {
                    Some(next) => (next.timestamp_ms - f.timestamp_ms) as f64,
                    None => last_gap,
                };
                total += w;
                for (o, s) in out.iter_mut().zip(&f.scores) {
                    *o += w * s;
                }
            }
            out.iter_mut().for_each(|o| *o /= total);
        }
        Aggregation::Max => {
            for f in frames {
                for (o, s) in out.iter_mut().zip(&f.scores) {
                    *o = o.max(*s);
                }
            }
        }
    }
    Some(out)
}

/// Participants × 105 features, row-major; NaN marks an absent cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    participants: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(participants: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != participants.len() * FEATURE_COUNT {
            return Err(Error::WidthMismatch {
                expected: participants.len() * FEATURE_COUNT,
                got: values.len(),
            });
        }
        Ok(FeatureMatrix {
            participants,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.participants.len()
    }

    pub fn n_cols(&self) -> usize {
        FEATURE_COUNT
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn row_index(&self, participant: &str) -> Option<usize> {
        self.participants.iter().position(|p| p == participant)
    }

    /// Raw row with NaN for absent cells.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * FEATURE_COUNT..(i + 1) * FEATURE_COUNT]
    }

    pub fn get(&self, row: usize, key: FeatureKey) -> Option<f64> {
        let v = self.values[row * FEATURE_COUNT + key.index()];
        (!v.is_nan()).then_some(v)
    }

    pub fn column(&self, key: FeatureKey) -> Vec<f64> {
        (0..self.n_rows())
            .map(|r| self.values[r * FEATURE_COUNT + key.index()])
            .collect()
    }

    pub fn column_names() -> Vec<String> {
        FeatureKey::all().map(FeatureKey::name).collect()
    }

    pub fn row_is_complete(&self, i: usize) -> bool {
        self.row(i).iter().all(|v| !v.is_nan())
    }

    fn standardize(&mut self) {
        for c in 0..FEATURE_COUNT {
            let col: Vec<f64> = (0..self.n_rows())
                .map(|r| self.values[r * FEATURE_COUNT + c])
                .collect();
            let present: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
            if present.is_empty() {
                continue;
            }
            let n = present.len() as f64;
            let mean = present.iter().sum::<f64>() / n;
            let sd = if present.len() > 1 {
                (present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            for r in 0..self.n_rows() {
                let v = &mut self.values[r * FEATURE_COUNT + c];
                if !v.is_nan() {
                    *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
                }
            }
        }
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["participant_id".to_string()];
        header.extend(Self::column_names());
        w.write_record(&header)?;
        for (i, p) in self.participants.iter().enumerate() {
            let mut rec = vec![p.clone()];
            rec.extend(self.row(i).iter().map(|v| {
                if v.is_nan() {
                    String::new()
                } else {
                    v.to_string()
                }
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
        let header = reader.headers()?.clone();
        let expected = std::iter::once("participant_id".to_string()).chain(Self::column_names());
        if !header.iter().map(str::to_string).eq(expected) {
            return Err(Error::Parse {
                line: 1,
                reason: "feature matrix header must be participant_id followed by Angry 1 … Surprised 15".into(),
            });
        }
        let mut participants = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            participants.push(rec[0].to_string());
            for cell in rec.iter().skip(1) {
                values.push(if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse().map_err(|_| Error::Parse {
                        line: i + 2,
                        reason: format!("{cell:?} is not a number"),
                    })?
                });
            }
        }
        FeatureMatrix::new(participants, values)
    }

    pub fn to_json(&self) -> FeatureMatrixJson {
        FeatureMatrixJson {
            schema_version: "1.0".into(),
            features: Self::column_names(),
            participants: self.participants.clone(),
            values: (0..self.n_rows())
                .map(|i| {
                    self.row(i)
                        .iter()
                        .map(|v| (!v.is_nan()).then_some(*v))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json(doc: FeatureMatrixJson) -> Result<Self> {
        crate::report::check_schema(&doc.schema_version)?;
        if doc.features != Self::column_names() {
            return Err(Error::invalid("feature names do not match canonical order"));
        }
        let values = doc
            .values
            .into_iter()
            .flat_map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)))
            .collect();
        FeatureMatrix::new(doc.participants, values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrixJson {
    pub schema_version: String,
    pub features: Vec<String>,
    pub participants: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Aggregates every cohort participant into one 105-wide row.
///
/// Rows follow the cohort's participant order; a missing (participant,
/// video) stream leaves the seven cells of that video absent.
pub fn build_feature_matrix(cohort: &Cohort, opts: &FeatureOptions) -> FeatureMatrix {
    let participants: Vec<String> = cohort.participants().into_iter().map(String::from).collect();
    let rows: Vec<Vec<f64>> = participants
        .par_iter()
        .map(|p| {
            let mut row = vec![f64::NAN; FEATURE_COUNT];
            for video in VideoId::all() {
                let agg = cohort
                    .stream(p, video)
                    .and_then(|s| aggregate_video(s, opts.aggregation));
                if let Some(scores) = agg {
                    for e in EmotionKind::ALL {
                        row[FeatureKey::new(e, video).index()] = scores[e.index()];
                    }
                }
            }
            row
        })
        .collect();
    let mut m = FeatureMatrix {
        participants,
        values: rows.concat(),
    };
    if opts.standardize {
        m.standardize();
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean, sample SD, min and max over the non-NaN values.
pub fn describe(values: &[f64]) -> Result<DescriptiveStats> {
    let present: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if present.len() < 2 {
        return Err(Error::insufficient(format!(
            "describe needs at least 2 values, got {}",
            present.len()
        )));
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let min = present.iter().copied().fold(f64::INFINITY, f64::min);
    let max = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DescriptiveStats {
        n: present.len(),
        mean: mean.clamp(min, max),
        sd: var.sqrt(),
        min,
        max,
    })
}

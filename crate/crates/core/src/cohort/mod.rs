//! Canonical data model: emotions, videos, frames, streams and the joined cohort.
//!
//! Frame logs and trait tables enter through [`parse_frame_log`] and
//! [`load_trait_table`]; [`validate_and_normalize`] turns raw frames into
//! clean [`EmotionStream`]s and [`assemble_cohort`] joins both sides.

mod assemble;
mod frames;
mod traits;

pub use assemble::{assemble_cohort, AssemblyReport, Cohort};
pub use frames::{
    group_records, parse_frame_log, validate_and_normalize, write_frame_log, FrameFormat, FrameLogWriter,
    FrameRecord, StreamReport, ValidationReport, FRAME_CSV_HEADER,
};
pub use traits::{
    load_trait_table, write_trait_table, PlausibilityRanges, TraitFamily, TraitKind, TraitRow,
    TraitTable,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven recognised facial emotions, in canonical (alphabetical) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionKind {
    Angry,
    Disgusted,
    Fearful,
    Happy,
    Neutral,
    Sad,
    Surprised,
}

impl EmotionKind {
    pub const COUNT: usize = 7;

    pub const ALL: [EmotionKind; 7] = [
        EmotionKind::Angry,
        EmotionKind::Disgusted,
        EmotionKind::Fearful,
        EmotionKind::Happy,
        EmotionKind::Neutral,
        EmotionKind::Sad,
        EmotionKind::Surprised,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Lowercase key used in frame logs.
    pub fn key(self) -> &'static str {
        match self {
            EmotionKind::Angry => "angry",
            EmotionKind::Disgusted => "disgusted",
            EmotionKind::Fearful => "fearful",
            EmotionKind::Happy => "happy",
            EmotionKind::Neutral => "neutral",
            EmotionKind::Sad => "sad",
            EmotionKind::Surprised => "surprised",
        }
    }

    /// Capitalised label used in feature names ("Happy 8").
    pub fn label(self) -> &'static str {
        match self {
            EmotionKind::Angry => "Angry",
            EmotionKind::Disgusted => "Disgusted",
            EmotionKind::Fearful => "Fearful",
            EmotionKind::Happy => "Happy",
            EmotionKind::Neutral => "Neutral",
            EmotionKind::Sad => "Sad",
            EmotionKind::Surprised => "Surprised",
        }
    }

    /// Parses a frame-log key. `joy` is accepted as an alias for `happy`.
    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "joy" => Some(EmotionKind::Happy),
            _ => Self::ALL
                .iter()
                .copied()
                .find(|e| e.key() == key || e.label() == key),
        }
    }
}

impl fmt::Display for EmotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Index of one of the 15 stimulus videos, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct VideoId(u8);

impl VideoId {
    pub const COUNT: usize = 15;

    pub fn new(id: u8) -> Result<Self> {
        if (1..=Self::COUNT as u8).contains(&id) {
            Ok(VideoId(id))
        } else {
            Err(Error::invalid(format!("video_id {id} outside 1..=15")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position in the catalog.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = VideoId> {
        (1..=Self::COUNT as u8).map(VideoId)
    }
}

impl TryFrom<u8> for VideoId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        VideoId::new(v)
    }
}

impl From<VideoId> for u8 {
    fn from(v: VideoId) -> u8 {
        v.0
    }
}

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for VideoId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v: i64 = s
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("video_id {s:?} is not an integer")))?;
        if !(1..=15).contains(&v) {
            return Err(Error::invalid(format!("video_id {v} outside 1..=15")));
        }
        VideoId::new(v as u8)
    }
}

/// One stimulus video: id plus short slug.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoInfo {
    pub id: VideoId,
    pub slug: &'static str,
}

/// The fixed stimulus sequence shown to every participant.
pub fn video_catalog() -> Vec<VideoInfo> {
    const SLUGS: [&str; 15] = [
        "puppies",
        "avocado",
        "condom ad",
        "runner",
        "maggot",
        "soldier",
        "Trump",
        "mountain bike",
        "roof bike",
        "roof run",
        "raccoon",
        "abandoned",
        "waste",
        "dog",
        "monster",
    ];
    SLUGS
        .iter()
        .enumerate()
        .map(|(i, slug)| VideoInfo {
            id: VideoId(i as u8 + 1),
            slug,
        })
        .collect()
}

/// Per-emotion probability vector in canonical order.
pub type EmotionScores = [f64; EmotionKind::COUNT];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionFrame {
    pub timestamp_ms: u64,
    pub scores: EmotionScores,
}

impl EmotionFrame {
    pub fn score(&self, emotion: EmotionKind) -> f64 {
        self.scores[emotion.index()]
    }

    pub fn sum(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// Validated frames for one participant watching one video.
///
/// An empty `frames` vector marks the stream as absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionStream {
    pub participant_id: String,
    pub video_id: VideoId,
    pub frames: Vec<EmotionFrame>,
}

impl EmotionStream {
    pub fn is_absent(&self) -> bool {
        self.frames.is_empty()
    }
}

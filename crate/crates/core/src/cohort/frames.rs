use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EmotionFrame, EmotionKind, EmotionScores, EmotionStream, VideoId};
use crate::error::{Error, Result};

/// Frames whose probabilities sum below this are treated as "no face detected".
pub const NO_FACE_THRESHOLD: f64 = 0.5;
/// Upper end of the renormalisation window.
pub const MAX_SCORE_SUM: f64 = 1.5;

pub const FRAME_CSV_HEADER: [&str; 10] = [
    "participant_id",
    "video_id",
    "timestamp_ms",
    "angry",
    "disgusted",
    "fearful",
    "happy",
    "neutral",
    "sad",
    "surprised",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFormat {
    Jsonl,
    Csv,
}

/// One raw frame tagged with its (participant, video) key.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub participant_id: String,
    pub video_id: VideoId,
    pub frame: EmotionFrame,
}

#[derive(Serialize)]
struct FrameLine<'a> {
    participant_id: &'a str,
    video_id: u8,
    timestamp_ms: u64,
    angry: f64,
    disgusted: f64,
    fearful: f64,
    happy: f64,
    neutral: f64,
    sad: f64,
    surprised: f64,
}

impl<'a> From<&'a FrameRecord> for FrameLine<'a> {
    fn from(r: &'a FrameRecord) -> Self {
        let s = &r.frame.scores;
        FrameLine {
            participant_id: &r.participant_id,
            video_id: r.video_id.get(),
            timestamp_ms: r.frame.timestamp_ms,
            angry: s[0],
            disgusted: s[1],
            fearful: s[2],
            happy: s[3],
            neutral: s[4],
            sad: s[5],
            surprised: s[6],
        }
    }
}

/// Reads a frame log, yielding every record in input order.
///
/// Blank JSONL lines are skipped. Errors carry the 1-based line number.
pub fn parse_frame_log<R: BufRead>(source: R, format: FrameFormat) -> Result<Vec<FrameRecord>> {
    match format {
        FrameFormat::Jsonl => parse_jsonl(source),
        FrameFormat::Csv => parse_csv(source),
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_jsonl<R: BufRead>(source: R) -> Result<Vec<FrameRecord>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(lineno, format!("not valid UTF-8: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| parse_err(lineno, format!("malformed JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| parse_err(lineno, "record is not a JSON object"))?;

        let participant_id = obj
            .get("participant_id")
            .ok_or_else(|| parse_err(lineno, "missing key \"participant_id\""))?
            .as_str()
            .ok_or_else(|| parse_err(lineno, "participant_id is not a string"))?
            .to_string();
        let video_id = obj
            .get("video_id")
            .ok_or_else(|| parse_err(lineno, "missing key \"video_id\""))?
            .as_i64()
            .ok_or_else(|| parse_err(lineno, "video_id is not an integer"))?;
        if !(1..=15).contains(&video_id) {
            return Err(parse_err(lineno, format!("video_id {video_id} outside 1..=15")));
        }
        let timestamp_ms = obj
            .get("timestamp_ms")
            .ok_or_else(|| parse_err(lineno, "missing key \"timestamp_ms\""))?
            .as_u64()
            .ok_or_else(|| parse_err(lineno, "timestamp_ms is not a non-negative integer"))?;

        let mut scores: [Option<f64>; 7] = [None; 7];
        for (key, v) in obj {
            if matches!(key.as_str(), "participant_id" | "video_id" | "timestamp_ms") {
                continue;
            }
            let emotion = EmotionKind::from_key(key)
                .ok_or_else(|| parse_err(lineno, format!("unknown emotion key {key:?}")))?;
            let x = v
                .as_f64()
                .ok_or_else(|| parse_err(lineno, format!("score {key:?} is not a number")))?;
            let slot = &mut scores[emotion.index()];
            if slot.is_some() {
                return Err(parse_err(
                    lineno,
                    format!("duplicate score for {:?}", emotion.key()),
                ));
            }
            *slot = Some(x);
        }
        let scores = collect_scores(lineno, scores)?;
        out.push(FrameRecord {
            participant_id,
            video_id: VideoId::new(video_id as u8)?,
            frame: EmotionFrame {
                timestamp_ms,
                scores,
            },
        });
    }
    Ok(out)
}

fn collect_scores(line: usize, scores: [Option<f64>; 7]) -> Result<EmotionScores> {
    let mut out = [0.0; 7];
    for (i, s) in scores.iter().enumerate() {
        out[i] = s.ok_or_else(|| {
            parse_err(
                line,
                format!("missing key {:?}", EmotionKind::ALL[i].key()),
            )
        })?;
    }
    Ok(out)
}

fn parse_csv<R: BufRead>(source: R) -> Result<Vec<FrameRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != FRAME_CSV_HEADER {
        for (i, expected) in FRAME_CSV_HEADER.iter().enumerate() {
            match names.get(i) {
                Some(got) if got == expected => {}
                Some(got) if i >= 3 && EmotionKind::from_key(got).is_none() => {
                    return Err(parse_err(1, format!("unknown emotion key {got:?}")));
                }
                _ => return Err(parse_err(1, format!("missing key {expected:?} in header"))),
            }
        }
        return Err(parse_err(
            1,
            format!("unexpected extra columns; header must be {}", FRAME_CSV_HEADER.join(",")),
        ));
    }

    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let lineno = i + 2;
        let rec = rec.map_err(|e| parse_err(lineno, e.to_string()))?;
        if rec.len() != FRAME_CSV_HEADER.len() {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", FRAME_CSV_HEADER.len(), rec.len()),
            ));
        }
        let participant_id = rec[0].to_string();
        let video_id: i64 = rec[1]
            .parse()
            .map_err(|_| parse_err(lineno, "video_id is not an integer"))?;
        if !(1..=15).contains(&video_id) {
            return Err(parse_err(lineno, format!("video_id {video_id} outside 1..=15")));
        }
        let timestamp_ms: u64 = rec[2]
            .parse()
            .map_err(|_| parse_err(lineno, "timestamp_ms is not a non-negative integer"))?;
        let mut scores = [0.0; 7];
        for (k, slot) in scores.iter_mut().enumerate() {
            let field = &rec[3 + k];
            if field.is_empty() {
                return Err(parse_err(
                    lineno,
                    format!("missing key {:?}", EmotionKind::ALL[k].key()),
                ));
            }
            *slot = field.parse().map_err(|_| {
                parse_err(
                    lineno,
                    format!("score {:?} is not a number", EmotionKind::ALL[k].key()),
                )
            })?;
        }
        out.push(FrameRecord {
            participant_id,
            video_id: VideoId::new(video_id as u8)?,
            frame: EmotionFrame {
                timestamp_ms,
                scores,
            },
        });
    }
    Ok(out)
}

/// Streaming writer for the formats `parse_frame_log` reads.
pub struct FrameLogWriter<W: Write> {
    inner: FrameSink<W>,
}

enum FrameSink<W: Write> {
    Jsonl(W),
    Csv(csv::Writer<W>),
}

impl<W: Write> FrameLogWriter<W> {
    pub fn new(sink: W, format: FrameFormat) -> Result<Self> {
        let inner = match format {
            FrameFormat::Jsonl => FrameSink::Jsonl(sink),
            FrameFormat::Csv => {
                let mut w = csv::Writer::from_writer(sink);
                w.write_record(FRAME_CSV_HEADER)?;
                FrameSink::Csv(w)
            }
        };
        Ok(FrameLogWriter { inner })
    }

    pub fn write(&mut self, r: &FrameRecord) -> Result<()> {
        match &mut self.inner {
            FrameSink::Jsonl(sink) => {
                serde_json::to_writer(&mut *sink, &FrameLine::from(r))?;
                sink.write_all(b"\n")?;
            }
            FrameSink::Csv(w) => {
                let mut row = vec![
                    r.participant_id.clone(),
                    r.video_id.to_string(),
                    r.frame.timestamp_ms.to_string(),
                ];
                row.extend(r.frame.scores.iter().map(|s| s.to_string()));
                w.write_record(&row)?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<W> {
        match self.inner {
            FrameSink::Jsonl(mut sink) => {
                sink.flush()?;
                Ok(sink)
            }
            FrameSink::Csv(w) => w.into_inner().map_err(|e| Error::Io(e.into_error())),
        }
    }
}

/// Writes records in the same formats `parse_frame_log` reads.
pub fn write_frame_log<'a, W, I>(sink: W, records: I, format: FrameFormat) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a FrameRecord>,
{
    let mut w = FrameLogWriter::new(sink, format)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()?;
    Ok(())
}

/// Groups records by (participant, video), preserving input order within a group.
pub fn group_records(
    records: impl IntoIterator<Item = FrameRecord>,
) -> BTreeMap<(String, VideoId), Vec<EmotionFrame>> {
    let mut groups: BTreeMap<(String, VideoId), Vec<EmotionFrame>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.participant_id, r.video_id))
            .or_default()
            .push(r.frame);
    }
    groups
}

/// Per-stream validation counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamReport {
    pub participant_id: String,
    pub video_id: u8,
    pub input_frames: usize,
    pub retained_frames: usize,
    pub no_face: usize,
    pub out_of_range: usize,
    pub over_sum: usize,
    pub duplicates: usize,
    pub renormalized: usize,
    pub absent: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records_read: usize,
    pub streams: Vec<StreamReport>,
    pub retained_frames: usize,
    pub no_face: usize,
    pub out_of_range: usize,
    pub over_sum: usize,
    pub duplicates: usize,
    pub absent_streams: usize,
}

impl ValidationReport {
    pub fn push(&mut self, s: StreamReport) {
        self.retained_frames += s.retained_frames;
        self.no_face += s.no_face;
        self.out_of_range += s.out_of_range;
        self.over_sum += s.over_sum;
        self.duplicates += s.duplicates;
        self.absent_streams += s.absent as usize;
        self.streams.push(s);
    }

    pub fn rejected_frames(&self) -> usize {
        self.no_face + self.out_of_range + self.over_sum
    }
}

/// Cleans the raw frames of one (participant, video) stream.
///
/// Frames with any score outside [0, 1] are rejected, frames summing below
/// 0.5 count as "no face", frames summing above 1.5 are rejected, and the
/// rest are rescaled to sum to exactly 1. Output is sorted by timestamp;
/// for repeated timestamps the frame appearing later in the input wins.
pub fn validate_and_normalize(
    participant_id: &str,
    video_id: VideoId,
    frames: Vec<EmotionFrame>,
) -> (EmotionStream, StreamReport) {
    let mut report = StreamReport {
        participant_id: participant_id.to_string(),
        video_id: video_id.get(),
        input_frames: frames.len(),
        ..Default::default()
    };

    let mut kept: Vec<EmotionFrame> = Vec::with_capacity(frames.len());
    for mut f in frames {
        if f.scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            report.out_of_range += 1;
            continue;
        }
        let sum = f.sum();
        if sum < NO_FACE_THRESHOLD {
            report.no_face += 1;
            continue;
        }
        if sum > MAX_SCORE_SUM {
            report.over_sum += 1;
            continue;
        }
        if sum != 1.0 {
            for s in f.scores.iter_mut() {
                *s /= sum;
            }
            report.renormalized += 1;
        }
        kept.push(f);
    }

    // stable sort keeps input order among equal timestamps, so the last one wins
    kept.sort_by_key(|f| f.timestamp_ms);
    let mut deduped: Vec<EmotionFrame> = Vec::with_capacity(kept.len());
    for f in kept {
        match deduped.last_mut() {
            Some(last) if last.timestamp_ms == f.timestamp_ms => {
                *last = f;
                report.duplicates += 1;
            }
            _ => deduped.push(f),
        }
    }

    report.retained_frames = deduped.len();
    report.absent = deduped.is_empty();
    (
        EmotionStream {
            participant_id: participant_id.to_string(),
            video_id,
            frames: deduped,
        },
        report,
    )
}

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{
    group_records, parse_frame_log, validate_and_normalize, video_catalog, EmotionStream,
    FrameFormat, FrameRecord, TraitFamily, TraitTable, ValidationReport, VideoId, VideoInfo,
};
use crate::error::{Error, Result};

/// Streams joined with trait scores. Immutable once assembled.
#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    pub streams: BTreeMap<(String, VideoId), EmotionStream>,
    pub traits: TraitTable,
    pub catalog: Vec<VideoInfo>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyReport {
    pub cohort_size: usize,
    /// Participants with streams but no completed survey.
    pub orphan_streams: Vec<String>,
    /// Participants with survey scores but no valid stream.
    pub trait_only: Vec<String>,
    pub family_n: BTreeMap<String, usize>,
}

/// Joins validated streams with the trait table on participant id.
///
/// Absent streams are ignored. A participant enters the cohort when they
/// have at least one valid stream and at least one complete trait family.
pub fn assemble_cohort(
    streams: impl IntoIterator<Item = EmotionStream>,
    traits: TraitTable,
) -> Result<(Cohort, AssemblyReport)> {
    let mut by_key = BTreeMap::new();
    for s in streams.into_iter().filter(|s| !s.is_absent()) {
        by_key.insert((s.participant_id.clone(), s.video_id), s);
    }
    let with_streams: BTreeSet<String> = by_key.keys().map(|(p, _)| p.clone()).collect();
    let with_traits: BTreeSet<String> = traits
        .rows
        .iter()
        .filter(|(_, r)| r.has_any_family())
        .map(|(p, _)| p.clone())
        .collect();

    let members: BTreeSet<String> = with_streams.intersection(&with_traits).cloned().collect();
    if members.is_empty() {
        return Err(Error::EmptyCohort);
    }

    let mut report = AssemblyReport {
        cohort_size: members.len(),
        orphan_streams: with_streams.difference(&with_traits).cloned().collect(),
        trait_only: traits
            .rows
            .keys()
            .filter(|p| !with_streams.contains(*p))
            .cloned()
            .collect(),
        family_n: BTreeMap::new(),
    };

    by_key.retain(|(p, _), _| members.contains(p));
    let mut kept = TraitTable::default();
    for (p, row) in traits.rows {
        if members.contains(&p) {
            kept.rows.insert(p, row);
        }
    }
    let cohort = Cohort {
        streams: by_key,
        traits: kept,
        catalog: video_catalog(),
    };
    for f in TraitFamily::ALL {
        report.family_n.insert(f.name().to_string(), cohort.family_n(f));
    }
    Ok((cohort, report))
}

impl Cohort {
    /// Parses, validates and joins raw inputs in one step.
    pub fn ingest<R: BufRead>(
        frames: R,
        format: FrameFormat,
        traits: TraitTable,
    ) -> Result<(Cohort, ValidationReport, AssemblyReport)> {
        let records = parse_frame_log(frames, format)?;
        let mut validation = ValidationReport {
            records_read: records.len(),
            ..Default::default()
        };
        let mut streams = Vec::new();
        for ((pid, video), frames) in group_records(records) {
            let (stream, rep) = validate_and_normalize(&pid, video, frames);
            validation.push(rep);
            streams.push(stream);
        }
        let (cohort, assembly) = assemble_cohort(streams, traits)?;
        Ok((cohort, validation, assembly))
    }

    /// Participant ids in canonical (sorted) order.
    pub fn participants(&self) -> Vec<&str> {
        self.traits.participants().collect()
    }

    pub fn len(&self) -> usize {
        self.traits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traits.is_empty()
    }

    pub fn stream(&self, participant: &str, video: VideoId) -> Option<&EmotionStream> {
        self.streams.get(&(participant.to_string(), video))
    }

    /// Participants with this family present; every member has a stream.
    pub fn family_n(&self, family: TraitFamily) -> usize {
        self.traits
            .rows
            .values()
            .filter(|r| r.has_family(family))
            .count()
    }

    /// Flattens the streams back into frame records, in key then time order.
    pub fn frame_records(&self) -> impl Iterator<Item = FrameRecord> + '_ {
        self.streams.values().flat_map(|s| {
            s.frames.iter().map(move |f| FrameRecord {
                participant_id: s.participant_id.clone(),
                video_id: s.video_id,
                frame: f.clone(),
            })
        })
    }
}

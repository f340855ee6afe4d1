use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four survey instruments; a participant either completed one or not.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraitFamily {
    BigFive,
    Dospert,
    Schwartz,
    Haidt,
}

impl TraitFamily {
    pub const ALL: [TraitFamily; 4] = [
        TraitFamily::BigFive,
        TraitFamily::Dospert,
        TraitFamily::Schwartz,
        TraitFamily::Haidt,
    ];

    pub fn traits(self) -> impl Iterator<Item = TraitKind> {
        TraitKind::ALL.into_iter().filter(move |t| t.family() == self)
    }

    pub fn name(self) -> &'static str {
        match self {
            TraitFamily::BigFive => "Big Five",
            TraitFamily::Dospert => "DOSPERT",
            TraitFamily::Schwartz => "Schwartz",
            TraitFamily::Haidt => "Haidt",
        }
    }
}

impl fmt::Display for TraitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 22 personality, risk and moral trait scores.
#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraitKind {
    #[serde(rename = "agreeableness")]
    Agreeableness,
    #[serde(rename = "conscientiousness")]
    Conscientiousness,
    #[serde(rename = "neuroticism")]
    Neuroticism,
    #[serde(rename = "extraversion")]
    Extraversion,
    #[serde(rename = "openness")]
    Openness,
    ETH_L,
    ETH_P,
    FIN_L,
    FIN_P,
    HEA_L,
    HEA_P,
    SOC_L,
    SOC_P,
    REC_L,
    REC_P,
    #[serde(rename = "conservation")]
    Conservation,
    #[serde(rename = "transcendence")]
    Transcendence,
    #[serde(rename = "harm_care")]
    HarmCare,
    #[serde(rename = "fairness_reciprocity")]
    FairnessReciprocity,
    #[serde(rename = "ingroup_loyalty")]
    IngroupLoyalty,
    #[serde(rename = "authority_respect")]
    AuthorityRespect,
    #[serde(rename = "purity_sanctity")]
    PuritySanctity,
}

/// Reference marginal statistics of a trait: mean, SD, min, max.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

const fn stats(mean: f64, sd: f64, min: f64, max: f64) -> ReferenceStats {
    ReferenceStats { mean, sd, min, max }
}

impl TraitKind {
    pub const COUNT: usize = 22;

    pub const ALL: [TraitKind; 22] = [
        TraitKind::Agreeableness,
        TraitKind::Conscientiousness,
        TraitKind::Neuroticism,
        TraitKind::Extraversion,
        TraitKind::Openness,
        TraitKind::ETH_L,
        TraitKind::ETH_P,
        TraitKind::FIN_L,
        TraitKind::FIN_P,
        TraitKind::HEA_L,
        TraitKind::HEA_P,
        TraitKind::SOC_L,
        TraitKind::SOC_P,
        TraitKind::REC_L,
        TraitKind::REC_P,
        TraitKind::Conservation,
        TraitKind::Transcendence,
        TraitKind::HarmCare,
        TraitKind::FairnessReciprocity,
        TraitKind::IngroupLoyalty,
        TraitKind::AuthorityRespect,
        TraitKind::PuritySanctity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn family(self) -> TraitFamily {
        match self.index() {
            0..=4 => TraitFamily::BigFive,
            5..=14 => TraitFamily::Dospert,
            15..=16 => TraitFamily::Schwartz,
            _ => TraitFamily::Haidt,
        }
    }

    /// Column name in trait CSV files.
    pub fn key(self) -> &'static str {
        use TraitKind::*;
        match self {
            Agreeableness => "agreeableness",
            Conscientiousness => "conscientiousness",
            Neuroticism => "neuroticism",
            Extraversion => "extraversion",
            Openness => "openness",
            ETH_L => "ETH_L",
            ETH_P => "ETH_P",
            FIN_L => "FIN_L",
            FIN_P => "FIN_P",
            HEA_L => "HEA_L",
            HEA_P => "HEA_P",
            SOC_L => "SOC_L",
            SOC_P => "SOC_P",
            REC_L => "REC_L",
            REC_P => "REC_P",
            Conservation => "conservation",
            Transcendence => "transcendence",
            HarmCare => "harm_care",
            FairnessReciprocity => "fairness_reciprocity",
            IngroupLoyalty => "ingroup_loyalty",
            AuthorityRespect => "authority_respect",
            PuritySanctity => "purity_sanctity",
        }
    }

    /// Short display name as used in descriptive-statistics tables.
    pub fn display_name(self) -> &'static str {
        use TraitKind::*;
        match self {
            Agreeableness => "Agreeableness",
            Conscientiousness => "Conscientiousness",
            Neuroticism => "Neuroticism",
            Extraversion => "Extraversion",
            Openness => "Openness to experience",
            Conservation => "Conservation",
            Transcendence => "Transcendence",
            HarmCare => "Harm/care",
            FairnessReciprocity => "Fairness/reciprocity",
            IngroupLoyalty => "In-group loyalty",
            AuthorityRespect => "Authority/respect",
            PuritySanctity => "Purity/sanctity",
            other => other.key(),
        }
    }

    /// Spelled-out name used in accuracy tables ("Ethical likelihood").
    pub fn long_name(self) -> &'static str {
        use TraitKind::*;
        match self {
            ETH_L => "Ethical likelihood",
            ETH_P => "Ethical perceived",
            FIN_L => "Financial likelihood",
            FIN_P => "Financial perceived",
            HEA_L => "Health likelihood",
            HEA_P => "Health perceived",
            SOC_L => "Social likelihood",
            SOC_P => "Social perceived",
            REC_L => "Recreational likelihood",
            REC_P => "Recreational perceived",
            other => other.display_name(),
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.key() == key)
    }

    /// Published cohort statistics (mean, SD, min, max) for this trait.
    pub fn reference_stats(self) -> ReferenceStats {
        const TABLE: [ReferenceStats; 22] = [
            stats(0.64, 0.08, 0.47, 0.83),
            stats(0.69, 0.06, 0.52, 0.83),
            stats(0.54, 0.09, 0.33, 0.73),
            stats(0.67, 0.07, 0.50, 0.83),
            stats(0.61, 0.06, 0.48, 0.78),
            stats(2.56, 1.31, 1.50, 7.33),
            stats(4.55, 1.23, 1.83, 8.83),
            stats(3.25, 1.39, 1.00, 8.33),
            stats(4.72, 1.34, 1.0, 9.0),
            stats(3.33, 1.10, 1.17, 6.33),
            stats(4.81, 1.02, 1.50, 7.17),
            stats(5.58, 1.07, 3.50, 9.67),
            stats(2.72, 1.12, 1.17, 6.67),
            stats(4.19, 1.35, 1.50, 7.33),
            stats(3.99, 1.15, 1.83, 7.0),
            stats(0.77, 0.74, -0.62, 3.54),
            stats(-1.20, 0.70, -2.87, 0.70),
            stats(22.36, 3.93, 12.0, 29.0),
            stats(22.13, 4.08, 7.0, 30.0),
            stats(16.54, 4.30, 6.0, 25.0),
            stats(13.57, 4.45, 3.0, 22.0),
            stats(11.93, 4.68, 0.0, 20.0),
        ];
        TABLE[self.index()]
    }
}

impl fmt::Display for TraitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Accepted score range per instrument family, inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityRanges {
    pub big_five: (f64, f64),
    pub dospert: (f64, f64),
    pub schwartz: (f64, f64),
    pub haidt: (f64, f64),
}

impl Default for PlausibilityRanges {
    fn default() -> Self {
        PlausibilityRanges {
            big_five: (0.0, 1.0),
            dospert: (1.0, 10.0),
            schwartz: (-6.0, 6.0),
            haidt: (0.0, 30.0),
        }
    }
}

impl PlausibilityRanges {
    pub fn for_family(&self, family: TraitFamily) -> (f64, f64) {
        match family {
            TraitFamily::BigFive => self.big_five,
            TraitFamily::Dospert => self.dospert,
            TraitFamily::Schwartz => self.schwartz,
            TraitFamily::Haidt => self.haidt,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraitRow {
    pub scores: [Option<f64>; TraitKind::COUNT],
}

impl TraitRow {
    pub fn get(&self, t: TraitKind) -> Option<f64> {
        self.scores[t.index()]
    }

    pub fn set(&mut self, t: TraitKind, v: Option<f64>) {
        self.scores[t.index()] = v;
    }

    pub fn has_family(&self, family: TraitFamily) -> bool {
        family.traits().all(|t| self.get(t).is_some())
    }

    pub fn has_any_family(&self) -> bool {
        TraitFamily::ALL.iter().any(|f| self.has_family(*f))
    }
}

/// Trait scores keyed by participant id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraitTable {
    pub rows: BTreeMap<String, TraitRow>,
}

impl TraitTable {
    pub fn get(&self, participant: &str, t: TraitKind) -> Option<f64> {
        self.rows.get(participant).and_then(|r| r.get(t))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn participants(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    /// Checks family completeness and score ranges for every row.
    pub fn validate(&self, ranges: &PlausibilityRanges) -> Result<()> {
        for (i, (_, row)) in self.rows.iter().enumerate() {
            check_row(i + 2, row, ranges)?;
        }
        Ok(())
    }
}

fn check_row(line: usize, row: &TraitRow, ranges: &PlausibilityRanges) -> Result<()> {
    for family in TraitFamily::ALL {
        let present = family.traits().filter(|t| row.get(*t).is_some()).count();
        let total = family.traits().count();
        if present != 0 && present != total {
            return Err(Error::PartialFamily {
                family: family.name().to_string(),
                detail: format!("row {line} has {present} of {total} scores"),
            });
        }
        let (lo, hi) = ranges.for_family(family);
        for t in family.traits() {
            if let Some(v) = row.get(t) {
                if !v.is_finite() || v < lo || v > hi {
                    return Err(Error::TraitValue {
                        row: line,
                        column: t.key().to_string(),
                        reason: format!("score {v} outside plausible range [{lo}, {hi}]"),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Reads a trait CSV: a `participant_id` column plus any subset of the 22
/// trait columns. Empty cells are missing scores. Row numbers in errors are
/// file line numbers (the header is line 1).
pub fn load_trait_table<R: Read>(source: R, ranges: &PlausibilityRanges) -> Result<TraitTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers()?.clone();

    let mut pid_col = None;
    let mut cols: Vec<(usize, TraitKind)> = Vec::new();
    for (i, name) in header.iter().enumerate() {
        if name == "participant_id" {
            pid_col = Some(i);
        } else if let Some(t) = TraitKind::from_key(name) {
            if cols.iter().any(|(_, c)| *c == t) {
                return Err(Error::Parse {
                    line: 1,
                    reason: format!("duplicate column {name:?}"),
                });
            }
            cols.push((i, t));
        } else {
            return Err(Error::Parse {
                line: 1,
                reason: format!("unknown trait column {name:?}"),
            });
        }
    }
    let pid_col = pid_col.ok_or_else(|| Error::Parse {
        line: 1,
        reason: "missing participant_id column".into(),
    })?;
    for family in TraitFamily::ALL {
        let present = family
            .traits()
            .filter(|t| cols.iter().any(|(_, c)| c == t))
            .count();
        let total = family.traits().count();
        if present != 0 && present != total {
            let missing: Vec<&str> = family
                .traits()
                .filter(|t| !cols.iter().any(|(_, c)| c == t))
                .map(TraitKind::key)
                .collect();
            return Err(Error::PartialFamily {
                family: family.name().to_string(),
                detail: format!(
                    "header has {present} of {total} columns, missing {}",
                    missing.join(", ")
                ),
            });
        }
    }

    let mut table = TraitTable::default();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let pid = rec.get(pid_col).unwrap_or("").to_string();
        if pid.is_empty() {
            return Err(Error::TraitValue {
                row: line,
                column: "participant_id".into(),
                reason: "empty participant_id".into(),
            });
        }
        let mut row = TraitRow::default();
        for &(c, t) in &cols {
            let cell = rec.get(c).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::TraitValue {
                row: line,
                column: t.key().to_string(),
                reason: format!("{cell:?} is not a number"),
            })?;
            row.set(t, Some(v));
        }
        check_row(line, &row, ranges)?;
        if table.rows.insert(pid.clone(), row).is_some() {
            return Err(Error::DuplicateParticipant(pid));
        }
    }
    Ok(table)
}

/// Writes all 22 trait columns; missing scores become empty cells.
pub fn write_trait_table<W: Write>(sink: W, table: &TraitTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["participant_id"];
    header.extend(TraitKind::ALL.iter().map(|t| t.key()));
    w.write_record(&header)?;
    for (pid, row) in &table.rows {
        let mut rec = vec![pid.clone()];
        rec.extend(
            row.scores
                .iter()
                .map(|s| s.map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BIG5: &str = "agreeableness,conscientiousness,neuroticism,extraversion,openness";

    fn load(src: &str) -> Result<TraitTable> {
        load_trait_table(src.as_bytes(), &PlausibilityRanges::default())
    }

    #[test]
    fn taxonomy_shape() {
        assert_eq!(TraitKind::ALL.len(), 22);
        let counts: Vec<usize> = TraitFamily::ALL.iter().map(|f| f.traits().count()).collect();
        assert_eq!(counts, vec![5, 10, 2, 5]);
        for (i, t) in TraitKind::ALL.iter().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(TraitKind::from_key(t.key()), Some(*t));
            let s = t.reference_stats();
            assert!(s.min <= s.mean && s.mean <= s.max);
        }
        assert_eq!(TraitKind::REC_P.long_name(), "Recreational perceived");
        assert_eq!(TraitKind::HarmCare.display_name(), "Harm/care");
    }

    #[test]
    fn accepts_plausible_big_five() {
        let t = load(&format!("participant_id,{BIG5}\np1,0.64,0.69,0.54,0.67,0.61\n")).unwrap();
        assert_eq!(t.get("p1", TraitKind::Agreeableness), Some(0.64));
        assert!(t.rows["p1"].has_family(TraitFamily::BigFive));
        assert!(!t.rows["p1"].has_family(TraitFamily::Haidt));
    }

    #[test]
    fn rejects_out_of_range_with_location() {
        let err = load(&format!("participant_id,{BIG5}\np1,1.2,0.69,0.54,0.67,0.61\n")).unwrap_err();
        match err {
            Error::TraitValue { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "agreeableness");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_transcendence_is_plausible() {
        let t = load("participant_id,conservation,transcendence\np1,0.77,-1.20\n").unwrap();
        assert_eq!(t.get("p1", TraitKind::Transcendence), Some(-1.20));
    }

    #[test]
    fn partial_family_errors_name_family() {
        let err = load("participant_id,agreeableness,conscientiousness,neuroticism\np1,0.5,0.5,0.5\n")
            .unwrap_err();
        assert!(matches!(&err, Error::PartialFamily { family, .. } if family == "Big Five"), "{err}");

        let err = load(&format!("participant_id,{BIG5}\np1,0.5,0.5,,0.5,0.5\n")).unwrap_err();
        assert!(matches!(&err, Error::PartialFamily { family, .. } if family == "Big Five"), "{err}");
    }

    #[test]
    fn duplicate_participant() {
        let err = load("participant_id,conservation,transcendence\np1,0,0\np1,1,1\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateParticipant(p) if p == "p1"));
    }

    #[test]
    fn write_then_load_is_identity() {
        let src = format!("participant_id,{BIG5},conservation,transcendence\np1,0.64,0.69,0.54,0.67,0.61,,\np2,,,,,,0.5,-0.25\n");
        let t = load(&src).unwrap();
        let mut buf = Vec::new();
        write_trait_table(&mut buf, &t).unwrap();
        let back = load_trait_table(&buf[..], &PlausibilityRanges::default()).unwrap();
        assert_eq!(back, t);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOW: usize = 0;
pub const MEDIUM: usize = 1;
pub const HIGH: usize = 2;
pub const CLASS_NAMES: [&str; 3] = ["low", "medium", "high"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinningMethod {
    #[default]
    Tercile,
    EqualWidth,
}

/// Two cut points: `v ≤ e1` is low, `e1 < v ≤ e2` medium, `v > e2` high.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    pub e1: f64,
    pub e2: f64,
}

impl BinEdges {
    pub fn classify(&self, v: f64) -> usize {
        if v <= self.e1 {
            LOW
        } else if v <= self.e2 {
            MEDIUM
        } else {
            HIGH
        }
    }

    pub fn classify_all(&self, values: &[f64]) -> Vec<usize> {
        values.iter().map(|v| self.classify(*v)).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinFallback {
    #[default]
    None,
    EqualWidth,
    DistinctValues,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub labels: Vec<usize>,
    pub edges: BinEdges,
    pub fallback: BinFallback,
}

/// Sample quantile by linear interpolation between order statistics
/// (`h = (n − 1)q`). `sorted` must be ascending and nonempty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn equal_width_edges(min: f64, max: f64) -> BinEdges {
    let w = (max - min) / 3.0;
    BinEdges {
        e1: min + w,
        e2: min + 2.0 * w,
    }
}

fn sorted_finite(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn distinct(sorted: &[f64]) -> Vec<f64> {
    let mut d = sorted.to_vec();
    d.dedup();
    d
}

fn all_classes(edges: &BinEdges, values: &[f64]) -> bool {
    let mut seen = [false; 3];
    for v in values {
        seen[edges.classify(*v)] = true;
    }
    seen.iter().all(|s| *s)
}

/// Cut points taken from the distinct values themselves; always yields
/// three nonempty classes when there are at least three distinct values.
fn distinct_edges(d: &[f64]) -> BinEdges {
    let m = d.len();
    let i1 = m.div_ceil(3) - 1;
    let i2 = (2 * m).div_ceil(3) - 1;
    BinEdges { e1: d[i1], e2: d[i2.max(i1 + 1)] }
}

fn finish(scores: &[f64], sorted: &[f64], edges: BinEdges) -> Binning {
    if all_classes(&edges, sorted) {
        return Binning {
            labels: edges.classify_all(scores),
            edges,
            fallback: BinFallback::None,
        };
    }
    let ew = equal_width_edges(sorted[0], sorted[sorted.len() - 1]);
    if all_classes(&ew, sorted) {
        return Binning {
            labels: ew.classify_all(scores),
            edges: ew,
            fallback: BinFallback::EqualWidth,
        };
    }
    let de = distinct_edges(&distinct(sorted));
    Binning {
        labels: de.classify_all(scores),
        edges: de,
        fallback: BinFallback::DistinctValues,
    }
}

/// Low/medium/high classes at the empirical 1/3 and 2/3 quantiles.
///
/// Falls back to equal-width edges when mass ties leave a class empty,
/// and to cut points at the distinct values if that also fails.
pub fn bin_terciles(scores: &[f64]) -> Result<Binning> {
    let sorted = sorted_finite(scores)?;
    check_distinct(&sorted)?;
    let edges = BinEdges {
        e1: quantile(&sorted, 1.0 / 3.0),
        e2: quantile(&sorted, 2.0 / 3.0),
    };
    Ok(finish(scores, &sorted, edges))
}

/// Three equal-width bins over [min, max].
pub fn bin_equal_width(scores: &[f64]) -> Result<Binning> {
    let sorted = sorted_finite(scores)?;
    check_distinct(&sorted)?;
    let edges = equal_width_edges(sorted[0], sorted[sorted.len() - 1]);
    let mut b = finish(scores, &sorted, edges);
    if b.fallback == BinFallback::EqualWidth {
        b.fallback = BinFallback::None;
    }
    Ok(b)
}

pub fn bin_scores(scores: &[f64], method: BinningMethod) -> Result<Binning> {
    match method {
        BinningMethod::Tercile => bin_terciles(scores),
        BinningMethod::EqualWidth => bin_equal_width(scores),
    }
}

fn check_distinct(sorted: &[f64]) -> Result<()> {
    let m = distinct(sorted).len();
    if m < 3 {
        return Err(Error::insufficient(format!(
            "binning into three classes needs >= 3 distinct values, got {m}"
        )));
    }
    Ok(())
}

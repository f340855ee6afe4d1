use serde::{Deserialize, Serialize};

use super::{student_t_sf, Stars};
use crate::cohort::{TraitKind, TraitTable};
use crate::error::{Error, Result};
use crate::features::{FeatureKey, FeatureMatrix, FEATURE_COUNT};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub r: f64,
    pub p: f64,
    pub n: usize,
    pub stars: Stars,
}

/// Pearson correlation over pairwise-complete observations (NaN = missing),
/// with a two-sided t-test p-value on n − 2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationCell> {
    if x.len() != y.len() {
        return Err(Error::WidthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(a, b)| (*a, *b))
        .collect();
    let n = pairs.len();
    if n < 3 {
        return Err(Error::insufficient(format!("pearson needs n >= 3, got {n}")));
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    let mut r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    // rounding leaves exact linear relations a few ulps short of ±1
    if 1.0 - r.abs() < 8.0 * f64::EPSILON {
        r = r.signum();
    }
    let df = (n - 2) as u32;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * ((nf - 2.0) / (1.0 - r * r)).sqrt();
        student_t_sf(t, df)?
    };
    Ok(CorrelationCell {
        r,
        p,
        n,
        stars: Stars::correlation(p),
    })
}

/// Feature × trait grid of correlations; `None` where undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    /// Feature-major: `cells[f * 22 + t]`.
    pub cells: Vec<Option<CorrelationCell>>,
}

impl CorrelationTable {
    pub fn get(&self, feature: FeatureKey, t: TraitKind) -> Option<&CorrelationCell> {
        self.cells[feature.index() * TraitKind::COUNT + t.index()].as_ref()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.cells.len() / TraitKind::COUNT, TraitKind::COUNT)
    }
}

/// Correlates every feature column with every trait, pairwise deletion.
pub fn correlation_table(features: &FeatureMatrix, traits: &TraitTable) -> CorrelationTable {
    use rayon::prelude::*;
    let trait_cols: Vec<Vec<f64>> = TraitKind::ALL
        .iter()
        .map(|t| super::trait_column(features, traits, *t))
        .collect();
    let cells: Vec<Option<CorrelationCell>> = (0..FEATURE_COUNT)
        .into_par_iter()
        .flat_map_iter(|f| {
            let col = features.column(FeatureKey::from_index(f).expect("index < 105"));
            trait_cols
                .iter()
                .map(|y| pearson(&col, y).ok())
                .collect::<Vec<_>>()
        })
        .collect();
    CorrelationTable { cells }
}

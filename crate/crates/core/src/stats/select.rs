use serde::{Deserialize, Serialize};

use super::{ols_fit, vif, OlsFit, Stars};
use crate::cohort::{TraitKind, TraitTable};
use crate::error::{Error, Result};
use crate::features::{FeatureKey, FeatureMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    /// Largest VIF any term may have after an addition.
    pub vif_max: f64,
    /// Minimum adjusted-R² gain required to accept a step.
    pub epsilon: f64,
    /// Optional hard cap on the number of terms.
    #[serde(default)]
    pub max_terms: Option<usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            vif_max: 5.0,
            epsilon: 0.005,
            max_terms: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTerm {
    /// `None` for the intercept.
    pub feature: Option<FeatureKey>,
    pub coefficient: f64,
    pub std_error: f64,
    pub t: f64,
    pub p: f64,
    pub stars: Stars,
}

impl RegressionTerm {
    pub fn name(&self) -> String {
        self.feature.map(FeatureKey::name).unwrap_or_else(|| "Constant".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub feature: FeatureKey,
    pub adj_r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub dependent: TraitKind,
    pub intercept: RegressionTerm,
    pub terms: Vec<RegressionTerm>,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
    /// VIF per term, aligned with `terms`.
    pub vifs: Vec<f64>,
    pub steps: Vec<SelectionStep>,
}

impl RegressionModel {
    fn from_fit(
        dependent: TraitKind,
        keys: &[FeatureKey],
        fit: &OlsFit,
        vifs: Vec<f64>,
        steps: Vec<SelectionStep>,
    ) -> Self {
        let term = |j: usize, feature: Option<FeatureKey>| RegressionTerm {
            feature,
            coefficient: fit.coefficients[j],
            std_error: fit.std_errors[j],
            t: fit.t_values[j],
            p: fit.p_values[j],
            stars: Stars::regression(fit.p_values[j]),
        };
        RegressionModel {
            dependent,
            intercept: term(0, None),
            terms: keys.iter().enumerate().map(|(i, k)| term(i + 1, Some(*k))).collect(),
            r2: fit.r2,
            adj_r2: fit.adj_r2,
            n: fit.n,
            vifs,
            steps,
        }
    }

    fn intercept_only(dependent: TraitKind, y: &[f64]) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::insufficient("intercept-only model needs n >= 2"));
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let t = if se > 0.0 { mean / se } else { f64::INFINITY * mean.signum() };
        let p = if mean == 0.0 {
            1.0
        } else {
            super::student_t_sf(t, (n - 1) as u32)?
        };
        Ok(RegressionModel {
            dependent,
            intercept: RegressionTerm {
                feature: None,
                coefficient: mean,
                std_error: se,
                t,
                p,
                stars: Stars::regression(p),
            },
            terms: Vec::new(),
            r2: 0.0,
            adj_r2: 0.0,
            n,
            vifs: Vec::new(),
            steps: Vec::new(),
        })
    }

    pub fn features(&self) -> impl Iterator<Item = FeatureKey> + '_ {
        self.terms.iter().filter_map(|t| t.feature)
    }
}

/// Trait scores aligned with the feature matrix rows; NaN where missing.
pub fn trait_column(features: &FeatureMatrix, traits: &TraitTable, t: TraitKind) -> Vec<f64> {
    features
        .participants()
        .iter()
        .map(|p| traits.get(p, t).unwrap_or(f64::NAN))
        .collect()
}

/// Greedy forward selection on adjusted R² with a VIF screen.
///
/// Rows are those with `y` present and a complete feature row. At each step
/// the candidate giving the highest adjusted R² is added unless it pushes
/// any term's VIF above `vif_max`, in which case the next best is tried.
/// Selection stops once the best admissible gain falls below `epsilon`.
pub fn forward_select(
    features: &FeatureMatrix,
    y: &[f64],
    dependent: TraitKind,
    config: &SelectionConfig,
) -> Result<RegressionModel> {
    if y.len() != features.n_rows() {
        return Err(Error::WidthMismatch {
            expected: features.n_rows(),
            got: y.len(),
        });
    }
    let rows: Vec<usize> = (0..features.n_rows())
        .filter(|&i| !y[i].is_nan() && features.row_is_complete(i))
        .collect();
    let yv: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let columns: Vec<(FeatureKey, Vec<f64>)> = FeatureKey::all()
        .map(|k| (k, rows.iter().map(|&i| features.row(i)[k.index()]).collect::<Vec<f64>>()))
        .filter(|(_, c)| c.iter().any(|v| *v != c[0]))
        .collect();
    select_from_columns(&columns, &yv, dependent, config)
}

fn select_from_columns(
    columns: &[(FeatureKey, Vec<f64>)],
    y: &[f64],
    dependent: TraitKind,
    config: &SelectionConfig,
) -> Result<RegressionModel> {
    let n = y.len();
    let base = RegressionModel::intercept_only(dependent, y)?;
    let max_terms = config.max_terms.unwrap_or(usize::MAX).min(n.saturating_sub(3));

    let mut chosen: Vec<usize> = Vec::new();
    let mut current_adj = 0.0;
    let mut best_model: Option<(OlsFit, Vec<f64>)> = None;
    let mut steps = Vec::new();

    while chosen.len() < max_terms {
        let mut scored: Vec<(f64, usize, OlsFit)> = Vec::new();
        for (ci, _) in columns.iter().enumerate() {
            if chosen.contains(&ci) {
                continue;
            }
            let cols: Vec<&[f64]> = chosen
                .iter()
                .chain(std::iter::once(&ci))
                .map(|&i| columns[i].1.as_slice())
                .collect();
            match ols_fit(&cols, y) {
                Ok(fit) => scored.push((fit.adj_r2, ci, fit)),
                Err(Error::SingularDesign { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        // highest adjusted R² first, lower feature index on ties
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut accepted = None;
        for (adj, ci, fit) in scored {
            if adj - current_adj < config.epsilon {
                break;
            }
            let cols: Vec<&[f64]> = chosen
                .iter()
                .chain(std::iter::once(&ci))
                .map(|&i| columns[i].1.as_slice())
                .collect();
            let vifs = vif(&cols)?;
            if vifs.iter().all(|v| *v <= config.vif_max) {
                accepted = Some((adj, ci, fit, vifs));
                break;
            }
        }
        match accepted {
            Some((adj, ci, fit, vifs)) => {
                chosen.push(ci);
                current_adj = adj;
                steps.push(SelectionStep {
                    feature: columns[ci].0,
                    adj_r2: adj,
                });
                best_model = Some((fit, vifs));
            }
            None => break,
        }
    }

    match best_model {
        None => Ok(base),
        Some((fit, vifs)) => {
            let keys: Vec<FeatureKey> = chosen.iter().map(|&i| columns[i].0).collect();
            Ok(RegressionModel::from_fit(dependent, &keys, &fit, vifs, steps))
        }
    }
}

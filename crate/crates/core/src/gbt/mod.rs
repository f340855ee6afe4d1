//! Second-order gradient-boosted trees with a softmax multiclass objective.
//!
//! Splits are found by exact greedy search over presorted columns. Missing
//! values (NaN) follow a per-split default direction chosen during training.

mod io;
mod tree;

pub use io::{EnsembleDoc, NodeDoc};
pub use tree::{best_split, build_tree, leaf_weight, split_gain, Entry, Node, SortedColumns, SplitChoice, Tree};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

/// Hessians are floored here so saturated rows never produce a zero
/// denominator with λ = 0.
pub const MIN_HESSIAN: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub n_classes: usize,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            rounds: 200,
            learning_rate: 0.1,
            max_depth: 3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            n_classes: 3,
            seed: 0,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::invalid("rounds must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid(format!("learning_rate {} outside (0, 1]", self.learning_rate)));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth must be >= 1"));
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::invalid("lambda, gamma and min_child_weight must be >= 0"));
        }
        if self.n_classes < 2 {
            return Err(Error::invalid("n_classes must be >= 2"));
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Per-class gradient and hessian of the multiclass log-loss.
pub fn softmax_grad_hess(logits: &[f64], label: usize) -> Vec<(f64, f64)> {
    softmax(logits)
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let y = if k == label { 1.0 } else { 0.0 };
            (p - y, (p * (1.0 - p)).max(MIN_HESSIAN))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub params: BoostParams,
    pub n_features: usize,
    pub base_score: Vec<f64>,
    /// Round-major: `trees[round * n_classes + class]`.
    pub trees: Vec<Tree>,
}

/// Per-round training diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean log-loss after each round; entry 0 is the base score.
    pub loss: Vec<f64>,
    /// Largest |Σ_k g_k| over rows, per round.
    pub max_grad_sum: Vec<f64>,
}

fn check_labels(labels: &[usize], n_classes: usize) -> Result<()> {
    let mut seen = vec![false; n_classes];
    for &l in labels {
        if l >= n_classes {
            return Err(Error::invalid(format!("label {l} outside 0..{n_classes}")));
        }
        seen[l] = true;
    }
    if seen.iter().filter(|s| **s).count() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn mean_log_loss(logits: &[f64], labels: &[usize], k: usize) -> f64 {
    let n = labels.len();
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let z = &logits[i * k..(i + 1) * k];
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - z[l]
        })
        .sum();
    total / n as f64
}

pub fn train(x: &RowMatrix, labels: &[usize], params: &BoostParams) -> Result<Ensemble> {
    train_traced(x, labels, params).map(|(e, _)| e)
}

pub fn train_traced(x: &RowMatrix, labels: &[usize], params: &BoostParams) -> Result<(Ensemble, TrainTrace)> {
    params.validate()?;
    if x.n_rows() != labels.len() {
        return Err(Error::WidthMismatch {
            expected: x.n_rows(),
            got: labels.len(),
        });
    }
    check_labels(labels, params.n_classes)?;
    let n = labels.len();
    let k = params.n_classes;
    let base_score = vec![0.0; k];
    let mut logits: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
    let rows: Vec<usize> = (0..n).collect();
    let presorted = SortedColumns::new(x, &rows);

    let mut trace = TrainTrace {
        loss: vec![mean_log_loss(&logits, labels, k)],
        max_grad_sum: Vec::with_capacity(params.rounds),
    };
    let mut trees = Vec::with_capacity(params.rounds * k);
    let mut g = vec![vec![0.0; n]; k];
    let mut h = vec![vec![0.0; n]; k];
    for _ in 0..params.rounds {
        let mut worst = 0.0f64;
        for i in 0..n {
            let gh = softmax_grad_hess(&logits[i * k..(i + 1) * k], labels[i]);
            let mut s = 0.0;
            for (c, (gi, hi)) in gh.into_iter().enumerate() {
                g[c][i] = gi;
                h[c][i] = hi;
                s += gi;
            }
            worst = worst.max(s.abs());
        }
        trace.max_grad_sum.push(worst);
        for c in 0..k {
            let mut t = tree::grow(x, rows.clone(), presorted.clone(), &g[c], &h[c], params);
            t.scale_leaves(params.learning_rate);
            for i in 0..n {
                logits[i * k + c] += t.predict(x.row(i));
            }
            trees.push(t);
        }
        trace.loss.push(mean_log_loss(&logits, labels, k));
    }
    Ok((
        Ensemble {
            params: *params,
            n_features: x.n_cols(),
            base_score,
            trees,
        },
        trace,
    ))
}

impl Ensemble {
    pub fn n_classes(&self) -> usize {
        self.base_score.len()
    }

    pub fn rounds(&self) -> usize {
        self.trees.len() / self.n_classes()
    }

    /// Trees contributing to class `c`, in round order.
    pub fn class_trees(&self, c: usize) -> impl Iterator<Item = &Tree> {
        self.trees.iter().skip(c).step_by(self.n_classes())
    }

    fn check_width(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::WidthMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_margin(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_width(x)?;
        let k = self.n_classes();
        let mut z = self.base_score.clone();
        for (i, t) in self.trees.iter().enumerate() {
            z[i % k] += t.predict(x);
        }
        Ok(z)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict_margin(x).map(|z| softmax(&z))
    }

    /// Argmax of the class probabilities; lower class index on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let p = self.predict_margin(x)?;
        Ok(argmax(&p))
    }

    pub fn predict_rows(&self, x: &RowMatrix) -> Result<Vec<usize>> {
        x.rows().map(|r| self.predict(r)).collect()
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

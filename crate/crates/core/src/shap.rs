//! Path-dependent TreeSHAP for the boosted ensembles, with a subset
//! enumeration oracle over the same value function.
//!
//! A feature outside the coalition is marginalised by descending both
//! children of each split on it, weighted by the training cover.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureKey, FEATURE_COUNT};
use crate::gbt::{Ensemble, Node, Tree};
use crate::matrix::RowMatrix;

/// Largest number of distinct features `brute_force_shap` will enumerate.
pub const BRUTE_FORCE_MAX_FEATURES: usize = 15;

#[derive(Clone, Copy, Debug)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElem>, zero: f64, one: f64, feature: Option<usize>) {
    let d = path.len();
    path.push(PathElem {
        feature,
        zero,
        one,
        weight: if d == 0 { 1.0 } else { 0.0 },
    });
    let df = d as f64;
    for i in (0..d).rev() {
        path[i + 1].weight += one * path[i].weight * (i as f64 + 1.0) / (df + 1.0);
        path[i].weight = zero * path[i].weight * (df - i as f64) / (df + 1.0);
    }
}

fn unwind(path: &mut Vec<PathElem>, at: usize) {
    let d = path.len() - 1;
    let df = d as f64;
    let PathElem { zero, one, .. } = path[at];
    let mut next = path[d].weight;
    for i in (0..d).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * (df + 1.0) / ((i as f64 + 1.0) * one);
            next = tmp - path[i].weight * zero * (df - i as f64) / (df + 1.0);
        } else {
            path[i].weight = path[i].weight * (df + 1.0) / (zero * (df - i as f64));
        }
    }
    for i in at..d {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop();
}

fn unwound_sum(path: &[PathElem], at: usize) -> f64 {
    let d = path.len() - 1;
    let df = d as f64;
    let PathElem { zero, one, .. } = path[at];
    let mut next = path[d].weight;
    let mut total = 0.0;
    for i in (0..d).rev() {
        if one != 0.0 {
            let tmp = next * (df + 1.0) / ((i as f64 + 1.0) * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (df - i as f64) / (df + 1.0);
        } else if zero != 0.0 {
            total += path[i].weight / zero / ((df - i as f64) / (df + 1.0));
        }
    }
    total
}

fn recurse(
    tree: &Tree,
    node: usize,
    x: &[f64],
    phi: &mut [f64],
    mut path: Vec<PathElem>,
    zero: f64,
    one: f64,
    feature: Option<usize>,
) {
    extend(&mut path, zero, one, feature);
    match tree.nodes[node] {
        Node::Leaf { weight, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let e = path[i];
                phi[e.feature.expect("non-root path entries carry a feature")] += w * (e.one - e.zero) * weight;
            }
        }
        Node::Split {
            feature: split,
            left,
            right,
            cover,
            ..
        } => {
            let hot = tree.next(node, x).expect("split node");
            let cold = if hot == left { right } else { left };
            let (mut in_zero, mut in_one) = (1.0, 1.0);
            if let Some(k) = (1..path.len()).find(|&i| path[i].feature == Some(split)) {
                in_zero = path[k].zero;
                in_one = path[k].one;
                unwind(&mut path, k);
            }
            let hot_frac = tree.nodes[hot].cover() / cover;
            let cold_frac = tree.nodes[cold].cover() / cover;
            recurse(tree, hot, x, phi, path.clone(), hot_frac * in_zero, in_one, Some(split));
            recurse(tree, cold, x, phi, path, cold_frac * in_zero, 0.0, Some(split));
        }
    }
}

/// TreeSHAP attributions of one tree for input `x` (one value per feature).
pub fn tree_shap(tree: &Tree, x: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; x.len()];
    recurse(tree, 0, x, &mut phi, Vec::with_capacity(16), 1.0, 1.0, None);
    phi
}

/// Expected tree output when only the features in `known` are observed.
fn conditional_value(tree: &Tree, node: usize, x: &[f64], known: &dyn Fn(usize) -> bool) -> f64 {
    match tree.nodes[node] {
        Node::Leaf { weight, .. } => weight,
        Node::Split {
            feature,
            left,
            right,
            cover,
            ..
        } => {
            if known(feature) {
                conditional_value(tree, tree.next(node, x).expect("split node"), x, known)
            } else {
                let wl = tree.nodes[left].cover() / cover;
                let wr = tree.nodes[right].cover() / cover;
                wl * conditional_value(tree, left, x, known) + wr * conditional_value(tree, right, x, known)
            }
        }
    }
}

/// Exact Shapley values by enumerating every coalition of the tree's
/// features. Refuses trees with more than 15 distinct features.
pub fn brute_force_shap(tree: &Tree, x: &[f64]) -> Result<Vec<f64>> {
    let feats = tree.features();
    let m = feats.len();
    if m > BRUTE_FORCE_MAX_FEATURES {
        return Err(Error::invalid(format!(
            "tree uses {m} features; enumeration is limited to {BRUTE_FORCE_MAX_FEATURES}"
        )));
    }
    let values: Vec<f64> = (0..1usize << m)
        .map(|mask| {
            let known = |f: usize| feats.iter().position(|g| *g == f).is_some_and(|j| mask >> j & 1 == 1);
            conditional_value(tree, 0, x, &known)
        })
        .collect();
    // |S|! (m − |S| − 1)! / m!
    let fact: Vec<f64> = (0..=m).scan(1.0, |acc, i| {
        if i > 0 {
            *acc *= i as f64;
        }
        Some(*acc)
    }).collect();
    let mut phi = vec![0.0; x.len()];
    for (j, &f) in feats.iter().enumerate() {
        let bit = 1usize << j;
        let mut s = 0.0;
        for mask in 0..1usize << m {
            if mask & bit != 0 {
                continue;
            }
            let size = mask.count_ones() as usize;
            let w = fact[size] * fact[m - size - 1] / fact[m];
            s += w * (values[mask | bit] - values[mask]);
        }
        phi[f] = s;
    }
    Ok(phi)
}

/// Per-class attributions for one input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Expected margin per class.
    pub base: Vec<f64>,
    /// `values[class][feature]`.
    pub values: Vec<Vec<f64>>,
}

impl Attribution {
    pub fn margin(&self, class: usize) -> f64 {
        self.base[class] + self.values[class].iter().sum::<f64>()
    }
}

/// Base values: base score plus each tree's cover-weighted expectation.
pub fn expected_margin(ensemble: &Ensemble) -> Vec<f64> {
    let mut base = ensemble.base_score.clone();
    let k = ensemble.n_classes();
    for (i, t) in ensemble.trees.iter().enumerate() {
        base[i % k] += t.expected_value();
    }
    base
}

pub fn explain(ensemble: &Ensemble, x: &[f64]) -> Result<Attribution> {
    if x.len() != ensemble.n_features {
        return Err(Error::WidthMismatch {
            expected: ensemble.n_features,
            got: x.len(),
        });
    }
    let k = ensemble.n_classes();
    let mut values = vec![vec![0.0; x.len()]; k];
    for (i, t) in ensemble.trees.iter().enumerate() {
        if t.nodes.len() == 1 {
            continue;
        }
        for (v, p) in values[i % k].iter_mut().zip(tree_shap(t, x)) {
            *v += p;
        }
    }
    Ok(Attribution {
        base: expected_margin(ensemble),
        values,
    })
}

pub fn explain_rows(ensemble: &Ensemble, x: &RowMatrix) -> Result<Vec<Attribution>> {
    (0..x.n_rows()).into_par_iter().map(|i| explain(ensemble, x.row(i))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: usize,
    pub name: String,
    /// Mean over rows of Σ_class |φ|.
    pub mean_abs: f64,
    /// Correlation between the feature value and its attribution towards
    /// the last class (`high`); `None` when undefined.
    pub direction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceRanking {
    pub fn top(&self, k: usize) -> &[ImportanceEntry] {
        &self.entries[..k.min(self.entries.len())]
    }
}

pub fn feature_name(index: usize, width: usize) -> String {
    if width == FEATURE_COUNT {
        FeatureKey::from_index(index).map_or_else(|| format!("f{index}"), FeatureKey::name)
    } else {
        format!("f{index}")
    }
}

fn direction(xs: &[f64], phis: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = xs.iter().zip(phis).filter(|(a, _)| !a.is_nan()).map(|(a, b)| (*a, *b)).collect();
    crate::stats::pearson(
        &pairs.iter().map(|p| p.0).collect::<Vec<_>>(),
        &pairs.iter().map(|p| p.1).collect::<Vec<_>>(),
    )
    .ok()
    .map(|c| c.r)
}

/// Ranks features by mean class-summed |SHAP| over the rows of `x`;
/// ties keep the canonical feature order.
pub fn rank_importance(ensemble: &Ensemble, x: &RowMatrix) -> Result<ImportanceRanking> {
    if x.n_rows() == 0 {
        return Err(Error::insufficient("importance ranking needs at least one row"));
    }
    let attr = explain_rows(ensemble, x)?;
    Ok(rank_attributions(&attr, x))
}

pub fn rank_attributions(attr: &[Attribution], x: &RowMatrix) -> ImportanceRanking {
    let width = x.n_cols();
    let n = attr.len() as f64;
    let last = attr.first().map_or(0, |a| a.values.len() - 1);
    let mut entries: Vec<ImportanceEntry> = (0..width)
        .map(|f| {
            let mean_abs = attr
                .iter()
                .map(|a| a.values.iter().map(|c| c[f].abs()).sum::<f64>())
                .sum::<f64>()
                / n;
            let dir = if mean_abs > 0.0 {
                let xs: Vec<f64> = (0..x.n_rows()).map(|i| x.get(i, f)).collect();
                let ph: Vec<f64> = attr.iter().map(|a| a.values[last][f]).collect();
                direction(&xs, &ph)
            } else {
                None
            };
            ImportanceEntry {
                feature: f,
                name: feature_name(f, width),
                mean_abs,
                direction: dir,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.mean_abs.total_cmp(&a.mean_abs).then(a.feature.cmp(&b.feature)));
    ImportanceRanking { entries }
}

/// Long-format attribution table. Features no tree splits on are exactly
/// zero for every row and are omitted.
pub fn write_attribution_csv<W: Write>(sink: W, ensemble: &Ensemble, attr: &[Attribution]) -> Result<()> {
    let mut used = vec![false; ensemble.n_features];
    for t in &ensemble.trees {
        for f in t.features() {
            used[f] = true;
        }
    }
    let class_names = crate::eval::CLASS_NAMES;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["row", "feature", "class", "value"])?;
    for (r, a) in attr.iter().enumerate() {
        for (c, vals) in a.values.iter().enumerate() {
            let cname = class_names.get(c).map_or_else(|| c.to_string(), |s| s.to_string());
            for (f, v) in vals.iter().enumerate() {
                if used[f] {
                    w.write_record([r.to_string(), feature_name(f, ensemble.n_features), cname.clone(), v.to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::{train, BoostParams};

    fn stump(feature: usize, t: f64, lw: f64, rw: f64, lc: f64, rc: f64) -> Tree {
        Tree {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold: t,
                    left: 1,
                    right: 2,
                    default_left: false,
                    gain: 1.0,
                    cover: lc + rc,
                },
                Node::Leaf { weight: lw, cover: lc },
                Node::Leaf { weight: rw, cover: rc },
            ],
        }
    }

    #[test]
    fn stump_mass_on_its_feature() {
        let t = stump(1, 0.5, -1.0, 2.0, 3.0, 1.0);
        let x = [9.0, 0.2, 9.0];
        let phi = tree_shap(&t, &x);
        // expected value = (-3 + 2) / 4
        assert!((phi[1] - (-1.0 + 0.25)).abs() < 1e-15);
        assert_eq!(phi[0], 0.0);
        assert_eq!(phi[2], 0.0);
        let bf = brute_force_shap(&t, &x).unwrap();
        assert!((bf[1] - phi[1]).abs() < 1e-15);
    }

    #[test]
    fn local_accuracy_on_trained_model() {
        let v: Vec<f64> = (0..90).map(|i| ((i * 31) % 17) as f64 + if i % 13 == 0 { f64::NAN } else { 0.0 }).collect();
        let x = RowMatrix::from_values(3, v);
        let y: Vec<usize> = (0..30).map(|i| (i * 7) % 3).collect();
        let e = train(&x, &y, &BoostParams { rounds: 10, min_child_weight: 0.0, ..Default::default() }).unwrap();
        for i in 0..30 {
            let a = explain(&e, x.row(i)).unwrap();
            let m = e.predict_margin(x.row(i)).unwrap();
            for c in 0..3 {
                assert!((a.margin(c) - m[c]).abs() < 1e-9);
            }
        }
        let r = rank_importance(&e, &x).unwrap();
        for w in r.entries.windows(2) {
            assert!(w[0].mean_abs >= w[1].mean_abs);
        }
    }

    #[test]
    fn repeated_feature_matches_oracle() {
        // feature 0 splits twice on one path
        let t = Tree {
            nodes: vec![
                Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2, default_left: false, gain: 1.0, cover: 10.0 },
                Node::Split { feature: 1, threshold: 0.5, left: 3, right: 4, default_left: true, gain: 1.0, cover: 6.0 },
                Node::Leaf { weight: 3.0, cover: 4.0 },
                Node::Split { feature: 0, threshold: 0.2, left: 5, right: 6, default_left: false, gain: 1.0, cover: 4.0 },
                Node::Leaf { weight: -1.0, cover: 2.0 },
                Node::Leaf { weight: 0.5, cover: 1.0 },
                Node::Leaf { weight: 2.0, cover: 3.0 },
            ],
        };
        for x in [[0.1, 0.1], [0.3, 0.1], [0.3, f64::NAN], [0.9, 0.9]] {
            let a = tree_shap(&t, &x);
            let b = brute_force_shap(&t, &x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-12, "{a:?} vs {b:?}");
            }
            let total: f64 = a.iter().sum();
            assert!((total - (t.predict(&x) - t.expected_value())).abs() < 1e-12);
        }
    }
}

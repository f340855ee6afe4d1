use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// k disjoint folds of row positions, stratified by label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
    /// Requested k when it had to be reduced for a small class.
    pub requested_k: usize,
}

impl FoldPlan {
    /// Positions outside fold `f`, ascending.
    pub fn training(&self, f: usize) -> Vec<usize> {
        let mut t: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != f)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        t.sort_unstable();
        t
    }
}

fn class_members(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); k];
    for (i, l) in labels.iter().enumerate() {
        members[*l].push(i);
    }
    members
}

/// Shuffles each class with `seed`, then deals rows round-robin into `k`
/// folds. The dealing position carries over from one class to the next so
/// fold sizes stay within one of each other.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid("k must be >= 2"));
    }
    let members = class_members(labels);
    let smallest = members.iter().map(Vec::len).filter(|n| *n > 0).min().unwrap_or(0);
    if labels.len() < 2 {
        return Err(Error::insufficient("need at least 2 rows to fold"));
    }
    let mut k_eff = k;
    if smallest < k {
        k_eff = smallest.max(2).min(labels.len());
        warn!("smallest class has {smallest} rows; using {k_eff} folds instead of {k}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k_eff];
    let mut pos = 0;
    for mut m in members {
        m.shuffle(&mut rng);
        for i in m {
            folds[pos % k_eff].push(i);
            pos += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan {
        k: k_eff,
        folds,
        seed,
        requested_k: k,
    })
}

/// Stratified holdout split: about `fraction` of each class (at least one
/// row from every class with two or more rows). Returns (train, holdout)
/// positions, each ascending.
pub fn stratified_holdout(labels: &[usize], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("holdout fraction {fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut hold) = (Vec::new(), Vec::new());
    for mut m in class_members(labels) {
        if m.is_empty() {
            continue;
        }
        m.shuffle(&mut rng);
        let take = if m.len() < 2 {
            0
        } else {
            ((m.len() as f64 * fraction).round() as usize).clamp(1, m.len() - 1)
        };
        hold.extend_from_slice(&m[..take]);
        train.extend_from_slice(&m[take..]);
    }
    train.sort_unstable();
    hold.sort_unstable();
    Ok((train, hold))
}

//! Minority oversampling: SMOTE and ADASYN.
//!
//! Synthetic rows are interpolated between a minority row and one of its
//! nearest minority neighbours. Missing values (NaN) are skipped when
//! measuring distance, and a synthetic cell inherits the base row's value
//! wherever either endpoint is missing.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleStrategy {
    None,
    #[default]
    Smote,
    Adasyn,
    /// Try SMOTE and ADASYN, keep whichever validates better.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResamplePlan {
    pub strategy: ResampleStrategy,
    pub k_neighbors: usize,
}

impl Default for ResamplePlan {
    fn default() -> Self {
        ResamplePlan {
            strategy: ResampleStrategy::Smote,
            k_neighbors: 5,
        }
    }
}

/// Euclidean distance over the coordinates present in both rows, rescaled
/// to full width.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut used = 0usize;
    for (x, y) in a.iter().zip(b) {
        if x.is_nan() || y.is_nan() {
            continue;
        }
        sum += (x - y) * (x - y);
        used += 1;
    }
    if used == 0 {
        return f64::INFINITY;
    }
    if used == a.len() {
        sum.sqrt()
    } else {
        (sum * a.len() as f64 / used as f64).sqrt()
    }
}

/// The `k` rows nearest to `query`, excluding itself; ties go to the lower index.
pub fn knn(points: &RowMatrix, query: usize, k: usize) -> Result<Vec<usize>> {
    let n = points.n_rows();
    if k == 0 {
        return Err(Error::invalid("knn requires k >= 1"));
    }
    if n < k + 1 {
        return Err(Error::insufficient(format!("knn with k = {k} needs at least {} points, got {n}", k + 1)));
    }
    let q = points.row(query);
    let mut d: Vec<(f64, usize)> = (0..n)
        .filter(|&i| i != query)
        .map(|i| (distance(q, points.row(i)), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(d.into_iter().take(k).map(|(_, i)| i).collect())
}

/// One interpolated row and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticPoint {
    pub values: Vec<f64>,
    /// Row index of the base point (in the input given to the generator).
    pub base: usize,
    pub neighbor: usize,
    /// Interpolation fraction in [0, 1).
    pub gap: f64,
}

pub fn interpolate(base: &[f64], neighbor: &[f64], gap: f64) -> Vec<f64> {
    base.iter()
        .zip(neighbor)
        .map(|(a, b)| if a.is_nan() || b.is_nan() { *a } else { a + gap * (b - a) })
        .collect()
}

fn neighbor_lists(minority: &RowMatrix, k: usize) -> Result<Vec<Vec<usize>>> {
    (0..minority.n_rows()).map(|i| knn(minority, i, k)).collect()
}

fn draw_from<R: Rng + ?Sized>(
    minority: &RowMatrix,
    neighbors: &[Vec<usize>],
    base: usize,
    rng: &mut R,
) -> SyntheticPoint {
    let nb = &neighbors[base];
    let neighbor = nb[rng.random_range(0..nb.len())];
    let gap: f64 = rng.random();
    SyntheticPoint {
        values: interpolate(minority.row(base), minority.row(neighbor), gap),
        base,
        neighbor,
        gap,
    }
}

/// Generates `n_synthetic` SMOTE points from a minority sample.
///
/// Base points are drawn uniformly; each is paired with one of its `k`
/// nearest minority neighbours, also uniformly.
pub fn smote<R: Rng + ?Sized>(
    minority: &RowMatrix,
    n_synthetic: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<SyntheticPoint>> {
    let m = minority.n_rows();
    if m < 2 {
        return Err(Error::insufficient(format!("SMOTE needs at least 2 minority rows, got {m}")));
    }
    if k == 0 || k >= m {
        return Err(Error::invalid(format!("SMOTE k = {k} must satisfy 1 <= k < {m}")));
    }
    let neighbors = neighbor_lists(minority, k)?;
    Ok((0..n_synthetic)
        .map(|_| {
            let base = rng.random_range(0..m);
            draw_from(minority, &neighbors, base, rng)
        })
        .collect())
}

/// Per-point ADASYN allocation for one minority class.
#[derive(Clone, Debug, PartialEq)]
pub struct AdasynAllocation {
    /// Row indices (into the full data) of the minority points.
    pub minority_rows: Vec<usize>,
    /// Normalised difficulty ratios r̂ᵢ; empty when every ratio was 0.
    pub weights: Vec<f64>,
    /// Synthetic count per minority point.
    pub counts: Vec<usize>,
    /// Target total G = majority count − minority count.
    pub target: usize,
}

/// Computes ADASYN's density-driven allocation.
pub fn adasyn_allocation(
    x: &RowMatrix,
    labels: &[usize],
    minority_class: usize,
    k: usize,
) -> Result<AdasynAllocation> {
    let n = x.n_rows();
    if labels.len() != n {
        return Err(Error::WidthMismatch { expected: n, got: labels.len() });
    }
    let minority_rows: Vec<usize> = (0..n).filter(|&i| labels[i] == minority_class).collect();
    if minority_rows.is_empty() {
        return Err(Error::insufficient("ADASYN minority class is empty"));
    }
    let mut counts_by_class = std::collections::BTreeMap::new();
    for l in labels {
        *counts_by_class.entry(*l).or_insert(0usize) += 1;
    }
    let majority = counts_by_class.values().copied().max().unwrap_or(0);
    let target = majority - minority_rows.len();

    let ratios: Vec<f64> = minority_rows
        .iter()
        .map(|&i| {
            let nb = knn(x, i, k)?;
            let foreign = nb.iter().filter(|&&j| labels[j] != minority_class).count();
            Ok(foreign as f64 / k as f64)
        })
        .collect::<Result<_>>()?;
    let total: f64 = ratios.iter().sum();
    if total == 0.0 {
        // no minority point borders another class: uniform allocation
        let m = minority_rows.len();
        let counts = (0..m).map(|i| target / m + usize::from(i < target % m)).collect();
        return Ok(AdasynAllocation {
            minority_rows,
            weights: Vec::new(),
            counts,
            target,
        });
    }
    let weights: Vec<f64> = ratios.iter().map(|r| r / total).collect();
    let counts = weights.iter().map(|w| (w * target as f64).round() as usize).collect();
    Ok(AdasynAllocation {
        minority_rows,
        weights,
        counts,
        target,
    })
}

/// ADASYN: like SMOTE, but minority points surrounded by other classes
/// seed proportionally more synthetics. `base`/`neighbor` in the output
/// index rows of `x`. The total may differ from G by rounding.
pub fn adasyn<R: Rng + ?Sized>(
    x: &RowMatrix,
    labels: &[usize],
    minority_class: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<SyntheticPoint>> {
    let alloc = adasyn_allocation(x, labels, minority_class, k)?;
    let m = alloc.minority_rows.len();
    if m < 2 {
        return Err(Error::insufficient(format!("ADASYN needs at least 2 minority rows, got {m}")));
    }
    let local_k = k.min(m - 1);
    let minority = x.select(&alloc.minority_rows);
    if alloc.weights.is_empty() {
        let mut pts = smote(&minority, alloc.target, local_k, rng)?;
        remap(&mut pts, &alloc.minority_rows);
        return Ok(pts);
    }
    let neighbors = neighbor_lists(&minority, local_k)?;
    let mut out = Vec::new();
    for (i, &g) in alloc.counts.iter().enumerate() {
        for _ in 0..g {
            out.push(draw_from(&minority, &neighbors, i, rng));
        }
    }
    remap(&mut out, &alloc.minority_rows);
    Ok(out)
}

fn remap(points: &mut [SyntheticPoint], rows: &[usize]) {
    for p in points {
        p.base = rows[p.base];
        p.neighbor = rows[p.neighbor];
    }
}

/// Training data after oversampling. Original rows come first, unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct Balanced {
    pub features: RowMatrix,
    pub labels: Vec<usize>,
    pub synthetic: Vec<bool>,
    /// (base, neighbor) row indices into the input for each synthetic row.
    pub parents: Vec<Option<(usize, usize)>>,
}

impl Balanced {
    pub fn n_synthetic(&self) -> usize {
        self.synthetic.iter().filter(|s| **s).count()
    }

    pub fn class_counts(&self, n_classes: usize) -> Vec<usize> {
        let mut c = vec![0; n_classes];
        for l in &self.labels {
            c[*l] += 1;
        }
        c
    }
}

/// Oversamples every class up to the majority count.
///
/// `k` is reduced to `class size − 1` (with a warning) for tiny classes; a
/// class with a single row is padded with copies of that row.
pub fn balance<R: Rng + ?Sized>(
    features: &RowMatrix,
    labels: &[usize],
    plan: &ResamplePlan,
    rng: &mut R,
) -> Result<Balanced> {
    let n = features.n_rows();
    if labels.len() != n {
        return Err(Error::WidthMismatch { expected: n, got: labels.len() });
    }
    if plan.k_neighbors == 0 {
        return Err(Error::invalid("k_neighbors must be >= 1"));
    }
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_classes];
    for l in labels {
        counts[*l] += 1;
    }
    if counts.iter().filter(|c| **c > 0).count() < 2 {
        return Err(Error::SingleClass);
    }

    let mut out = Balanced {
        features: features.clone(),
        labels: labels.to_vec(),
        synthetic: vec![false; n],
        parents: vec![None; n],
    };
    if plan.strategy == ResampleStrategy::None {
        return Ok(out);
    }
    if plan.strategy == ResampleStrategy::Auto {
        return Err(Error::invalid("resample strategy auto must be resolved before balancing"));
    }

    let majority = counts.iter().copied().max().unwrap_or(0);
    for (class, &count) in counts.iter().enumerate() {
        if count == 0 || count == majority {
            continue;
        }
        let need = majority - count;
        let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        let mut pts = if count == 1 {
            warn!("class {class} has a single row; padding with copies");
            (0..need)
                .map(|_| SyntheticPoint {
                    values: features.row(rows[0]).to_vec(),
                    base: rows[0],
                    neighbor: rows[0],
                    gap: 0.0,
                })
                .collect()
        } else {
            let k = if plan.k_neighbors >= count {
                warn!("class {class} has {count} rows; reducing k from {} to {}", plan.k_neighbors, count - 1);
                count - 1
            } else {
                plan.k_neighbors
            };
            match plan.strategy {
                ResampleStrategy::Smote => {
                    let minority = features.select(&rows);
                    let mut pts = smote(&minority, need, k, rng)?;
                    remap(&mut pts, &rows);
                    pts
                }
                _ => {
                    let k_full = plan.k_neighbors.min(n - 1);
                    let mut pts = adasyn(features, labels, class, k_full, rng)?;
                    // exact balance: trim or top up with plain SMOTE draws
                    pts.truncate(need);
                    if pts.len() < need {
                        let minority = features.select(&rows);
                        let mut extra = smote(&minority, need - pts.len(), k, rng)?;
                        remap(&mut extra, &rows);
                        pts.extend(extra);
                    }
                    pts
                }
            }
        };
        for p in pts.drain(..) {
            out.features.push_row(&p.values);
            out.labels.push(class);
            out.synthetic.push(true);
            out.parents.push(Some((p.base, p.neighbor)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64]) -> RowMatrix {
        RowMatrix::from_values(1, points.to_vec())
    }

    #[test]
    fn knn_on_a_line() {
        let m = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(knn(&m, 0, 2).unwrap(), vec![1, 2]);
        let same = line(&[3.0; 5]);
        assert_eq!(knn(&same, 2, 3).unwrap(), vec![0, 1, 3]);
        assert!(knn(&m, 0, 4).is_err());
    }

    #[test]
    fn interpolation_endpoints() {
        assert_eq!(interpolate(&[0.0, 0.0], &[1.0, 1.0], 0.5), vec![0.5, 0.5]);
        assert_eq!(interpolate(&[0.3, 0.7], &[1.0, 1.0], 0.0), vec![0.3, 0.7]);
        let v = interpolate(&[0.0, f64::NAN], &[1.0, 1.0], 0.5);
        assert_eq!(v[0], 0.5);
        assert!(v[1].is_nan());
    }

    #[test]
    fn smote_two_points_stay_on_segment() {
        let m = RowMatrix::from_values(2, vec![0.0, 0.0, 2.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = smote(&m, 1000, 1, &mut rng).unwrap();
        assert_eq!(pts.len(), 1000);
        let mut mean_t = 0.0;
        for p in &pts {
            // parametrise along the segment from (0,0) to (2,1)
            let t = p.values[0] / 2.0;
            assert!((p.values[1] - t).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&t));
            mean_t += p.gap;
        }
        mean_t /= 1000.0;
        assert!((mean_t - 0.5).abs() < 0.05, "{mean_t}");
        assert!(smote(&line(&[1.0]), 3, 1, &mut rng).is_err());
    }

    #[test]
    fn adasyn_allocation_rules() {
        // minority {0, 1}: point 0 touches the majority, point 1's nearest is point 0
        let x = line(&[0.0, 0.5, -0.1, -0.2, -0.3, -0.4]);
        let labels = [1, 1, 0, 0, 0, 0];
        let a = adasyn_allocation(&x, &labels, 1, 1).unwrap();
        assert_eq!(a.target, 2);
        assert_eq!(a.weights, vec![1.0, 0.0]);
        assert_eq!(a.counts, vec![2, 0]);

        // isolated minority cluster: every ratio is 0, uniform fallback
        let x = line(&[0.0, 0.1, 0.2, 100.0, 100.1, 100.2, 100.3, 100.4]);
        let labels = [1, 1, 1, 0, 0, 0, 0, 0];
        let a = adasyn_allocation(&x, &labels, 1, 2).unwrap();
        assert!(a.weights.is_empty());
        assert_eq!(a.counts.iter().sum::<usize>(), 2);
    }

    #[test]
    fn balance_targets_and_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mk = |counts: &[usize]| {
            let mut labels = Vec::new();
            let mut vals = Vec::new();
            for (c, &k) in counts.iter().enumerate() {
                for i in 0..k {
                    labels.push(c);
                    vals.push(c as f64 * 10.0 + i as f64 * 0.1);
                    vals.push(i as f64);
                }
            }
            (RowMatrix::from_values(2, vals), labels)
        };
        let (x, y) = mk(&[30, 30, 30]);
        let b = balance(&x, &y, &ResamplePlan::default(), &mut rng).unwrap();
        assert_eq!(b.n_synthetic(), 0);
        assert_eq!(b.features, x);

        for strategy in [ResampleStrategy::Smote, ResampleStrategy::Adasyn] {
            let (x, y) = mk(&[10, 30, 20]);
            let plan = ResamplePlan { strategy, k_neighbors: 5 };
            let b = balance(&x, &y, &plan, &mut rng).unwrap();
            assert_eq!(b.class_counts(3), vec![30, 30, 30]);
            for i in 0..x.n_rows() {
                assert_eq!(b.features.row(i), x.row(i));
                assert!(!b.synthetic[i]);
            }
        }
        let (x, _) = mk(&[4, 4]);
        assert!(matches!(balance(&x, &[0; 8], &ResamplePlan::default(), &mut rng), Err(Error::SingleClass)));
    }

    #[test]
    fn balance_is_seed_deterministic() {
        let vals: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let x = RowMatrix::from_values(2, vals);
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 5)).collect();
        let plan = ResamplePlan::default();
        let a = balance(&x, &y, &plan, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = balance(&x, &y, &plan, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }
}

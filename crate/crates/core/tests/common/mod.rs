//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use emotrait::gbt::{Node, Tree};
use rand::Rng;

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
        }
        b[col] /= d;
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                    }
                    b[i] -= f * b[col];
                }
            }
        }
    }
    Some(b)
}

pub fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
        cols.push(solve(a.to_vec(), e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

pub struct OlsOracle {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
}

/// OLS with intercept via the normal equations XᵀX β = Xᵀy.
pub fn ols_normal_equations(columns: &[&[f64]], y: &[f64]) -> Option<OlsOracle> {
    let n = y.len();
    let p = columns.len() + 1;
    let row = |i: usize| -> Vec<f64> {
        let mut r = vec![1.0];
        r.extend(columns.iter().map(|c| c[i]));
        r
    };
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let r = row(i);
        for a in 0..p {
            xty[a] += r[a] * y[i];
            for b in 0..p {
                xtx[a][b] += r[a] * r[b];
            }
        }
    }
    let inv = invert(&xtx)?;
    let beta: Vec<f64> = (0..p).map(|a| (0..p).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for i in 0..n {
        let fit: f64 = row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
        sse += (y[i] - fit).powi(2);
        sst += (y[i] - mean).powi(2);
    }
    let df = (n - p) as f64;
    let s2 = sse / df;
    let r2 = 1.0 - sse / sst;
    Some(OlsOracle {
        std_errors: (0..p).map(|a| (s2 * inv[a][a]).sqrt()).collect(),
        coefficients: beta,
        r2,
        adj_r2: 1.0 - (1.0 - r2) * (n as f64 - 1.0) / df,
    })
}

/// VIF_j = 1 / (1 − R²_j) from the auxiliary regression of column j on
/// the others.
pub fn vif_brute(columns: &[&[f64]]) -> Vec<f64> {
    (0..columns.len())
        .map(|j| {
            let others: Vec<&[f64]> = columns
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, c)| *c)
                .collect();
            let r2 = if others.is_empty() {
                0.0
            } else {
                ols_normal_equations(&others, columns[j]).expect("full rank").r2
            };
            1.0 / (1.0 - r2)
        })
        .collect()
}

/// Raw-sum form of Pearson's r.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Γ(k / 2) for integer k ≥ 1, by the recursion from Γ(1/2) and Γ(1).
pub fn gamma_half(k: u32) -> f64 {
    let mut g = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    while x < k as f64 / 2.0 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

fn t_density(x: f64, df: u32) -> f64 {
    let nu = df as f64;
    let c = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Two-sided tail P(|T| ≥ |t|) by adaptive Simpson integration of the
/// density over [0, |t|].
pub fn t_two_sided_oracle(t: f64, df: u32) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        return 1.0;
    }
    let f = |x: f64| t_density(x, df);
    let (fa, fm, fb) = (f(0.0), f(a / 2.0), f(a));
    let whole = a / 6.0 * (fa + 4.0 * fm + fb);
    let body = simpson(&f, 0.0, a, fa, fm, fb, whole, 1e-14, 50);
    2.0 * (0.5 - body)
}

/// Random tree over `n_features` features with consistent covers.
pub fn random_tree<R: Rng>(rng: &mut R, n_features: usize, max_depth: usize) -> Tree {
    fn node<R: Rng>(rng: &mut R, nodes: &mut Vec<Node>, nf: usize, depth: usize) -> (usize, f64) {
        let idx = nodes.len();
        nodes.push(Node::Leaf { weight: 0.0, cover: 0.0 });
        if depth == 0 || (depth < 4 && rng.random_bool(0.25)) {
            let cover = rng.random_range(0.5..20.0);
            nodes[idx] = Node::Leaf {
                weight: rng.random_range(-2.0..2.0),
                cover,
            };
            return (idx, cover);
        }
        let feature = rng.random_range(0..nf);
        let threshold = rng.random_range(-1.0..1.0);
        let default_left = rng.random_bool(0.5);
        let (left, cl) = node(rng, nodes, nf, depth - 1);
        let (right, cr) = node(rng, nodes, nf, depth - 1);
        nodes[idx] = Node::Split {
            feature,
            threshold,
            left,
            right,
            default_left,
            gain: 1.0,
            cover: cl + cr,
        };
        (idx, cl + cr)
    }
    let mut nodes = Vec::new();
    node(rng, &mut nodes, n_features, max_depth);
    Tree { nodes }
}

/// Random input in [−1.2, 1.2], with occasional missing values.
pub fn random_input<R: Rng>(rng: &mut R, n_features: usize) -> Vec<f64> {
    (0..n_features)
        .map(|_| {
            if rng.random_bool(0.1) {
                f64::NAN
            } else {
                rng.random_range(-1.2..1.2)
            }
        })
        .collect()
}

pub fn normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

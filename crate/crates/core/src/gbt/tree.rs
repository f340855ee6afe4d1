use serde::{Deserialize, Serialize};

use super::BoostParams;
use crate::matrix::RowMatrix;

/// A node of a regression tree. Rows with `x[feature] < threshold` go
/// left; missing values follow `default_left`. `cover` is the hessian
/// sum of the training rows that reached the node.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        default_left: bool,
        gain: f64,
        cover: f64,
    },
    Leaf {
        weight: f64,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }
}

/// Flat tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(weight: f64, cover: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { weight, cover }],
        }
    }

    /// Child a row descends to from split node `node`.
    pub fn next(&self, node: usize, x: &[f64]) -> Option<usize> {
        match &self.nodes[node] {
            Node::Leaf { .. } => None,
            Node::Split {
                feature,
                threshold,
                left,
                right,
                default_left,
                ..
            } => {
                let v = x[*feature];
                let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                Some(if go_left { *left } else { *right })
            }
        }
    }

    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut node = 0;
        while let Some(n) = self.next(node, x) {
            node = n;
        }
        node
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { weight, .. } => weight,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, n: usize) -> usize {
            match &t.nodes[n] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    /// Distinct split features, ascending.
    pub fn features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Cover-weighted mean leaf value (the model's expectation under the
    /// training distribution).
    pub fn expected_value(&self) -> f64 {
        let root = self.nodes[0].cover();
        if root <= 0.0 {
            return 0.0;
        }
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Leaf { weight, cover } => weight * cover / root,
                Node::Split { .. } => 0.0,
            })
            .sum()
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { weight, .. } = n {
                *weight *= factor;
            }
        }
    }
}

/// Second-order split gain with L2 leaf penalty `lambda` and split cost `gamma`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let w = -g / (h + lambda);
    if w == 0.0 {
        0.0
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub default_left: bool,
}

/// One present value of a feature column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub row: u32,
    pub value: f64,
}

/// Per-feature lists of a node's rows with a present value, sorted by
/// (value, row index).
#[derive(Clone, Debug)]
pub struct SortedColumns {
    pub columns: Vec<Vec<Entry>>,
    /// Rows in the node, including those missing a feature.
    pub n_rows: usize,
}

impl SortedColumns {
    pub fn new(x: &RowMatrix, rows: &[usize]) -> Self {
        let columns = (0..x.n_cols())
            .map(|f| {
                let mut col: Vec<Entry> = rows
                    .iter()
                    .map(|&r| Entry {
                        row: r as u32,
                        value: x.get(r, f),
                    })
                    .filter(|e| !e.value.is_nan())
                    .collect();
                col.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.row.cmp(&b.row)));
                col
            })
            .collect();
        SortedColumns {
            columns,
            n_rows: rows.len(),
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t <= a {
        b
    } else {
        t
    }
}

/// Exhaustive scan for the best split of a node.
///
/// `g_sum`/`h_sum` are the node totals (including rows with missing
/// values). Candidate thresholds are midpoints between consecutive
/// distinct values. Returns the highest strictly positive gain that keeps
/// both children at or above `min_child_weight`; ties resolve to the lower
/// feature index, then the lower threshold, then missing-goes-right.
pub fn best_split(
    sorted: &SortedColumns,
    g: &[f64],
    h: &[f64],
    g_sum: f64,
    h_sum: f64,
    params: &BoostParams,
) -> Option<SplitChoice> {
    let lambda = params.lambda;
    let mcw = params.min_child_weight;
    // children score G_L²/(H_L+λ) + G_R²/(H_R+λ); the gain is monotone in it
    let mut best_score = f64::NEG_INFINITY;
    let mut best: Option<(usize, f64, bool)> = None;
    let gh: Vec<[f64; 2]> = g.iter().zip(h).map(|(a, b)| [*a, *b]).collect();
    for (f, col) in sorted.columns.iter().enumerate() {
        if col.len() < 2 || col[0].value == col[col.len() - 1].value {
            continue;
        }
        let has_missing = col.len() < sorted.n_rows;
        let (mut gp, mut hp) = (g_sum, h_sum);
        if has_missing {
            (gp, hp) = (0.0, 0.0);
            for e in col {
                let [a, b] = gh[e.row as usize];
                gp += a;
                hp += b;
            }
        }
        let (gm, hm) = (g_sum - gp, h_sum - hp);
        let (mut gl, mut hl) = (0.0, 0.0);
        for i in 0..col.len() - 1 {
            let e = col[i];
            let [a, b] = gh[e.row as usize];
            gl += a;
            hl += b;
            let next = col[i + 1].value;
            if e.value == next {
                continue;
            }
            let (gr, hr) = (gp - gl, hp - hl);
            // missing rows to the right
            if hl >= mcw && hr + hm >= mcw {
                let grm = gr + gm;
                let score = gl * gl / (hl + lambda) + grm * grm / (hr + hm + lambda);
                if score > best_score {
                    best_score = score;
                    best = Some((f, midpoint(e.value, next), false));
                }
            }
            // missing rows to the left
            if has_missing && hl + hm >= mcw && hr >= mcw {
                let glm = gl + gm;
                let score = glm * glm / (hl + hm + lambda) + gr * gr / (hr + lambda);
                if score > best_score {
                    best_score = score;
                    best = Some((f, midpoint(e.value, next), true));
                }
            }
        }
    }
    let (feature, threshold, default_left) = best?;
    let gain = 0.5 * (best_score - g_sum * g_sum / (h_sum + lambda)) - params.gamma;
    (gain > 0.0).then_some(SplitChoice {
        feature,
        threshold,
        gain,
        default_left,
    })
}

/// Grows one tree on `rows` with per-row gradients `g` and hessians `h`.
/// Leaf weights are −G/(H + λ), unscaled by the learning rate.
pub fn build_tree(x: &RowMatrix, rows: &[usize], g: &[f64], h: &[f64], params: &BoostParams) -> Tree {
    let sorted = SortedColumns::new(x, rows);
    grow(x, rows.to_vec(), sorted, g, h, params)
}

pub(crate) fn grow(
    x: &RowMatrix,
    rows: Vec<usize>,
    sorted: SortedColumns,
    g: &[f64],
    h: &[f64],
    params: &BoostParams,
) -> Tree {
    let mut tree = Tree { nodes: Vec::new() };
    let mut goes_left = vec![false; x.n_rows()];
    grow_node(&mut tree, x, rows, sorted, g, h, params, 0, &mut goes_left);
    tree
}

#[allow(clippy::too_many_arguments)]
fn grow_node(
    tree: &mut Tree,
    x: &RowMatrix,
    rows: Vec<usize>,
    sorted: SortedColumns,
    g: &[f64],
    h: &[f64],
    params: &BoostParams,
    depth: usize,
    goes_left: &mut [bool],
) -> usize {
    let g_sum: f64 = rows.iter().map(|&r| g[r]).sum();
    let h_sum: f64 = rows.iter().map(|&r| h[r]).sum();
    let id = tree.nodes.len();
    tree.nodes.push(Node::Leaf {
        weight: leaf_weight(g_sum, h_sum, params.lambda),
        cover: h_sum,
    });
    if depth >= params.max_depth || rows.len() < 2 {
        return id;
    }
    let Some(split) = best_split(&sorted, g, h, g_sum, h_sum, params) else {
        return id;
    };

    for &r in &rows {
        let v = x.get(r, split.feature);
        goes_left[r] = if v.is_nan() { split.default_left } else { v < split.threshold };
    }
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| goes_left[r]);
    let (n_left, n_right) = (left_rows.len(), right_rows.len());
    let mut left_cols = Vec::new();
    let mut right_cols = Vec::new();
    // children at the depth limit become leaves and never scan columns
    if depth + 1 < params.max_depth {
        left_cols.reserve(sorted.columns.len());
        right_cols.reserve(sorted.columns.len());
        for col in sorted.columns {
            let mut l = Vec::with_capacity(n_left.min(col.len()));
            let mut r = Vec::with_capacity(n_right.min(col.len()));
            for e in col {
                if goes_left[e.row as usize] {
                    l.push(e);
                } else {
                    r.push(e);
                }
            }
            left_cols.push(l);
            right_cols.push(r);
        }
    }
    let left = grow_node(
        tree,
        x,
        left_rows,
        SortedColumns {
            columns: left_cols,
            n_rows: n_left,
        },
        g,
        h,
        params,
        depth + 1,
        goes_left,
    );
    let right = grow_node(
        tree,
        x,
        right_rows,
        SortedColumns {
            columns: right_cols,
            n_rows: n_right,
        },
        g,
        h,
        params,
        depth + 1,
        goes_left,
    );
    tree.nodes[id] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
        default_left: split.default_left,
        gain: split.gain,
        cover: h_sum,
    };
    id
}

//! Regression trees on pre-binned features, the base learner of the
//! boosting ensembles.
//!
//! Split search runs on histogram accumulators per (node, feature, bin),
//! which keeps a full fit linear in the number of rows. Trees are stored as
//! parallel arrays so serialized models stay compact.

use serde::{Deserialize, Serialize};

/// Upper bound on histogram bins per feature.
pub const MAX_BINS: usize = 255;

/// A fitted regression tree in parallel-array form. `feature[i] == -1`
/// marks a leaf; interior nodes route `x[feature] <= threshold` to `left`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub value: Vec<f64>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = 0usize;
        loop {
            let f = self.feature[node];
            if f < 0 {
                return self.value[node];
            }
            node = if row[f as usize] <= self.threshold[node] {
                self.left[node] as usize
            } else {
                self.right[node] as usize
            };
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.feature.iter().filter(|f| **f < 0).count()
    }

    /// Distinct leaf values, for structural assertions in tests.
    pub fn leaf_values(&self) -> Vec<f64> {
        self.feature
            .iter()
            .zip(&self.value)
            .filter(|(f, _)| **f < 0)
            .map(|(_, v)| *v)
            .collect()
    }
}

/// Features binned once per training table and shared by every ensemble
/// fitted on it.
#[derive(Debug, Clone)]
pub struct Binned {
    pub n_rows: usize,
    pub n_features: usize,
    /// Feature-major bin index per cell (`codes[f·n_rows + r]`), so the
    /// per-feature histogram pass walks memory sequentially.
    pub codes: Vec<u8>,
    /// Split candidates per feature: value `<= cuts[f][b]` ⇔ bin `<= b`.
    pub cuts: Vec<Vec<f64>>,
}

impl Binned {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_features = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut cuts = Vec::with_capacity(n_features);
        for f in 0..n_features {
            let mut values: Vec<f64> = rows.iter().map(|r| r.as_ref()[f]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
            values.dedup();
            let feature_cuts = if values.len() <= MAX_BINS {
                // midpoints between distinct values: exact split structure
                values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            } else {
                let mut qs = Vec::with_capacity(MAX_BINS - 1);
                for b in 1..MAX_BINS {
                    let pos = b * (values.len() - 1) / MAX_BINS;
                    qs.push(values[pos]);
                }
                qs.dedup();
                qs
            };
            cuts.push(feature_cuts);
        }
        let mut codes = vec![0u8; n_rows * n_features];
        for (i, row) in rows.iter().enumerate() {
            for f in 0..n_features {
                let x = row.as_ref()[f];
                let bin = cuts[f].partition_point(|c| *c < x);
                codes[f * n_rows + i] = bin as u8;
            }
        }
        Self {
            n_rows,
            n_features,
            codes,
            cuts,
        }
    }

    #[inline]
    fn code(&self, row: usize, feature: usize) -> usize {
        self.codes[feature * self.n_rows + row] as usize
    }

    #[inline]
    fn feature_codes(&self, feature: usize) -> &[u8] {
        &self.codes[feature * self.n_rows..(feature + 1) * self.n_rows]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

struct BuildNode {
    depth: usize,
    /// Range of the shared row-index scratch covered by this node.
    begin: usize,
    end: usize,
    /// Position in the output arrays.
    slot: usize,
}

/// Fits a tree skeleton to `response` with squared-error splits and
/// returns it along with each row's leaf slot, so the caller can assign
/// loss-specific leaf values.
pub fn fit_tree(
    binned: &Binned,
    response: &[f64],
    params: TreeParams,
) -> (Tree, Vec<u32>) {
    assert_eq!(binned.n_rows, response.len());
    let mut tree = Tree {
        feature: vec![-1],
        threshold: vec![0.0],
        left: vec![0],
        right: vec![0],
        value: vec![0.0],
    };
    let mut order: Vec<u32> = (0..binned.n_rows as u32).collect();
    let mut leaf_of_row = vec![0u32; binned.n_rows];
    let mut stack = vec![BuildNode {
        depth: 0,
        begin: 0,
        end: binned.n_rows,
        slot: 0,
    }];

    while let Some(node) = stack.pop() {
        let rows = &order[node.begin..node.end];
        let n = rows.len();
        let best = if node.depth < params.max_depth && n >= 2 * params.min_leaf {
            best_split(binned, response, rows, params.min_leaf)
        } else {
            None
        };
        match best {
            Some((feature, bin)) => {
                // partition the scratch range in place, preserving order
                let mid = {
                    let slice = &mut order[node.begin..node.end];
                    let mut left: Vec<u32> = Vec::with_capacity(n);
                    let mut right: Vec<u32> = Vec::with_capacity(n);
                    for &r in slice.iter() {
                        if binned.code(r as usize, feature) <= bin {
                            left.push(r);
                        } else {
                            right.push(r);
                        }
                    }
                    let mid = left.len();
                    slice[..mid].copy_from_slice(&left);
                    slice[mid..].copy_from_slice(&right);
                    node.begin + mid
                };
                let left_slot = tree.feature.len();
                let right_slot = left_slot + 1;
                for arrays in 0..2 {
                    let _ = arrays;
                    tree.feature.push(-1);
                    tree.threshold.push(0.0);
                    tree.left.push(0);
                    tree.right.push(0);
                    tree.value.push(0.0);
                }
                tree.feature[node.slot] = feature as i32;
                tree.threshold[node.slot] = binned.cuts[feature][bin];
                tree.left[node.slot] = left_slot as u32;
                tree.right[node.slot] = right_slot as u32;
                stack.push(BuildNode {
                    depth: node.depth + 1,
                    begin: node.begin,
                    end: mid,
                    slot: left_slot,
                });
                stack.push(BuildNode {
                    depth: node.depth + 1,
                    begin: mid,
                    end: node.end,
                    slot: right_slot,
                });
            }
            None => {
                let mean = rows.iter().map(|&r| response[r as usize]).sum::<f64>() / n as f64;
                tree.value[node.slot] = mean;
                for &r in rows {
                    leaf_of_row[r as usize] = node.slot as u32;
                }
            }
        }
    }
    (tree, leaf_of_row)
}

/// Best (feature, bin) by squared-error gain, or `None` when no split
/// clears the minimum leaf size and a strictly positive gain.
fn best_split(
    binned: &Binned,
    response: &[f64],
    rows: &[u32],
    min_leaf: usize,
) -> Option<(usize, usize)> {
    let n = rows.len() as f64;
    let total: f64 = rows.iter().map(|&r| response[r as usize]).sum();
    let parent_score = total * total / n;

    let mut best: Option<(usize, usize, f64)> = None;
    let mut sums = [0.0f64; MAX_BINS + 1];
    let mut counts = [0u32; MAX_BINS + 1];
    for feature in 0..binned.n_features {
        let n_cuts = binned.cuts[feature].len();
        if n_cuts == 0 {
            continue;
        }
        let n_bins = n_cuts + 1;
        sums[..n_bins].fill(0.0);
        counts[..n_bins].fill(0);
        let codes = binned.feature_codes(feature);
        for &r in rows {
            let b = codes[r as usize] as usize;
            sums[b] += response[r as usize];
            counts[b] += 1;
        }
        let mut left_sum = 0.0;
        let mut left_cnt = 0u32;
        for bin in 0..n_cuts {
            left_sum += sums[bin];
            left_cnt += counts[bin];
            let right_cnt = rows.len() as u32 - left_cnt;
            if (left_cnt as usize) < min_leaf || (right_cnt as usize) < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / left_cnt as f64
                + right_sum * right_sum / right_cnt as f64;
            let gain = score - parent_score;
            if gain > 1e-12 && best.map_or(true, |(_, _, g)| gain > g) {
                best = Some((feature, bin, gain));
            }
        }
    }
    best.map(|(f, b, _)| (f, b))
}

//! Gradient-boosted regression trees with squared or pinball loss.

use super::pinball::mean_pinball;
use super::tree::{fit_tree, Binned, Tree, TreeParams};
use super::{quantile_sorted, ForecastError};
use serde::{Deserialize, Serialize};

/// Ensemble hyperparameters. The defaults are fixed; a small documented
/// grid is available through [`fit_gbt_grid`] for the forecast models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            trees: 200,
            depth: 3,
            learning_rate: 0.05,
            min_leaf: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GbtLoss {
    Squared,
    Quantile(f64),
}

/// A fitted boosted-tree model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbtModel {
    pub base: f64,
    pub learning_rate: f64,
    pub loss: GbtLoss,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut f = self.base;
        for tree in &self.trees {
            f += self.learning_rate * tree.predict(row);
        }
        f
    }
}

/// Training rows binned once and reused across the quantile grid.
#[derive(Debug, Clone)]
pub struct BinnedDataset {
    binned: Binned,
    rows: Vec<Vec<f64>>,
}

impl BinnedDataset {
    pub fn new<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        Self {
            binned: Binned::from_rows(rows),
            rows: rows.iter().map(|r| r.as_ref().to_vec()).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

/// Minimum training size for the forecast models.
pub const MIN_ROWS: usize = 500;

pub fn fit_gbt<R: AsRef<[f64]>>(
    rows: &[R],
    targets: &[f64],
    loss: GbtLoss,
    params: &GbtParams,
) -> Result<GbtModel, ForecastError> {
    fit_gbt_binned(&BinnedDataset::new(rows), targets, loss, params)
}

/// Greedy stagewise fit on pinball-loss (or squared-loss) gradients.
///
/// For the quantile loss the trees are grown on the loss subgradients and
/// each leaf is then set to the `alpha`-quantile of the raw residuals it
/// covers, so every stage performs the loss-optimal constant update.
pub fn fit_gbt_binned(
    data: &BinnedDataset,
    targets: &[f64],
    loss: GbtLoss,
    params: &GbtParams,
) -> Result<GbtModel, ForecastError> {
    let n = targets.len();
    if n != data.n_rows() {
        return Err(ForecastError::BadArgument(
            "row/target length mismatch".into(),
        ));
    }
    if n < MIN_ROWS {
        return Err(ForecastError::NotEnoughRows {
            needed: MIN_ROWS,
            got: n,
        });
    }

    let mut sorted = targets.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite targets"));
    let base = match loss {
        GbtLoss::Squared => targets.iter().sum::<f64>() / n as f64,
        GbtLoss::Quantile(alpha) => quantile_sorted(&sorted, alpha),
    };

    let tree_params = TreeParams {
        max_depth: params.depth,
        min_leaf: params.min_leaf,
    };
    let mut predictions = vec![base; n];
    let mut residuals = vec![0.0f64; n];
    let mut gradients = vec![0.0f64; n];
    let mut trees = Vec::with_capacity(params.trees);
    let mut members: Vec<Vec<f64>> = Vec::new();

    for _ in 0..params.trees {
        for i in 0..n {
            residuals[i] = targets[i] - predictions[i];
            gradients[i] = match loss {
                GbtLoss::Squared => residuals[i],
                GbtLoss::Quantile(alpha) => {
                    if residuals[i] > 0.0 {
                        alpha
                    } else {
                        alpha - 1.0
                    }
                }
            };
        }
        let (mut tree, leaf_of_row) = fit_tree(&data.binned, &gradients, tree_params);

        // loss-optimal constant per leaf
        let n_slots = tree.value.len();
        match loss {
            GbtLoss::Squared => {
                let mut sums = vec![0.0f64; n_slots];
                let mut counts = vec![0usize; n_slots];
                for i in 0..n {
                    sums[leaf_of_row[i] as usize] += residuals[i];
                    counts[leaf_of_row[i] as usize] += 1;
                }
                for slot in 0..n_slots {
                    if tree.feature[slot] < 0 && counts[slot] > 0 {
                        tree.value[slot] = sums[slot] / counts[slot] as f64;
                    }
                }
            }
            GbtLoss::Quantile(alpha) => {
                members.resize(n_slots, Vec::new());
                for m in members.iter_mut() {
                    m.clear();
                }
                for i in 0..n {
                    members[leaf_of_row[i] as usize].push(residuals[i]);
                }
                for slot in 0..n_slots {
                    if tree.feature[slot] < 0 && !members[slot].is_empty() {
                        tree.value[slot] = quantile_select(&mut members[slot], alpha);
                    }
                }
            }
        }

        for i in 0..n {
            predictions[i] += params.learning_rate * tree.value[leaf_of_row[i] as usize];
        }
        trees.push(tree);
    }

    Ok(GbtModel {
        base,
        learning_rate: params.learning_rate,
        loss,
        trees,
    })
}

/// Interpolated order-statistic quantile via quickselect; equivalent to
/// sorting and interpolating but linear per call.
fn quantile_select(values: &mut [f64], alpha: f64) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let pos = alpha.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let w = pos - lo as f64;
    let (_, lo_val, upper) =
        values.select_nth_unstable_by(lo, |a, b| a.partial_cmp(b).expect("finite residuals"));
    let lo_val = *lo_val;
    if w == 0.0 {
        return lo_val;
    }
    let hi_val = upper.iter().copied().fold(f64::INFINITY, f64::min);
    lo_val * (1.0 - w) + hi_val * w
}

/// The documented hyperparameter grid explored by [`fit_gbt_grid`].
pub fn candidate_grid() -> Vec<GbtParams> {
    let mut grid = Vec::new();
    for trees in [100, 200] {
        for depth in [2, 3] {
            for learning_rate in [0.05, 0.1] {
                grid.push(GbtParams {
                    trees,
                    depth,
                    learning_rate,
                    min_leaf: 20,
                });
            }
        }
    }
    grid
}

/// Picks the grid candidate with the lowest pinball loss on a chronological
/// validation tail (last 25% of the training rows).
pub fn fit_gbt_grid<R: AsRef<[f64]>>(
    rows: &[R],
    targets: &[f64],
    alpha: f64,
) -> Result<(GbtModel, GbtParams), ForecastError> {
    let n = targets.len();
    let split = n - n / 4;
    if split < MIN_ROWS {
        return Err(ForecastError::NotEnoughRows {
            needed: MIN_ROWS,
            got: split,
        });
    }
    let train: Vec<&[f64]> = rows[..split].iter().map(|r| r.as_ref()).collect();
    let mut best: Option<(f64, GbtParams)> = None;
    for params in candidate_grid() {
        let model = fit_gbt(&train, &targets[..split], GbtLoss::Quantile(alpha), &params)?;
        let preds: Vec<f64> = rows[split..]
            .iter()
            .map(|r| model.predict(r.as_ref()))
            .collect();
        let score = mean_pinball(&targets[split..], &preds, alpha);
        if best.map_or(true, |(s, _)| score < s) {
            best = Some((score, params));
        }
    }
    let (_, params) = best.expect("grid is nonempty");
    let model = fit_gbt(rows, targets, GbtLoss::Quantile(alpha), &params)?;
    Ok((model, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feature_rows(n: usize) -> Vec<[f64; 2]> {
        (0..n).map(|i| [i as f64, (i % 11) as f64]).collect()
    }

    #[test]
    fn constant_target_predicts_the_constant() {
        let rows = feature_rows(600);
        let targets = vec![42.0; 600];
        for loss in [GbtLoss::Squared, GbtLoss::Quantile(0.2), GbtLoss::Quantile(0.9)] {
            let model = fit_gbt(&rows, &targets, loss, &GbtParams::default()).unwrap();
            assert_eq!(model.base, 42.0);
            for tree in &model.trees {
                assert_eq!(tree.n_leaves(), 1, "stump grew on constant data");
            }
            assert!((model.predict(&[3.0, 4.0]) - 42.0).abs() < 1e-9);
        }
    }

    #[test]
    fn step_target_fits_within_one_percent_of_range() {
        let rows = feature_rows(1000);
        let targets: Vec<f64> = (0..1000)
            .map(|i| if i < 500 { 100.0 } else { 900.0 })
            .collect();
        let model = fit_gbt(
            &rows,
            &targets,
            GbtLoss::Quantile(0.5),
            &GbtParams::default(),
        )
        .unwrap();
        let preds: Vec<f64> = rows.iter().map(|r| model.predict(r)).collect();
        let loss = mean_pinball(&targets, &preds, 0.5);
        assert!(loss < 0.01 * 800.0, "pinball loss {loss} too large");
    }

    #[test]
    fn single_stump_takes_at_most_two_plus_base_values() {
        let rows = feature_rows(600);
        let targets: Vec<f64> = (0..600).map(|i| (i as f64 * 0.7).sin() * 50.0).collect();
        let params = GbtParams {
            trees: 1,
            depth: 1,
            ..GbtParams::default()
        };
        let model = fit_gbt(&rows, &targets, GbtLoss::Quantile(0.5), &params).unwrap();
        let mut distinct: Vec<i64> = rows
            .iter()
            .map(|r| (model.predict(r) * 1e9) as i64)
            .collect();
        distinct.sort();
        distinct.dedup();
        assert!(distinct.len() <= 2);
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let rows = feature_rows(100);
        let targets = vec![1.0; 100];
        assert!(matches!(
            fit_gbt(&rows, &targets, GbtLoss::Squared, &GbtParams::default()),
            Err(ForecastError::NotEnoughRows { .. })
        ));
    }

    #[test]
    fn quantile_fits_order_by_alpha_on_noisy_data() {
        // deterministic pseudo-noise
        let rows = feature_rows(2000);
        let targets: Vec<f64> = (0..2000)
            .map(|i| {
                let x = i as f64;
                500.0 + 100.0 * ((x * 12.9898).sin() * 43758.5453).fract()
            })
            .collect();
        let lo = fit_gbt(&rows, &targets, GbtLoss::Quantile(0.1), &GbtParams::default()).unwrap();
        let hi = fit_gbt(&rows, &targets, GbtLoss::Quantile(0.9), &GbtParams::default()).unwrap();
        let violations = rows
            .iter()
            .filter(|r| hi.predict(r.as_ref()) < lo.predict(r.as_ref()))
            .count();
        assert!(violations < 20, "{violations} crossings out of 2000");
    }
}

//! Linear quantile regression fitted by iteratively reweighted least
//! squares on the pinball loss.
//!
//! Calendar integers are mapped to Fourier pairs internally (hour gets two
//! harmonics, weekday and month one each), which is the linear-model
//! equivalent of conditioning on the period. Features are standardized for
//! conditioning and the normal equations carry a small ridge; the ridge is
//! escalated with a warning when the design is rank deficient, which
//! happens naturally when a dataset spans a single month.

use super::ForecastError;
use crate::features::{COL_COT, COL_GOD, COL_HOUR, COL_LAG24H, COL_MONTH, COL_WDAY, N_FEATURES, N_LAGS};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Convergence tolerance on the relative pinball-loss change.
pub const LOSS_TOLERANCE: f64 = 1e-6;
/// Iteration cap for the reweighting loop; the floor-damped reweighting
/// can hover just above the tolerance, so the cap bounds the cost.
pub const MAX_ITERATIONS: usize = 30;
/// Residual floor inside the reweighting, relative to the target scale.
const WEIGHT_FLOOR: f64 = 1e-6;
/// Baseline ridge added to the standardized normal equations.
const BASE_RIDGE: f64 = 1e-8;
/// Minimum training size.
pub const MIN_ROWS: usize = 500;

/// Dimension of the internally expanded feature space:
/// 8 lags + hour sin/cos ×2 + wday sin/cos + month sin/cos + CoT + GoD + 24h lag.
pub const N_EXPANDED: usize = N_LAGS + 8 + 3;

/// Expanded-space column groups, used by the ablation study.
pub mod cols {
    use super::*;
    pub const LAGS: std::ops::Range<usize> = 0..N_LAGS;
    pub const HOUR: std::ops::Range<usize> = N_LAGS..N_LAGS + 4;
    pub const WDAY: std::ops::Range<usize> = N_LAGS + 4..N_LAGS + 6;
    pub const MONTH: std::ops::Range<usize> = N_LAGS + 6..N_LAGS + 8;
    pub const COT: usize = N_LAGS + 8;
    pub const GOD: usize = N_LAGS + 9;
    pub const LAG24H: usize = N_LAGS + 10;
}

/// Maps a raw feature row to the expanded linear-model space.
pub fn expand_row(row: &[f64; N_FEATURES]) -> [f64; N_EXPANDED] {
    let mut out = [0.0; N_EXPANDED];
    out[..N_LAGS].copy_from_slice(&row[..N_LAGS]);
    let hour = row[COL_HOUR] / 24.0;
    out[N_LAGS] = (TAU * hour).sin();
    out[N_LAGS + 1] = (TAU * hour).cos();
    out[N_LAGS + 2] = (2.0 * TAU * hour).sin();
    out[N_LAGS + 3] = (2.0 * TAU * hour).cos();
    let wday = row[COL_WDAY] / 7.0;
    out[N_LAGS + 4] = (TAU * wday).sin();
    out[N_LAGS + 5] = (TAU * wday).cos();
    let month = (row[COL_MONTH] - 1.0) / 12.0;
    out[N_LAGS + 6] = (TAU * month).sin();
    out[N_LAGS + 7] = (TAU * month).cos();
    out[cols::COT] = row[COL_COT];
    out[cols::GOD] = row[COL_GOD];
    out[cols::LAG24H] = row[COL_LAG24H];
    out
}

/// A fitted linear quantile model over the expanded feature space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LqrModel {
    pub alpha: f64,
    /// Expanded columns the model was fitted on.
    pub columns: Vec<usize>,
    /// Coefficients aligned with `columns`, in raw (unstandardized) space.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// True when rank deficiency forced an escalated ridge.
    pub ridge_escalated: bool,
}

impl LqrModel {
    pub fn predict(&self, row: &[f64; N_FEATURES]) -> f64 {
        let expanded = expand_row(row);
        self.predict_expanded(&expanded)
    }

    pub fn predict_expanded(&self, expanded: &[f64; N_EXPANDED]) -> f64 {
        let mut y = self.intercept;
        for (c, b) in self.columns.iter().zip(&self.coefficients) {
            y += expanded[*c] * b;
        }
        y
    }
}

/// Fits on all expanded columns.
pub fn fit_lqr(
    rows: &[[f64; N_FEATURES]],
    targets: &[f64],
    alpha: f64,
) -> Result<LqrModel, ForecastError> {
    fit_lqr_columns(rows, targets, alpha, &(0..N_EXPANDED).collect::<Vec<_>>())
}

/// Fits on a subset of expanded columns (the ablation study's entry point).
pub fn fit_lqr_columns(
    rows: &[[f64; N_FEATURES]],
    targets: &[f64],
    alpha: f64,
    columns: &[usize],
) -> Result<LqrModel, ForecastError> {
    let n = rows.len();
    if n < MIN_ROWS {
        return Err(ForecastError::NotEnoughRows {
            needed: MIN_ROWS,
            got: n,
        });
    }
    if n != targets.len() {
        return Err(ForecastError::BadArgument(
            "row/target length mismatch".into(),
        ));
    }
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(ForecastError::BadArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }

    let m = columns.len();
    // standardized design, intercept last
    let mut design = vec![0.0f64; n * (m + 1)];
    let mut means = vec![0.0f64; m];
    let mut stds = vec![1.0f64; m];
    let expanded: Vec<[f64; N_EXPANDED]> = rows.iter().map(expand_row).collect();
    for (j, &c) in columns.iter().enumerate() {
        let mean = expanded.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = expanded.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n as f64;
        means[j] = mean;
        stds[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    }
    for (i, r) in expanded.iter().enumerate() {
        for (j, &c) in columns.iter().enumerate() {
            design[i * (m + 1) + j] = (r[c] - means[j]) / stds[j];
        }
        design[i * (m + 1) + m] = 1.0;
    }

    let y_scale = targets.iter().map(|y| y.abs()).sum::<f64>() / n as f64 + 1.0;
    let floor = WEIGHT_FLOOR * y_scale;

    let dim = m + 1;
    let mut beta = vec![0.0f64; dim];
    let mut weights = vec![1.0f64; n];
    let mut prev_loss = f64::INFINITY;
    let mut ridge_escalated = false;

    for _iter in 0..MAX_ITERATIONS {
        // weighted normal equations
        let mut ata = vec![0.0f64; dim * dim];
        let mut atb = vec![0.0f64; dim];
        for i in 0..n {
            let w = weights[i];
            let row = &design[i * dim..(i + 1) * dim];
            let wy = w * targets[i];
            for a in 0..dim {
                let wa = w * row[a];
                atb[a] += wy * row[a];
                for b in a..dim {
                    ata[a * dim + b] += wa * row[b];
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                ata[a * dim + b] = ata[b * dim + a];
            }
        }
        let mut ridge = BASE_RIDGE * n as f64;
        let solved = loop {
            match cholesky_solve(&ata, &atb, ridge) {
                Some(solution) => break solution,
                None => {
                    ridge *= 100.0;
                    if !ridge_escalated {
                        log::warn!(
                            "rank-deficient quantile design (alpha {alpha}); ridge escalated"
                        );
                        ridge_escalated = true;
                    }
                    if ridge > 1e6 * n as f64 {
                        return Err(ForecastError::Malformed(
                            "normal equations unsolvable".into(),
                        ));
                    }
                }
            }
        };
        beta = solved;

        // pinball loss and fresh weights
        let mut loss = 0.0;
        for i in 0..n {
            let row = &design[i * dim..(i + 1) * dim];
            let pred: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            let r = targets[i] - pred;
            loss += super::pinball::pinball_loss(targets[i], pred, alpha);
            weights[i] = if r >= 0.0 {
                alpha / r.max(floor)
            } else {
                (1.0 - alpha) / (-r).max(floor)
            };
        }
        loss /= n as f64;
        let converged = prev_loss.is_finite()
            && (prev_loss - loss).abs() <= LOSS_TOLERANCE * prev_loss.max(1.0);
        prev_loss = loss;
        if converged {
            break;
        }
    }
    let _ = prev_loss;

    // back-transform to raw feature space
    let mut coefficients = Vec::with_capacity(m);
    let mut intercept = beta[m];
    for j in 0..m {
        let b = beta[j] / stds[j];
        coefficients.push(b);
        intercept -= b * means[j];
    }

    Ok(LqrModel {
        alpha,
        columns: columns.to_vec(),
        coefficients,
        intercept,
        ridge_escalated,
    })
}

/// Solves `(A + ridge·I) x = b` for a symmetric positive semi-definite `A`
/// via Cholesky; `None` when the factorization hits a non-positive pivot.
pub(crate) fn cholesky_solve(a: &[f64], b: &[f64], ridge: f64) -> Option<Vec<f64>> {
    let dim = b.len();
    let mut l = vec![0.0f64; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            if i == j {
                sum += ridge;
            }
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if sum <= 1e-12 {
                    return None;
                }
                l[i * dim + j] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0f64; dim];
    for i in 0..dim {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * dim + k] * y[k];
        }
        y[i] = sum / l[i * dim + i];
    }
    let mut x = vec![0.0f64; dim];
    for i in (0..dim).rev() {
        let mut sum = y[i];
        for k in (i + 1)..dim {
            sum -= l[k * dim + i] * x[k];
        }
        x[i] = sum / l[i * dim + i];
    }
    Some(x)
}

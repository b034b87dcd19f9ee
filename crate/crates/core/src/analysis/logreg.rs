//! L2-regularized logistic regression trained by full-batch gradient
//! descent.
//!
//! The objective is the mean log-loss plus `l2 / 2 * |w|^2` over the
//! non-bias weights. By default the descent runs on centered features with
//! each coordinate's step divided by its feature's variance (a diagonal
//! preconditioner); one-hot player and question columns are active in a
//! small share of rows and would otherwise crawl, and centering keeps the
//! bias from dragging every coefficient along with it. The fixed point is
//! the same regularized optimum.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::AnalysisError;
use crate::record::{GameRecord, Group};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Seeds the small random initial weights.
    pub seed: u64,
    /// Center features and scale steps per coordinate by the feature's
    /// variance.
    pub preconditioned: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 2000,
            l2: 1e-4,
            seed: 0,
            preconditioned: true,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(AnalysisError::Hyperparams("learning rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(AnalysisError::Hyperparams("epochs must be at least 1"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(AnalysisError::Hyperparams("l2 must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: BTreeMap<alloc::string::String, f64>,
    pub bias: f64,
    pub hyperparams: Hyperparams,
    pub final_loss: f64,
    /// Objective before each epoch's update.
    pub loss_history: Vec<f64>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients.get(name).copied()
    }

    /// L2 norm of the non-bias weights.
    pub fn weight_norm(&self) -> f64 {
        libm::sqrt(self.coefficients.values().map(|w| w * w).sum())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-z.abs()))
}

fn margin(row: &[(usize, f64)], weights: &[f64], bias: f64) -> f64 {
    row.iter().fold(bias, |acc, &(j, x)| acc + weights[j] * x)
}

/// Predicted probability of a correct answer for each row.
pub fn predict(ds: &Dataset, weights: &[f64], bias: f64) -> Vec<f64> {
    ds.rows.iter().map(|r| sigmoid(margin(r, weights, bias))).collect()
}

/// Regularized mean log-loss.
pub fn loss(ds: &Dataset, weights: &[f64], bias: f64, l2: f64) -> f64 {
    let m = ds.len() as f64;
    let data: f64 = ds
        .rows
        .iter()
        .zip(&ds.labels)
        .map(|(r, &y)| {
            let z = margin(r, weights, bias);
            softplus(z) - y * z
        })
        .sum();
    data / m + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`loss`] with respect to the weights and the bias.
pub fn gradient(ds: &Dataset, weights: &[f64], bias: f64, l2: f64) -> (Vec<f64>, f64) {
    gradient_and_loss(ds, weights, bias, l2).0
}

fn gradient_and_loss(ds: &Dataset, weights: &[f64], bias: f64, l2: f64) -> ((Vec<f64>, f64), f64) {
    let m = ds.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_bias = 0.0;
    let mut data_loss = 0.0;
    for (row, &y) in ds.rows.iter().zip(&ds.labels) {
        let z = margin(row, weights, bias);
        data_loss += softplus(z) - y * z;
        let residual = sigmoid(z) - y;
        grad_bias += residual;
        for &(j, x) in row {
            grad[j] += residual * x;
        }
    }
    let mut penalty = 0.0;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / m + l2 * w;
        penalty += w * w;
    }
    ((grad, grad_bias / m), data_loss / m + 0.5 * l2 * penalty)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fit_dataset(ds: &Dataset, hp: &Hyperparams) -> Result<FitResult, AnalysisError> {
    hp.validate()?;
    if ds.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let d = ds.num_features();
    let m = ds.len() as f64;

    let mut state = hp.seed;
    let mut weights: Vec<f64> = (0..d)
        .map(|_| (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64 * 0.02 - 0.01)
        .collect();
    let mut bias = 0.0;

    // Preconditioned steps run in centered coordinates, where the bias is
    // decoupled from the features: the centered weight gradient is
    // `g_j - mean_j * g_bias` and each coordinate is scaled by
    // `1 / (var_j + l2)`. Weights are unchanged by the reparameterization;
    // only the bias shifts, so the fixed point is the same.
    let (means, scale) = if hp.preconditioned {
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for row in &ds.rows {
            for &(j, x) in row {
                sum[j] += x;
                sq[j] += x * x;
            }
        }
        let means: Vec<f64> = sum.iter().map(|s| s / m).collect();
        let scale = sq
            .iter()
            .zip(&means)
            .map(|(s, mu)| 1.0 / (s / m - mu * mu + hp.l2).max(1e-12))
            .collect();
        (means, scale)
    } else {
        (vec![0.0; d], vec![1.0; d])
    };

    let mut loss_history = Vec::with_capacity(hp.epochs);
    for _ in 0..hp.epochs {
        let ((grad, grad_bias), current) = gradient_and_loss(ds, &weights, bias, hp.l2);
        if !current.is_finite() {
            return Err(AnalysisError::Divergence { lr: hp.learning_rate });
        }
        loss_history.push(current);
        let mut shift = 0.0;
        for (((w, g), s), mu) in weights.iter_mut().zip(&grad).zip(&scale).zip(&means) {
            let step = hp.learning_rate * (g - mu * grad_bias) * s;
            *w -= step;
            shift += mu * step;
        }
        bias += shift - hp.learning_rate * grad_bias;
    }
    let final_loss = loss(ds, &weights, bias, hp.l2);
    if !final_loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(AnalysisError::Divergence { lr: hp.learning_rate });
    }

    Ok(FitResult {
        coefficients: ds.names.iter().cloned().zip(weights).collect(),
        bias,
        hyperparams: *hp,
        final_loss,
        loss_history,
    })
}

/// Fits one group's records.
pub fn fit(
    records: &[GameRecord],
    setting: Group,
    include_buzz: bool,
    hp: &Hyperparams,
) -> Result<FitResult, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let ds = Dataset::from_records(records, setting, include_buzz)?;
    fit_dataset(&ds, hp)
}

//! Training losses at the softmax-output boundary.
//!
//! The central piece is the weighted diversity-driven loss
//!
//! ```text
//! L = w * ( -sum_c y_c ln h_c  -  gamma * ||h - H_prev||_2 )
//! ```
//!
//! which pulls a new base model toward the labels while pushing its soft
//! targets away from the previous ensemble's. Its analytic gradient with
//! respect to the softmax output `h` is
//!
//! ```text
//! dL/dh_c = w * ( -y_c / h_c  -  gamma * (h_c - H_c) / ||h - H_prev||_2 )
//! ```
//!
//! with the vanishing-norm singularity handled by a subgradient of zero.

use alloc::vec::Vec;

use crate::data::{one_hot, Dataset};
use crate::simplex::{check_probability_row, check_same_len, l2_diff};
use crate::{Error, Result};

/// Probabilities are clamped here before `ln` and division so saturated
/// softmax outputs never produce infinities.
pub const PROB_FLOOR: f64 = 1e-12;

/// Default guard on the diversity-term denominator.
pub const NORM_FLOOR: f64 = 1e-12;

/// Weighted diversity-driven loss for one sample.
///
/// `y` is the one-hot label, `w` the sample weight, `h_prev` the previous
/// ensemble's soft target. May be negative for large `gamma`.
pub fn edde_loss(h: &[f64], h_prev: &[f64], y: &[f64], w: f64, gamma: f64) -> Result<f64> {
    check_same_len(h.len(), h_prev.len(), "h vs H_prev")?;
    check_same_len(h.len(), y.len(), "h vs y")?;
    let mut ce = 0.0;
    for (hc, yc) in h.iter().zip(y) {
        if *yc != 0.0 {
            ce -= yc * libm::log(hc.max(PROB_FLOOR));
        }
    }
    Ok(w * (ce - gamma * l2_diff(h, h_prev)))
}

/// Analytic gradient of [`edde_loss`] with respect to `h`.
///
/// When `||h - h_prev||_2 < norm_floor` the diversity term's contribution is
/// zero (subgradient of the norm at its minimum).
pub fn edde_loss_grad(
    h: &[f64],
    h_prev: &[f64],
    y: &[f64],
    w: f64,
    gamma: f64,
    norm_floor: f64,
) -> Result<Vec<f64>> {
    check_same_len(h.len(), h_prev.len(), "h vs H_prev")?;
    check_same_len(h.len(), y.len(), "h vs y")?;
    let norm = l2_diff(h, h_prev);
    let mut grad = Vec::with_capacity(h.len());
    for c in 0..h.len() {
        let ce_term = if y[c] != 0.0 {
            -y[c] / h[c].max(PROB_FLOOR)
        } else {
            0.0
        };
        let div_term = if norm < norm_floor {
            0.0
        } else {
            -gamma * (h[c] - h_prev[c]) / norm
        };
        grad.push(w * (ce_term + div_term));
    }
    Ok(grad)
}

/// The diversity-driven loss for one boosting round: the diversity strength,
/// the previous ensemble's soft targets on the full training set, and the
/// round's sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EddeLossSpec {
    pub gamma: f64,
    /// `N x k` rows of `H_{t-1}` soft targets, frozen for the round.
    pub ensemble_targets: Vec<Vec<f64>>,
    /// Length-`N` nonnegative weights summing to 1.
    pub sample_weights: Vec<f64>,
    pub norm_floor: f64,
}

impl EddeLossSpec {
    pub fn new(
        gamma: f64,
        ensemble_targets: Vec<Vec<f64>>,
        sample_weights: Vec<f64>,
    ) -> Result<Self> {
        let spec = EddeLossSpec {
            gamma,
            ensemble_targets,
            sample_weights,
            norm_floor: NORM_FLOOR,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) {
            return Err(Error::validation("gamma must be nonnegative"));
        }
        check_same_len(
            self.ensemble_targets.len(),
            self.sample_weights.len(),
            "ensemble_targets vs sample_weights",
        )?;
        for row in &self.ensemble_targets {
            check_probability_row(row, 1e-6, "ensemble target")?;
        }
        let mut sum = 0.0;
        for &w in &self.sample_weights {
            if !(w >= 0.0) {
                return Err(Error::validation("sample weights must be nonnegative"));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(alloc::format!(
                "sample weights sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// Vectorized loss over a batch.
    ///
    /// `indices[b]` selects the rows of `ensemble_targets`/`sample_weights`
    /// belonging to `h_batch[b]`/`y_batch[b]`. Returns the arithmetic mean of
    /// the per-sample losses and the exact per-sample gradients.
    pub fn batch_loss_and_grads(
        &self,
        h_batch: &[Vec<f64>],
        y_batch: &[Vec<f64>],
        indices: &[usize],
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        check_same_len(h_batch.len(), y_batch.len(), "h_batch vs y_batch")?;
        check_same_len(h_batch.len(), indices.len(), "h_batch vs indices")?;
        let mut loss_sum = 0.0;
        let mut grads = Vec::with_capacity(h_batch.len());
        for ((h, y), &i) in h_batch.iter().zip(y_batch).zip(indices) {
            if i >= self.ensemble_targets.len() {
                return Err(Error::validation(alloc::format!(
                    "batch index {i} out of range for {} samples",
                    self.ensemble_targets.len()
                )));
            }
            let w = self.sample_weights[i];
            let h_prev = &self.ensemble_targets[i];
            loss_sum += edde_loss(h, h_prev, y, w, self.gamma)?;
            grads.push(edde_loss_grad(h, h_prev, y, w, self.gamma, self.norm_floor)?);
        }
        Ok((loss_sum / h_batch.len() as f64, grads))
    }
}

/// Loss plugin consumed by the training loop. The sample weight always
/// enters multiplicatively; per-sample weights come from the trainer.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    /// Weighted cross-entropy against the integer labels.
    CrossEntropy,
    /// Cross-entropy against frozen per-sample target distributions
    /// (distillation). `label_mix` in `[0,1]` blends the one-hot label in;
    /// 0 means pure teacher matching.
    SoftTargets {
        targets: Vec<Vec<f64>>,
        label_mix: f64,
    },
    /// The diversity-driven loss against the previous ensemble's targets.
    Edde {
        gamma: f64,
        ensemble_targets: Vec<Vec<f64>>,
        norm_floor: f64,
    },
}

impl LossSpec {
    pub(crate) fn validate(&self, dataset: &Dataset, _weights: &[f64]) -> Result<()> {
        match self {
            LossSpec::CrossEntropy => Ok(()),
            LossSpec::SoftTargets { targets, label_mix } => {
                check_same_len(targets.len(), dataset.n(), "targets vs dataset")?;
                if !(0.0..=1.0).contains(label_mix) {
                    return Err(Error::validation("label_mix must lie in [0,1]"));
                }
                for row in targets {
                    check_probability_row(row, 1e-6, "soft target")?;
                }
                Ok(())
            }
            LossSpec::Edde {
                gamma,
                ensemble_targets,
                ..
            } => {
                if !(*gamma >= 0.0) {
                    return Err(Error::validation("gamma must be nonnegative"));
                }
                check_same_len(ensemble_targets.len(), dataset.n(), "targets vs dataset")?;
                for row in ensemble_targets {
                    check_probability_row(row, 1e-6, "ensemble target")?;
                }
                Ok(())
            }
        }
    }

    /// Per-sample loss value and gradient at the softmax output.
    pub(crate) fn loss_and_grad(
        &self,
        h: &[f64],
        label: usize,
        w: f64,
        sample_index: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let k = h.len();
        match self {
            LossSpec::CrossEntropy => {
                let y = one_hot(label, k)?;
                let loss = edde_loss(h, h, &y, w, 0.0)?;
                let grad = edde_loss_grad(h, h, &y, w, 0.0, NORM_FLOOR)?;
                Ok((loss, grad))
            }
            LossSpec::SoftTargets { targets, label_mix } => {
                let teacher = &targets[sample_index];
                check_same_len(teacher.len(), k, "teacher target vs output")?;
                let mut loss = 0.0;
                let mut grad = Vec::with_capacity(k);
                for c in 0..k {
                    let mut p = (1.0 - label_mix) * teacher[c];
                    if c == label {
                        p += label_mix;
                    }
                    loss -= p * libm::log(h[c].max(PROB_FLOOR));
                    grad.push(-w * p / h[c].max(PROB_FLOOR));
                }
                Ok((w * loss, grad))
            }
            LossSpec::Edde {
                gamma,
                ensemble_targets,
                norm_floor,
            } => {
                let h_prev = &ensemble_targets[sample_index];
                let y = one_hot(label, k)?;
                let loss = edde_loss(h, h_prev, &y, w, *gamma)?;
                let grad = edde_loss_grad(h, h_prev, &y, w, *gamma, *norm_floor)?;
                Ok((loss, grad))
            }
        }
    }
}

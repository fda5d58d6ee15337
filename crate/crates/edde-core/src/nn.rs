//! A minimal deterministic feed-forward network engine.
//!
//! Dense layers with relu/tanh hidden activations and a softmax output,
//! trained by mini-batch SGD under a learning-rate schedule. The loss is a
//! plugin: training code supplies the gradient of the loss with respect to
//! the softmax *output*, and the engine applies the softmax Jacobian and
//! backpropagation internally.
//!
//! All arithmetic is `f64`, gradient reduction over a batch uses fixed index
//! order, and shuffling derives from per-epoch seeds, so a run is bit-exact
//! reproducible for a fixed seed.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::loss::LossSpec;
use crate::seeding;
use crate::simplex::argmax;
use crate::{Error, Result};

/// Hidden-layer nonlinearity. The output layer is always softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => libm::tanh(z),
        }
    }

    /// Derivative expressed through the activated value `a = f(z)`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Layer sizes (input dim, hidden dims..., class count) plus the hidden
/// activation.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Architecture {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        let arch = Architecture {
            layer_sizes,
            activation,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::validation(
                "architecture needs at least input and output layers",
            ));
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::validation("every layer size must be >= 1"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Number of output classes `k`.
    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of weight layers `L`.
    pub fn n_weight_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }
}

/// Parameter gradients with the same shapes as [`BaseNetwork`] parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Row-major, layer `l` has shape `layer_sizes[l] x layer_sizes[l+1]`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(arch: &Architecture) -> Self {
        let weights = (0..arch.n_weight_layers())
            .map(|l| vec![0.0; arch.layer_sizes[l] * arch.layer_sizes[l + 1]])
            .collect();
        let biases = (0..arch.n_weight_layers())
            .map(|l| vec![0.0; arch.layer_sizes[l + 1]])
            .collect();
        Gradients { weights, biases }
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// A dense feed-forward network with softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseNetwork {
    pub arch: Architecture,
    /// Row-major, layer `l` has shape `layer_sizes[l] x layer_sizes[l+1]`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    /// Seed the parameters were drawn from, recorded for provenance.
    pub rng_seed: u64,
}

/// Initializes a network with Glorot-uniform weights
/// (`U[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]`) and zero
/// biases, drawn layer by layer from a ChaCha stream seeded with `seed`.
pub fn init_network(arch: &Architecture, seed: u64) -> Result<BaseNetwork> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(arch.n_weight_layers());
    let mut biases = Vec::with_capacity(arch.n_weight_layers());
    for l in 0..arch.n_weight_layers() {
        let fan_in = arch.layer_sizes[l];
        let fan_out = arch.layer_sizes[l + 1];
        let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        let w = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        weights.push(w);
        biases.push(vec![0.0; fan_out]);
    }
    Ok(BaseNetwork {
        arch: arch.clone(),
        weights,
        biases,
        rng_seed: seed,
    })
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in z.iter_mut() {
        *x = libm::exp(*x - max);
        sum += *x;
    }
    for x in z.iter_mut() {
        *x /= sum;
    }
}

impl BaseNetwork {
    /// Softmax output over the `k` classes for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.arch.input_dim() {
            return Err(Error::shape(alloc::format!(
                "input has {} features, network expects {}",
                x.len(),
                self.arch.input_dim()
            )));
        }
        let out = self.forward_trace(x).pop().unwrap();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                epoch: 0,
                detail: alloc::format!("non-finite network output"),
            });
        }
        Ok(out)
    }

    /// Per-layer activations: `[input, hidden..., softmax output]`.
    ///
    /// The input must already be shape-checked.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.arch.n_weight_layers() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.arch.layer_sizes.len());
        acts.push(x.to_vec());
        for l in 0..=last {
            let fan_in = self.arch.layer_sizes[l];
            let fan_out = self.arch.layer_sizes[l + 1];
            let mut z = self.biases[l].clone();
            let input = &acts[l];
            let w = &self.weights[l];
            for i in 0..fan_in {
                let xi = input[i];
                let row = &w[i * fan_out..(i + 1) * fan_out];
                for (zj, wij) in z.iter_mut().zip(row) {
                    *zj += xi * wij;
                }
            }
            if l == last {
                softmax_in_place(&mut z);
            } else {
                for v in z.iter_mut() {
                    *v = self.arch.activation.apply(*v);
                }
            }
            acts.push(z);
        }
        acts
    }

    /// Predicted class label: argmax of the softmax output, ties broken
    /// toward the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Fraction of samples whose predicted label matches.
    pub fn accuracy(&self, dataset: &Dataset) -> Result<f64> {
        let mut correct = 0usize;
        for (x, &y) in dataset.features.iter().zip(&dataset.labels) {
            if self.predict(x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / dataset.n() as f64)
    }

    /// Soft targets for every row of `dataset`, in sample order.
    pub fn soft_targets(&self, dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
        dataset.features.iter().map(|x| self.forward(x)).collect()
    }
}

/// Batch backpropagation.
///
/// `output_grads[i]` is the gradient of the loss with respect to the softmax
/// output for sample `batch[i]`; the softmax Jacobian is applied here.
/// Per-sample gradients are summed in batch index order.
pub fn backward(
    net: &BaseNetwork,
    batch: &[&[f64]],
    output_grads: &[&[f64]],
) -> Result<Gradients> {
    if batch.len() != output_grads.len() {
        return Err(Error::shape(alloc::format!(
            "{} samples but {} output gradients",
            batch.len(),
            output_grads.len()
        )));
    }
    let k = net.arch.output_dim();
    let mut grads = Gradients::zeros(&net.arch);
    for (x, g) in batch.iter().zip(output_grads) {
        if x.len() != net.arch.input_dim() {
            return Err(Error::shape("input dimension mismatch in batch"));
        }
        if g.len() != k {
            return Err(Error::shape("output gradient length mismatch"));
        }
        accumulate_sample(net, x, g, &mut grads);
    }
    Ok(grads)
}

fn accumulate_sample(net: &BaseNetwork, x: &[f64], output_grad: &[f64], grads: &mut Gradients) {
    let acts = net.forward_trace(x);
    let last = net.arch.n_weight_layers() - 1;
    let h = &acts[last + 1];

    // Softmax Jacobian: dL/dz_j = h_j * (g_j - sum_c g_c h_c).
    let dot: f64 = output_grad.iter().zip(h).map(|(g, p)| g * p).sum();
    let mut delta: Vec<f64> = output_grad
        .iter()
        .zip(h)
        .map(|(g, p)| p * (g - dot))
        .collect();

    for l in (0..=last).rev() {
        let fan_in = net.arch.layer_sizes[l];
        let fan_out = net.arch.layer_sizes[l + 1];
        let input = &acts[l];
        {
            let gw = &mut grads.weights[l];
            for i in 0..fan_in {
                let xi = input[i];
                let row = &mut gw[i * fan_out..(i + 1) * fan_out];
                for (gij, dj) in row.iter_mut().zip(&delta) {
                    *gij += xi * dj;
                }
            }
            for (gb, dj) in grads.biases[l].iter_mut().zip(&delta) {
                *gb += dj;
            }
        }
        if l > 0 {
            let w = &net.weights[l];
            let mut prev = vec![0.0; fan_in];
            for i in 0..fan_in {
                let row = &w[i * fan_out..(i + 1) * fan_out];
                let da: f64 = row.iter().zip(&delta).map(|(wij, dj)| wij * dj).sum();
                prev[i] = da * net.arch.activation.derivative_from_output(input[i]);
            }
            delta = prev;
        }
    }
}

/// One SGD update: `params -= lr * grads`, elementwise.
///
/// `epoch` is only used to report where training diverged if the gradients
/// are non-finite.
pub fn sgd_step(net: &mut BaseNetwork, grads: &Gradients, lr: f64, epoch: usize) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::validation("learning rate must be positive"));
    }
    if grads.weights.len() != net.weights.len()
        || grads
            .weights
            .iter()
            .zip(&net.weights)
            .any(|(g, w)| g.len() != w.len())
        || grads
            .biases
            .iter()
            .zip(&net.biases)
            .any(|(g, b)| g.len() != b.len())
    {
        return Err(Error::shape("gradient shapes do not match parameters"));
    }
    if !grads.is_finite() {
        return Err(Error::Divergence {
            epoch,
            detail: alloc::format!("non-finite gradient"),
        });
    }
    for (w, g) in net.weights.iter_mut().zip(&grads.weights) {
        for (wi, gi) in w.iter_mut().zip(g) {
            *wi -= lr * gi;
        }
    }
    for (b, g) in net.biases.iter_mut().zip(&grads.biases) {
        for (bi, gi) in b.iter_mut().zip(g) {
            *bi -= lr * gi;
        }
    }
    let finite = |vs: &Vec<Vec<f64>>| vs.iter().flatten().all(|v| v.is_finite());
    if !finite(&net.weights) || !finite(&net.biases) {
        return Err(Error::Divergence {
            epoch,
            detail: alloc::format!("non-finite parameter after update"),
        });
    }
    Ok(())
}

/// Learning-rate schedule over a fixed number of epochs.
#[derive(Debug, Clone, PartialEq)]
pub enum LrSchedule {
    /// `lr0` for the first half of training, `lr0/10` until three quarters,
    /// `lr0/100` afterwards.
    Step { lr0: f64, total_epochs: usize },
    /// Cyclic cosine annealing: within each cycle of length
    /// `L = ceil(total_epochs / cycles)`,
    /// `lr(e) = (lr0/2) * (cos(pi * (e mod L) / L) + 1)`.
    CosineCyclic {
        lr0: f64,
        total_epochs: usize,
        cycles: usize,
    },
}

impl LrSchedule {
    pub fn total_epochs(&self) -> usize {
        match self {
            LrSchedule::Step { total_epochs, .. }
            | LrSchedule::CosineCyclic { total_epochs, .. } => *total_epochs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lr0, total) = match self {
            LrSchedule::Step { lr0, total_epochs } => (*lr0, *total_epochs),
            LrSchedule::CosineCyclic {
                lr0,
                total_epochs,
                cycles,
            } => {
                if *cycles == 0 {
                    return Err(Error::validation("cycles must be positive"));
                }
                (*lr0, *total_epochs)
            }
        };
        if !(lr0 > 0.0) {
            return Err(Error::validation("lr0 must be positive"));
        }
        if total == 0 {
            return Err(Error::validation("total_epochs must be positive"));
        }
        Ok(())
    }

    /// Learning rate at `epoch`, which must lie in `[0, total_epochs)`.
    pub fn lr_at(&self, epoch: usize) -> Result<f64> {
        self.validate()?;
        if epoch >= self.total_epochs() {
            return Err(Error::validation(alloc::format!(
                "epoch {epoch} out of range for {} total epochs",
                self.total_epochs()
            )));
        }
        Ok(match self {
            LrSchedule::Step { lr0, total_epochs } => {
                let e = epoch as f64;
                let total = *total_epochs as f64;
                if e < 0.5 * total {
                    *lr0
                } else if e < 0.75 * total {
                    lr0 / 10.0
                } else {
                    lr0 / 100.0
                }
            }
            LrSchedule::CosineCyclic {
                lr0,
                total_epochs,
                cycles,
            } => {
                let cycle_len = total_epochs.div_ceil(*cycles);
                let m = (epoch % cycle_len) as f64;
                (lr0 / 2.0) * (libm::cos(core::f64::consts::PI * m / cycle_len as f64) + 1.0)
            }
        })
    }
}

/// Result of a training run: the trained network and the mean loss per epoch.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub net: BaseNetwork,
    pub epoch_losses: Vec<f64>,
}

/// Trains for epochs `[0, epochs)`; see [`train_range`].
#[allow(clippy::too_many_arguments)]
pub fn train_epochs(
    net: BaseNetwork,
    dataset: &Dataset,
    sample_weights: &[f64],
    loss: &LossSpec,
    schedule: &LrSchedule,
    epochs: usize,
    batch_size: usize,
    seed: u64,
) -> Result<TrainRun> {
    train_range(
        net,
        dataset,
        sample_weights,
        loss,
        schedule,
        0..epochs,
        batch_size,
        seed,
    )
}

/// Trains the network over the given global epoch range.
///
/// The epoch index feeds both the schedule and the per-epoch shuffle seed,
/// so `train_range(a..b)` followed by `train_range(b..c)` is bit-identical
/// to a single `train_range(a..c)` run. Epochs beyond the schedule's horizon
/// keep the final learning rate.
///
/// The per-sample loss gradient is taken at the softmax output and scaled by
/// the reciprocal of the batch's total sample weight, so SGD steps use the
/// weighted batch-mean gradient and the effective step size does not shrink
/// with the dataset size. Reported epoch losses are likewise weighted means.
#[allow(clippy::too_many_arguments)]
pub fn train_range(
    mut net: BaseNetwork,
    dataset: &Dataset,
    sample_weights: &[f64],
    loss: &LossSpec,
    schedule: &LrSchedule,
    epoch_range: core::ops::Range<usize>,
    batch_size: usize,
    seed: u64,
) -> Result<TrainRun> {
    let n = dataset.n();
    if sample_weights.len() != n {
        return Err(Error::shape(alloc::format!(
            "{} sample weights for {} samples",
            sample_weights.len(),
            n
        )));
    }
    if batch_size == 0 {
        return Err(Error::validation("batch_size must be positive"));
    }
    if dataset.dim() != net.arch.input_dim() || dataset.k != net.arch.output_dim() {
        return Err(Error::shape("dataset shape does not match architecture"));
    }
    loss.validate(dataset, sample_weights)?;
    schedule.validate()?;

    let mut epoch_losses = Vec::with_capacity(epoch_range.len());
    for epoch in epoch_range {
        let lr = schedule.lr_at(epoch.min(schedule.total_epochs() - 1))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::epoch_shuffle_seed(seed, epoch));
        // Shuffle a fresh identity permutation so an epoch's order depends
        // only on (seed, epoch), never on earlier epochs.
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for batch in order.chunks(batch_size) {
            let batch_weight: f64 = batch.iter().map(|&i| sample_weights[i]).sum();
            if !(batch_weight > 0.0) {
                // A batch with no weight mass carries no gradient signal.
                continue;
            }
            let scale = 1.0 / batch_weight;
            let mut xs: Vec<&[f64]> = Vec::with_capacity(batch.len());
            let mut grad_rows: Vec<Vec<f64>> = Vec::with_capacity(batch.len());
            for &i in batch {
                let x = dataset.features[i].as_slice();
                let h = net.forward(x)?;
                let (l_i, mut g_i) =
                    loss.loss_and_grad(&h, dataset.labels[i], sample_weights[i], i)?;
                loss_sum += l_i;
                for g in g_i.iter_mut() {
                    *g *= scale;
                }
                xs.push(x);
                grad_rows.push(g_i);
            }
            let grad_refs: Vec<&[f64]> = grad_rows.iter().map(Vec::as_slice).collect();
            let grads = backward(&net, &xs, &grad_refs)?;
            sgd_step(&mut net, &grads, lr, epoch)?;
        }
        let total_weight: f64 = sample_weights.iter().sum();
        let mean_loss = loss_sum / total_weight.max(f64::MIN_POSITIVE);
        if !mean_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: alloc::format!("mean loss {mean_loss}"),
            });
        }
        epoch_losses.push(mean_loss);
    }
    Ok(TrainRun { net, epoch_losses })
}

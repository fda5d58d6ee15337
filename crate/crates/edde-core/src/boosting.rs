//! The sequential diversity-driven boosting pipeline.
//!
//! Round 1 trains a base model with plain weighted cross-entropy; every
//! later round warm-starts a student from the previous model by layer-wise
//! transfer, trains it with the diversity-driven loss against the frozen
//! soft targets of the ensemble so far, then updates per-sample weights from
//! the student's similarity to the ensemble and its bias to the labels, and
//! assigns the student a voting weight. Rounds whose voting weight is not
//! positive are skipped. Prediction is the alpha-weighted, alpha-normalized
//! average of member soft targets.

use alloc::vec::Vec;

use crate::data::{one_hot, Dataset};
use crate::loss::{LossSpec, NORM_FLOOR};
use crate::metrics::PredictionMatrix;
use crate::nn::{init_network, train_epochs, Architecture, BaseNetwork, LrSchedule};
use crate::seeding;
use crate::simplex::{argmax, check_probability_row, check_same_len, scaled_l2};
use crate::transfer::{beta_search, BetaSearchConfig, ProbeTrainSettings, TransferSpec};
use crate::{Error, Result};

/// Smoothing floor for the correct/incorrect mass sums in the voting-weight
/// formulas, so perfectly fitting models get a large finite weight instead
/// of an infinity.
pub const ALPHA_FLOOR: f64 = 1e-10;

/// Normalized per-sample training weights for one boosting round.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights {
    pub w: Vec<f64>,
    /// 1-based round index the weights feed into.
    pub round: usize,
}

impl SampleWeights {
    pub fn uniform(n: usize) -> Self {
        SampleWeights {
            w: alloc::vec![1.0 / n as f64; n],
            round: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability_row(&self.w, 1e-9, "sample weights")
    }
}

/// One trained base model and its voting weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub net: BaseNetwork,
    pub alpha: f64,
}

/// An ordered ensemble of base models with positive voting weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub members: Vec<EnsembleMember>,
    pub gamma: f64,
    pub beta: f64,
    /// 1-based indices of rounds dropped for non-positive voting weight.
    pub skipped_rounds: Vec<usize>,
}

impl Ensemble {
    /// Normalized alpha-weighted soft-target combination for one input.
    pub fn predict_soft(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensemble_predict(self, x)
    }

    /// Predicted label: argmax with lowest-index tie-break.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_soft(x)?))
    }

    pub fn accuracy(&self, dataset: &Dataset) -> Result<f64> {
        let mut correct = 0usize;
        for (x, &y) in dataset.features.iter().zip(&dataset.labels) {
            if self.predict(x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / dataset.n() as f64)
    }

    /// Combined soft targets over a full dataset, in sample order.
    pub fn soft_targets(&self, dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
        dataset
            .features
            .iter()
            .map(|x| self.predict_soft(x))
            .collect()
    }

    /// Per-member prediction matrices over a dataset, for the metrics suite.
    pub fn member_predictions(&self, dataset: &Dataset) -> Result<Vec<PredictionMatrix>> {
        self.members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                PredictionMatrix::new(
                    alloc::format!("member_{i}"),
                    m.net.soft_targets(dataset)?,
                )
            })
            .collect()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.alpha).collect()
    }
}

/// Similarity of a model's soft target to the ensemble's on one sample:
/// `1 - (sqrt(2)/2) * ||h - H||_2`, in `[0, 1]`.
pub fn sample_sim(h_pred: &[f64], ensemble_pred: &[f64]) -> Result<f64> {
    check_same_len(h_pred.len(), ensemble_pred.len(), "sample_sim inputs")?;
    Ok(1.0 - scaled_l2(h_pred, ensemble_pred))
}

/// Bias of a model's soft target to the one-hot label on one sample:
/// `(sqrt(2)/2) * ||h - y||_2`, in `[0, 1]`.
pub fn sample_bias(h_pred: &[f64], y_one_hot: &[f64]) -> Result<f64> {
    check_same_len(h_pred.len(), y_one_hot.len(), "sample_bias inputs")?;
    Ok(scaled_l2(h_pred, y_one_hot))
}

/// Sample-weight update for one round.
///
/// Misclassified samples get unnormalized mass
/// `W_1(i) * exp(Sim(i) + Bias(i))`; correctly classified samples keep
/// `W_1(i)` (exponent zero). The result is normalized to sum 1. Note the
/// update always starts from the round-1 uniform weights, not the previous
/// round's.
pub fn update_weights(
    w1: &SampleWeights,
    preds: &PredictionMatrix,
    labels: &[usize],
    ensemble_preds: &PredictionMatrix,
) -> Result<SampleWeights> {
    let n = w1.w.len();
    check_same_len(preds.n(), n, "predictions vs weights")?;
    check_same_len(labels.len(), n, "labels vs weights")?;
    check_same_len(ensemble_preds.n(), n, "ensemble predictions vs weights")?;
    check_same_len(preds.k(), ensemble_preds.k(), "class counts")?;
    w1.validate()?;

    let k = preds.k();
    let mut unnormalized = Vec::with_capacity(n);
    let mut total = 0.0;
    for i in 0..n {
        let row = &preds.soft_targets[i];
        let misclassified = argmax(row) != labels[i];
        let u = if misclassified {
            let sim = sample_sim(row, &ensemble_preds.soft_targets[i])?;
            let bias = sample_bias(row, &one_hot(labels[i], k)?)?;
            w1.w[i] * libm::exp(sim + bias)
        } else {
            w1.w[i]
        };
        unnormalized.push(u);
        total += u;
    }
    if !(total > 0.0) {
        return Err(Error::Internal(alloc::format!(
            "weight update produced zero total mass"
        )));
    }
    for u in &mut unnormalized {
        *u /= total;
    }
    Ok(SampleWeights {
        w: unnormalized,
        round: w1.round + 1,
    })
}

/// Voting weight of a base model from round 2 on:
/// `0.5 * ln(sum_correct Sim_i W_i / sum_incorrect Sim_i W_i)`, with both
/// sums floored at [`ALPHA_FLOOR`]. Can be negative; the orchestrator skips
/// such rounds.
pub fn model_alpha(
    preds: &PredictionMatrix,
    labels: &[usize],
    sims: &[f64],
    weights: &SampleWeights,
) -> Result<f64> {
    let n = preds.n();
    check_same_len(labels.len(), n, "labels vs predictions")?;
    check_same_len(sims.len(), n, "sims vs predictions")?;
    check_same_len(weights.w.len(), n, "weights vs predictions")?;
    let mut correct_mass = 0.0;
    let mut incorrect_mass = 0.0;
    for i in 0..n {
        let mass = sims[i] * weights.w[i];
        if argmax(&preds.soft_targets[i]) == labels[i] {
            correct_mass += mass;
        } else {
            incorrect_mass += mass;
        }
    }
    Ok(0.5 * libm::log(correct_mass.max(ALPHA_FLOOR) / incorrect_mass.max(ALPHA_FLOOR)))
}

/// Voting weight of the first base model: the ratio of correct to incorrect
/// prediction counts, with the denominator floored.
pub fn first_alpha(preds: &PredictionMatrix, labels: &[usize]) -> Result<f64> {
    check_same_len(labels.len(), preds.n(), "labels vs predictions")?;
    let correct = preds
        .soft_targets
        .iter()
        .zip(labels)
        .filter(|(row, &y)| argmax(row) == y)
        .count();
    let incorrect = preds.n() - correct;
    Ok(correct as f64 / (incorrect as f64).max(ALPHA_FLOOR))
}

/// Normalized ensemble prediction `sum_t alpha_t h_t(x) / sum_t alpha_t`.
pub fn ensemble_predict(ens: &Ensemble, x: &[f64]) -> Result<Vec<f64>> {
    if ens.members.is_empty() {
        return Err(Error::validation("ensemble has no members"));
    }
    let total: f64 = ens.members.iter().map(|m| m.alpha).sum();
    if !(total > 0.0) {
        return Err(Error::validation(
            "ensemble has no positive voting mass to normalize by",
        ));
    }
    let k = ens.members[0].net.arch.output_dim();
    let mut out = alloc::vec![0.0; k];
    for m in &ens.members {
        let h = m.net.forward(x)?;
        for (o, p) in out.iter_mut().zip(&h) {
            *o += m.alpha * p;
        }
    }
    for o in &mut out {
        *o /= total;
    }
    Ok(out)
}

/// Transfer proportion: a fixed value or the fold-based search.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaChoice {
    Fixed(f64),
    Auto(BetaSearchConfig),
}

/// Learning-rate schedule parameters without the epoch horizon, which each
/// training phase supplies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub lr0: f64,
    /// Cosine cycles; ignored by the step schedule.
    pub cycles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Step,
    CosineCyclic,
}

impl ScheduleSpec {
    pub fn for_epochs(&self, epochs: usize) -> LrSchedule {
        match self.kind {
            ScheduleKind::Step => LrSchedule::Step {
                lr0: self.lr0,
                total_epochs: epochs,
            },
            ScheduleKind::CosineCyclic => LrSchedule::CosineCyclic {
                lr0: self.lr0,
                total_epochs: epochs,
                cycles: self.cycles.max(1),
            },
        }
    }
}

/// Full pipeline hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EddeConfig {
    pub arch: Architecture,
    /// Number of boosting rounds `T`.
    pub t: usize,
    /// Strength of the diversity-driven loss.
    pub gamma: f64,
    pub beta: BetaChoice,
    pub epochs_first: usize,
    pub epochs_rest: usize,
    pub schedule: ScheduleSpec,
    pub batch_size: usize,
    pub seed: u64,
}

impl EddeConfig {
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        if self.t == 0 {
            return Err(Error::validation("T must be at least 1"));
        }
        if self.epochs_first == 0 || self.epochs_rest == 0 {
            return Err(Error::validation("epoch counts must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be positive"));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::validation("gamma must be nonnegative"));
        }
        if let BetaChoice::Fixed(b) = self.beta {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::validation("beta must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Diagnostics for one boosting round.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub alpha: f64,
    pub skipped: bool,
    pub epoch_losses: Vec<f64>,
    /// `W_t` after this round's update (`W_1` for round 1).
    pub weights_after: Vec<f64>,
    /// Per-sample `Sim_t`; empty for round 1.
    pub sims: Vec<f64>,
    /// Per-sample `Bias_t`; empty for round 1.
    pub biases: Vec<f64>,
}

/// A completed pipeline run.
#[derive(Debug, Clone)]
pub struct EddeRun {
    pub ensemble: Ensemble,
    pub rounds: Vec<RoundRecord>,
    /// The beta actually used (resolved from the search in auto mode).
    pub beta: f64,
    /// Probe trace when beta was searched.
    pub beta_trace: Option<Vec<crate::transfer::BetaProbe>>,
}

/// Called after each round completes, before the next round starts; lets a
/// driver attach timing or streaming progress output.
pub type RoundHook<'a> = &'a mut dyn FnMut(&RoundRecord);

fn train_prediction_matrix(
    net: &BaseNetwork,
    dataset: &Dataset,
    id: usize,
) -> Result<PredictionMatrix> {
    PredictionMatrix::new(alloc::format!("member_{id}"), net.soft_targets(dataset)?)
}

/// Runs the full boosting pipeline on `dataset`.
pub fn train_edde(dataset: &Dataset, cfg: &EddeConfig, hook: RoundHook) -> Result<EddeRun> {
    cfg.validate()?;
    let n = dataset.n();
    let w1 = SampleWeights::uniform(n);

    // Resolve beta; in auto mode the search's teacher is reused as h1.
    let (beta, beta_trace, pretrained_h1) = match &cfg.beta {
        BetaChoice::Fixed(b) => (*b, None, None),
        BetaChoice::Auto(search_cfg) => {
            let mut search_cfg = search_cfg.clone();
            if search_cfg.teacher_epochs == 0 {
                search_cfg.teacher_epochs = cfg.epochs_first;
            }
            let outcome = beta_search(
                dataset,
                &cfg.arch,
                &search_cfg,
                &ProbeTrainSettings {
                    lr0: cfg.schedule.lr0,
                    batch_size: cfg.batch_size,
                    seed: cfg.seed,
                },
            )?;
            (outcome.beta, Some(outcome.trace), Some(outcome.teacher))
        }
    };

    // Round 1: plain weighted cross-entropy.
    let mut rounds = Vec::with_capacity(cfg.t);
    let (h1, first_losses) = match pretrained_h1 {
        Some(net) => (net, Vec::new()),
        None => {
            let run = train_epochs(
                init_network(&cfg.arch, seeding::member_init_seed(cfg.seed, 1))?,
                dataset,
                &w1.w,
                &LossSpec::CrossEntropy,
                &cfg.schedule.for_epochs(cfg.epochs_first),
                cfg.epochs_first,
                cfg.batch_size,
                seeding::member_train_seed(cfg.seed, 1),
            )
            .map_err(|e| e.in_round(1))?;
            (run.net, run.epoch_losses)
        }
    };
    let h1_preds = train_prediction_matrix(&h1, dataset, 1)?;
    let alpha1 = first_alpha(&h1_preds, &dataset.labels)?;
    let mut ensemble = Ensemble {
        members: alloc::vec![EnsembleMember {
            net: h1.clone(),
            alpha: alpha1,
        }],
        gamma: cfg.gamma,
        beta,
        skipped_rounds: Vec::new(),
    };
    let record = RoundRecord {
        round: 1,
        alpha: alpha1,
        skipped: false,
        epoch_losses: first_losses,
        weights_after: w1.w.clone(),
        sims: Vec::new(),
        biases: Vec::new(),
    };
    hook(&record);
    rounds.push(record);

    let mut prev_net = h1;
    let mut weights = w1.clone();
    for t in 2..=cfg.t {
        // Frozen soft targets of the ensemble so far, computed once per round.
        let ensemble_targets = ensemble.soft_targets(dataset)?;

        let student = crate::transfer::transfer_init(
            &prev_net,
            &TransferSpec {
                beta,
                fresh_seed: seeding::member_fresh_seed(cfg.seed, t),
            },
        )
        .map_err(|e| e.in_round(t))?;
        let run = train_epochs(
            student,
            dataset,
            &weights.w,
            &LossSpec::Edde {
                gamma: cfg.gamma,
                ensemble_targets: ensemble_targets.clone(),
                norm_floor: NORM_FLOOR,
            },
            &cfg.schedule.for_epochs(cfg.epochs_rest),
            cfg.epochs_rest,
            cfg.batch_size,
            seeding::member_train_seed(cfg.seed, t),
        )
        .map_err(|e| e.in_round(t))?;
        let student = run.net;

        let preds = train_prediction_matrix(&student, dataset, t)?;
        let mut sims = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);
        for i in 0..n {
            sims.push(sample_sim(&preds.soft_targets[i], &ensemble_targets[i])?);
            biases.push(sample_bias(
                &preds.soft_targets[i],
                &one_hot(dataset.labels[i], dataset.k)?,
            )?);
        }
        let h_matrix = PredictionMatrix::new("ensemble", ensemble_targets)?;
        let new_weights = update_weights(&w1, &preds, &dataset.labels, &h_matrix)?;
        let alpha = model_alpha(&preds, &dataset.labels, &sims, &new_weights)?;

        let skipped = alpha <= 0.0;
        if skipped {
            ensemble.skipped_rounds.push(t);
        } else {
            ensemble.members.push(EnsembleMember {
                net: student.clone(),
                alpha,
            });
        }
        let record = RoundRecord {
            round: t,
            alpha,
            skipped,
            epoch_losses: run.epoch_losses,
            weights_after: new_weights.w.clone(),
            sims,
            biases,
        };
        hook(&record);
        rounds.push(record);

        prev_net = student;
        weights = new_weights;
    }

    Ok(EddeRun {
        ensemble,
        rounds,
        beta,
        beta_trace,
    })
}

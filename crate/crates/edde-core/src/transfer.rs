//! Selective layer-wise knowledge transfer.
//!
//! A student network is initialized by copying the first `floor(beta * L)`
//! weight layers (counted from the input) of a teacher with the same
//! architecture and drawing the remaining layers fresh; all layers stay
//! trainable. The fold-based search locates the largest `beta` for which
//! the student behaves the same on data the teacher saw and data it did
//! not, i.e. the boundary between generic and teacher-specific layers.

use alloc::vec::Vec;

use crate::data::{fold_split, Dataset, FoldSplit};
use crate::loss::LossSpec;
use crate::nn::{init_network, train_range, Architecture, BaseNetwork, LrSchedule};
use crate::seeding;
use crate::{Error, Result};

/// Transfer proportion and the seed for the re-initialized layers.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSpec {
    /// Fraction of weight layers to copy, in `[0, 1]`.
    pub beta: f64,
    /// Seed for the freshly initialized upper layers.
    pub fresh_seed: u64,
}

/// Number of weight layers copied for a given `beta`: `floor(beta * L)`,
/// with a small epsilon so exact products like `0.3 * 10` do not round down.
pub fn layers_to_copy(beta: f64, n_weight_layers: usize) -> usize {
    (libm::floor(beta * n_weight_layers as f64 + 1e-9) as usize).min(n_weight_layers)
}

/// Initializes a student from a teacher: the first `floor(beta * L)` weight
/// layers are copied bit-exactly, the rest come from the `fresh_seed`
/// stream. With `beta = 0` the student equals
/// `init_network(arch, fresh_seed)`.
pub fn transfer_init(teacher: &BaseNetwork, spec: &TransferSpec) -> Result<BaseNetwork> {
    if !(0.0..=1.0).contains(&spec.beta) {
        return Err(Error::validation("beta must lie in [0, 1]"));
    }
    let mut student = init_network(&teacher.arch, spec.fresh_seed)?;
    let copied = layers_to_copy(spec.beta, teacher.arch.n_weight_layers());
    for l in 0..copied {
        student.weights[l].clone_from(&teacher.weights[l]);
        student.biases[l].clone_from(&teacher.biases[l]);
    }
    Ok(student)
}

/// Parameters of the fold-based beta search.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSearchConfig {
    /// Number of folds `n`; the last two serve as the seen/unseen probes.
    pub n_folds: usize,
    /// The probe averages accuracy over this many initial epochs.
    pub probe_epochs: usize,
    /// Candidate spacing; candidates are `1, 1-step, ..., 0`.
    pub beta_step: f64,
    /// Largest acceptable |acc_seen - acc_unseen| in accuracy fractions.
    pub gap_tolerance: f64,
    pub teacher_epochs: usize,
    pub student_epochs: usize,
}

impl Default for BetaSearchConfig {
    fn default() -> Self {
        BetaSearchConfig {
            n_folds: 6,
            probe_epochs: 5,
            beta_step: 0.1,
            gap_tolerance: 0.01,
            teacher_epochs: 30,
            student_epochs: 30,
        }
    }
}

impl BetaSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 3 {
            return Err(Error::validation("beta search needs at least 3 folds"));
        }
        if !(self.beta_step > 0.0 && self.beta_step <= 1.0) {
            return Err(Error::validation("beta_step must lie in (0, 1]"));
        }
        if !(self.gap_tolerance >= 0.0) {
            return Err(Error::validation("gap_tolerance must be nonnegative"));
        }
        if self.probe_epochs == 0 || self.teacher_epochs == 0 || self.student_epochs == 0 {
            return Err(Error::validation("epoch counts must be positive"));
        }
        Ok(())
    }

    /// The decreasing candidate list `{1, 1-step, ..., 0}`.
    pub fn candidates(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let beta = 1.0 - f64::from(i) * self.beta_step;
            if beta <= 1e-9 {
                break;
            }
            out.push(beta);
            i += 1;
        }
        out.push(0.0);
        out
    }
}

/// Training settings shared by the teacher and the probe students.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrainSettings {
    pub lr0: f64,
    pub batch_size: usize,
    pub seed: u64,
}

/// One probe row of the search trace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BetaProbe {
    pub beta: f64,
    pub acc_seen: f64,
    pub acc_unseen: f64,
    pub gap: f64,
}

/// Search outcome: the chosen beta, the teacher (reusable as the first
/// ensemble member), and the full probe trace.
#[derive(Debug, Clone)]
pub struct BetaSearchOutcome {
    pub beta: f64,
    pub teacher: BaseNetwork,
    pub trace: Vec<BetaProbe>,
}

/// Fold layout used by the search: student training folds plus the two
/// probe folds.
pub struct ProbeFolds {
    pub student_train: Dataset,
    /// Seen by the teacher, not by the student.
    pub seen: Dataset,
    /// Seen by neither.
    pub unseen: Dataset,
}

fn uniform_weights(n: usize) -> Vec<f64> {
    alloc::vec![1.0 / n as f64; n]
}

fn prepare_folds(dataset: &Dataset, split: &FoldSplit) -> Result<ProbeFolds> {
    let n = split.fold_indices.len();
    let student_idx = split.gather(&(0..n - 2).collect::<Vec<_>>());
    Ok(ProbeFolds {
        student_train: dataset.subset(&student_idx)?,
        seen: dataset.subset(&split.fold_indices[n - 2])?,
        unseen: dataset.subset(&split.fold_indices[n - 1])?,
    })
}

/// Trains a transferred student for the first `probe_epochs` epochs and
/// returns its mean accuracy on the seen and unseen probe folds.
///
/// Accuracy is evaluated after each epoch and averaged, so early-epoch
/// behavior dominates, which is exactly where transferred knowledge shows.
pub fn probe_gap(
    teacher: &BaseNetwork,
    beta: f64,
    folds: &ProbeFolds,
    cfg: &BetaSearchConfig,
    settings: &ProbeTrainSettings,
    fresh_seed: u64,
) -> Result<(f64, f64)> {
    cfg.validate()?;
    let mut student = transfer_init(
        teacher,
        &TransferSpec {
            beta,
            fresh_seed,
        },
    )?;
    let schedule = LrSchedule::Step {
        lr0: settings.lr0,
        total_epochs: cfg.student_epochs,
    };
    let weights = uniform_weights(folds.student_train.n());
    let epochs = cfg.probe_epochs.min(cfg.student_epochs);
    let train_seed = seeding::mix(settings.seed, 0xBE7A ^ fresh_seed);
    let mut seen_sum = 0.0;
    let mut unseen_sum = 0.0;
    for e in 0..epochs {
        let run = train_range(
            student,
            &folds.student_train,
            &weights,
            &LossSpec::CrossEntropy,
            &schedule,
            e..e + 1,
            settings.batch_size,
            train_seed,
        )?;
        student = run.net;
        seen_sum += student.accuracy(&folds.seen)?;
        unseen_sum += student.accuracy(&folds.unseen)?;
    }
    Ok((seen_sum / epochs as f64, unseen_sum / epochs as f64))
}

/// Fold-based search for the transfer proportion.
///
/// Trains a teacher on the first `n-1` folds, then scans `beta` downward
/// from 1, probing each candidate with [`probe_gap`], and returns the
/// largest candidate whose seen/unseen accuracy gap is within tolerance
/// (0 if none qualifies).
pub fn beta_search(
    dataset: &Dataset,
    arch: &Architecture,
    cfg: &BetaSearchConfig,
    settings: &ProbeTrainSettings,
) -> Result<BetaSearchOutcome> {
    cfg.validate()?;
    let split = fold_split(dataset, cfg.n_folds, seeding::mix(settings.seed, 0xF01D))?;
    if split.fold_indices.iter().any(Vec::is_empty) {
        return Err(Error::validation("beta search produced an empty fold"));
    }
    let n = cfg.n_folds;
    let teacher_idx = split.gather(&(0..n - 1).collect::<Vec<_>>());
    let teacher_data = dataset.subset(&teacher_idx)?;
    let teacher = train_range(
        init_network(arch, seeding::member_init_seed(settings.seed, 1))?,
        &teacher_data,
        &uniform_weights(teacher_data.n()),
        &LossSpec::CrossEntropy,
        &LrSchedule::Step {
            lr0: settings.lr0,
            total_epochs: cfg.teacher_epochs,
        },
        0..cfg.teacher_epochs,
        settings.batch_size,
        seeding::member_train_seed(settings.seed, 1),
    )?
    .net;

    let folds = prepare_folds(dataset, &split)?;
    let mut trace = Vec::new();
    let mut chosen = None;
    for (i, beta) in cfg.candidates().into_iter().enumerate() {
        let fresh_seed = seeding::mix(settings.seed, 0xF2E5 + i as u64);
        let (acc_seen, acc_unseen) =
            probe_gap(&teacher, beta, &folds, cfg, settings, fresh_seed)?;
        let gap = (acc_seen - acc_unseen).abs();
        trace.push(BetaProbe {
            beta,
            acc_seen,
            acc_unseen,
            gap,
        });
        if gap <= cfg.gap_tolerance {
            chosen = Some(beta);
            break;
        }
    }
    Ok(BetaSearchOutcome {
        beta: chosen.unwrap_or(0.0),
        teacher,
        trace,
    })
}

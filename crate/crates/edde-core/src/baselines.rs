//! Baseline ensemble trainers for comparison runs.
//!
//! Single model, bagging, AdaBoost.M1, a simplified AdaBoost.NC, snapshot
//! ensembles under a cyclic cosine schedule, and sequential distillation
//! (each generation matching the previous one's soft targets). All of them
//! produce the same [`Ensemble`] type as the main pipeline, so evaluation,
//! metrics, and persistence are uniform.
//!
//! Sample weights always enter the loss multiplicatively; no trainer
//! resamples the data except bagging's bootstrap draw.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boosting::{
    Ensemble, EnsembleMember, RoundHook, RoundRecord, SampleWeights, ScheduleSpec,
};
use crate::data::Dataset;
use crate::loss::LossSpec;
use crate::metrics::amb_nc;
use crate::nn::{init_network, train_range, Architecture, BaseNetwork};
use crate::seeding;
use crate::simplex::argmax;
use crate::{Error, Result};

/// Which baseline to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Single,
    Bagging,
    AdaboostM1,
    AdaboostNc,
    Snapshot,
    Bans,
}

/// Baseline hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub arch: Architecture,
    /// Ensemble size; cycles for snapshot, generations for distillation.
    pub t: usize,
    pub epochs_per_model: usize,
    pub schedule: ScheduleSpec,
    pub batch_size: usize,
    /// AdaBoost.NC ambiguity-penalty exponent.
    pub lambda_nc: f64,
    /// Label weight mixed into the distillation target for generations >= 2;
    /// 0 means pure teacher matching.
    pub bans_label_mix: f64,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        if self.t == 0 {
            return Err(Error::validation("T must be at least 1"));
        }
        if self.epochs_per_model == 0 {
            return Err(Error::validation("epochs_per_model must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be positive"));
        }
        if !(self.lambda_nc >= 0.0) {
            return Err(Error::validation("lambda_nc must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.bans_label_mix) {
            return Err(Error::validation("bans_label_mix must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A baseline training run: the ensemble plus per-round diagnostics.
#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub ensemble: Ensemble,
    pub rounds: Vec<RoundRecord>,
}

/// Dispatches to the per-method trainer.
pub fn train_baseline(
    dataset: &Dataset,
    cfg: &BaselineConfig,
    hook: RoundHook,
) -> Result<BaselineRun> {
    cfg.validate()?;
    match cfg.method {
        BaselineMethod::Single => train_single(dataset, cfg, hook),
        BaselineMethod::Bagging => train_bagging(dataset, cfg, hook),
        BaselineMethod::AdaboostM1 => train_adaboost_m1(dataset, cfg, hook),
        BaselineMethod::AdaboostNc => train_adaboost_nc(dataset, cfg, hook),
        BaselineMethod::Snapshot => train_snapshot(dataset, cfg, hook),
        BaselineMethod::Bans => train_bans(dataset, cfg, hook),
    }
}

fn uniform(n: usize) -> Vec<f64> {
    alloc::vec![1.0 / n as f64; n]
}

fn uniform_ensemble(members: Vec<BaseNetwork>) -> Ensemble {
    Ensemble {
        members: members
            .into_iter()
            .map(|net| EnsembleMember { net, alpha: 1.0 })
            .collect(),
        gamma: 0.0,
        beta: 0.0,
        skipped_rounds: Vec::new(),
    }
}

/// Trains one member with the given loss and weights; round indices feed the
/// seed derivation so every member gets its own streams.
#[allow(clippy::too_many_arguments)]
fn train_member(
    dataset: &Dataset,
    cfg: &BaselineConfig,
    round: usize,
    weights: &[f64],
    loss: &LossSpec,
) -> Result<crate::nn::TrainRun> {
    train_range(
        init_network(&cfg.arch, seeding::member_init_seed(cfg.seed, round))?,
        dataset,
        weights,
        loss,
        &cfg.schedule.for_epochs(cfg.epochs_per_model),
        0..cfg.epochs_per_model,
        cfg.batch_size,
        seeding::member_train_seed(cfg.seed, round),
    )
    .map_err(|e| e.in_round(round))
}

/// One plain cross-entropy model, wrapped as a single-member ensemble.
/// `cfg.t` is ignored.
pub fn train_single(
    dataset: &Dataset,
    cfg: &BaselineConfig,
    hook: RoundHook,
) -> Result<BaselineRun> {
    cfg.validate()?;
    let run = train_member(dataset, cfg, 1, &uniform(dataset.n()), &LossSpec::CrossEntropy)?;
    let record = RoundRecord {
        round: 1,
        alpha: 1.0,
        skipped: false,
        epoch_losses: run.epoch_losses,
        weights_after: uniform(dataset.n()),
        sims: Vec::new(),
        biases: Vec::new(),
    };
    hook(&record);
    Ok(BaselineRun {
        ensemble: uniform_ensemble(alloc::vec![run.net]),
        rounds: alloc::vec![record],
    })
}

/// Draws an N-sample bootstrap index multiset for member `round`.
pub fn bootstrap_indices(n: usize, seed: u64, round: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeding::mix(seed, 0xB007 + round as u64));
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Bootstrap aggregation: each member trains on an N-sample resample with
/// replacement; the vote is a uniform average.
pub fn train_bagging(
    dataset: &Dataset,
    cfg: &BaselineConfig,
    hook: RoundHook,
) -> Result<BaselineRun> {
    cfg.validate()?;
    let mut members = Vec::with_capacity(cfg.t);
    let mut rounds = Vec::with_capacity(cfg.t);
    for t in 1..=cfg.t {
        let idx = bootstrap_indices(dataset.n(), cfg.seed, t);
        let resample = dataset.subset(&idx)?;
        let run = train_member(&resample, cfg, t, &uniform(resample.n()), &LossSpec::CrossEntropy)?;
        members.push(run.net);
        let record = RoundRecord {
            round: t,
            alpha: 1.0,
            skipped: false,
            epoch_losses: run.epoch_losses,
            weights_after: Vec::new(),
            sims: Vec::new(),
            biases: Vec::new(),
        };
        hook(&record);
        rounds.push(record);
    }
    Ok(BaselineRun {
        ensemble: uniform_ensemble(members),
        rounds,
    })
}

/// Classic sample-reweighting boosting with multiplicative weights in the
/// loss: `eps_t` is the weighted error, `alpha_t = 0.5 ln((1-eps)/eps)`,
/// and misclassified samples get their weight multiplied by `e^{alpha_t}`
/// before renormalization. Rounds with `eps_t >= 0.5` are skipped.
pub fn train_adaboost_m1(
    dataset: &Dataset,
    cfg: &BaselineConfig,
    hook: RoundHook,
) -> Result<BaselineRun> {
    train_adaboost_impl(dataset, cfg, hook, None)
}

/// AdaBoost.M1 plus an ambiguity penalty on the weight update:
/// `W_{t+1}(i) ∝ W_t(i) * e^{alpha_t * [misclassified]} * (1 + |amb_t(i)|)^lambda`.
///
/// The penalty rule is a reconstruction, not a literal reproduction of the
/// original AdaBoost.NC; with `lambda_nc = 0` it degenerates exactly to
/// [`train_adaboost_m1`].
pub fn train_adaboost_nc(
    dataset: &Dataset,
    cfg: &BaselineConfig,
    hook: RoundHook,
) -> Result<BaselineRun> {
    train_adaboost_impl(dataset, cfg, hook, Some(cfg.lambda_nc))
}

fn correctness(preds: &[Vec<f64>], labels: &[usize]) -> Vec<i8> {
    preds
        .iter()
        .zip(labels)
        .map(|(row, &y)| if argmax(row) == y { 1 } else { -1 })
        .collect()
}

fn train_adaboost_impl(
    dataset: &Dataset,
    cfg: &BaselineConfig,
    hook: RoundHook,
    lambda: Option<f64>,
) -> Result<BaselineRun> {
    cfg.validate()?;
    let n = dataset.n();
    let mut weights = SampleWeights::uniform(n);
    let mut members: Vec<EnsembleMember> = Vec::new();
    let mut member_correct: Vec<Vec<i8>> = Vec::new();
    let mut rounds = Vec::with_capacity(cfg.t);
    let mut skipped_rounds = Vec::new();

    for t in 1..=cfg.t {
        let run = train_member(dataset, cfg, t, &weights.w, &LossSpec::CrossEntropy)?;
        let preds = run.net.soft_targets(dataset)?;
        let mis: Vec<bool> = preds
            .iter()
            .zip(&dataset.labels)
            .map(|(row, &y)| argmax(row) != y)
            .collect();
        let eps: f64 = mis
            .iter()
            .zip(&weights.w)
            .filter(|(m, _)| **m)
            .map(|(_, w)| w)
            .sum();

        if eps >= 0.5 {
            skipped_rounds.push(t);
            let record = RoundRecord {
                round: t,
                alpha: 0.0,
                skipped: true,
                epoch_losses: run.epoch_losses,
                weights_after: weights.w.clone(),
                sims: Vec::new(),
                biases: Vec::new(),
            };
            hook(&record);
            rounds.push(record);
            continue;
        }

        let alpha = 0.5 * libm::log((1.0 - eps) / eps.max(crate::boosting::ALPHA_FLOOR));
        members.push(EnsembleMember {
            net: run.net.clone(),
            alpha,
        });
        member_correct.push(correctness(&preds, &dataset.labels));

        // Ambiguity of the ensemble built so far, for the NC penalty.
        let penalty: Option<Vec<f64>> = match lambda {
            None => None,
            Some(l) => {
                let ens = Ensemble {
                    members: members.clone(),
                    gamma: 0.0,
                    beta: 0.0,
                    skipped_rounds: Vec::new(),
                };
                let ens_preds = ens.soft_targets(dataset)?;
                let ens_correct = correctness(&ens_preds, &dataset.labels);
                let alphas: Vec<f64> = members.iter().map(|m| m.alpha).collect();
                let amb = amb_nc(&ens_correct, &member_correct, &alphas)?;
                Some(amb.iter().map(|a| libm::pow(1.0 + a.abs(), l)).collect())
            }
        };

        let mut unnormalized = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 0..n {
            let mut u = weights.w[i];
            if mis[i] {
                u *= libm::exp(alpha);
            }
            if let Some(p) = &penalty {
                u *= p[i];
            }
            unnormalized.push(u);
            total += u;
        }
        for u in &mut unnormalized {
            *u /= total;
        }
        weights = SampleWeights {
            w: unnormalized,
            round: t + 1,
        };

        let record = RoundRecord {
            round: t,
            alpha,
            skipped: false,
            epoch_losses: run.epoch_losses,
            weights_after: weights.w.clone(),
            sims: Vec::new(),
            biases: Vec::new(),
        };
        hook(&record);
        rounds.push(record);
    }

    if members.is_empty() {
        // All rounds skipped; fall back to the round-1 model with unit vote.
        let run = train_member(dataset, cfg, 1, &uniform(n), &LossSpec::CrossEntropy)?;
        members.push(EnsembleMember {
            net: run.net,
            alpha: 1.0,
        });
    }
    Ok(BaselineRun {
        ensemble: Ensemble {
            members,
            gamma: 0.0,
            beta: 0.0,
            skipped_rounds,
        },
        rounds,
    })
}

/// One continuous training run under a cyclic cosine schedule; the member
/// networks are the parameter snapshots captured at the end of each of the
/// `cfg.t` cycles, averaged with uniform votes.
pub fn train_snapshot(
    dataset: &Dataset,
    cfg: &BaselineConfig,
    hook: RoundHook,
) -> Result<BaselineRun> {
    cfg.validate()?;
    let cycle_len = cfg.epochs_per_model;
    let total = cycle_len * cfg.t;
    let schedule = crate::nn::LrSchedule::CosineCyclic {
        lr0: cfg.schedule.lr0,
        total_epochs: total,
        cycles: cfg.t,
    };
    let weights = uniform(dataset.n());
    let mut net = init_network(&cfg.arch, seeding::member_init_seed(cfg.seed, 1))?;
    let train_seed = seeding::member_train_seed(cfg.seed, 1);
    let mut members = Vec::with_capacity(cfg.t);
    let mut rounds = Vec::with_capacity(cfg.t);
    for c in 0..cfg.t {
        let run = train_range(
            net,
            dataset,
            &weights,
            &LossSpec::CrossEntropy,
            &schedule,
            c * cycle_len..(c + 1) * cycle_len,
            cfg.batch_size,
            train_seed,
        )
        .map_err(|e| e.in_round(c + 1))?;
        net = run.net;
        members.push(net.clone());
        let record = RoundRecord {
            round: c + 1,
            alpha: 1.0,
            skipped: false,
            epoch_losses: run.epoch_losses,
            weights_after: Vec::new(),
            sims: Vec::new(),
            biases: Vec::new(),
        };
        hook(&record);
        rounds.push(record);
    }
    Ok(BaselineRun {
        ensemble: uniform_ensemble(members),
        rounds,
    })
}

/// Sequential distillation: generation 1 trains on the labels; each later
/// generation is freshly initialized and trains against the previous
/// generation's frozen soft targets. Uniform votes over all generations.
pub fn train_bans(dataset: &Dataset, cfg: &BaselineConfig, hook: RoundHook) -> Result<BaselineRun> {
    cfg.validate()?;
    let weights = uniform(dataset.n());
    let mut members = Vec::with_capacity(cfg.t);
    let mut rounds = Vec::with_capacity(cfg.t);
    let mut teacher_targets: Option<Vec<Vec<f64>>> = None;
    for g in 1..=cfg.t {
        let loss = match &teacher_targets {
            None => LossSpec::CrossEntropy,
            Some(targets) => LossSpec::SoftTargets {
                targets: targets.clone(),
                label_mix: cfg.bans_label_mix,
            },
        };
        let run = train_member(dataset, cfg, g, &weights, &loss)?;
        teacher_targets = Some(run.net.soft_targets(dataset)?);
        members.push(run.net);
        let record = RoundRecord {
            round: g,
            alpha: 1.0,
            skipped: false,
            epoch_losses: run.epoch_losses,
            weights_after: Vec::new(),
            sims: Vec::new(),
            biases: Vec::new(),
        };
        hook(&record);
        rounds.push(record);
    }
    Ok(BaselineRun {
        ensemble: uniform_ensemble(members),
        rounds,
    })
}

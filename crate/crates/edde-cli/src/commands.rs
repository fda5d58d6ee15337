//! Command implementations behind the CLI surface.

use std::path::Path;
use std::time::Instant;

use edde_core::baselines::{train_baseline, BaselineConfig, BaselineMethod};
use edde_core::boosting::{train_edde, BetaChoice, EddeConfig, Ensemble, RoundRecord};
use edde_core::data::{normalize, Dataset, FeatureStats};
use edde_core::metrics::{accuracy_summary, bias_variance_report, DiversityReport};
use edde_core::transfer::{beta_search, BetaProbe, ProbeTrainSettings};

use crate::config::{Method, RunConfig};
use crate::io::{load_csv, load_train_test, LabeledData};
use crate::persist::{load_ensemble, save_ensemble, Manifest, NormStats};
use crate::report::{
    metric_rows, software_version, write_beta_trace_csv, write_compare_csv, write_json,
    write_metrics_csv, write_similarity_csv, write_similarity_long_csv, write_timings_csv,
    CompareRow, RoundReport, RunReport,
};
use crate::{CliError, Result};

/// Everything one training run produces before any files are written.
struct TrainedRun {
    ensemble: Ensemble,
    rounds: Vec<RoundRecord>,
    beta: Option<f64>,
    beta_trace: Option<Vec<BetaProbe>>,
    timings_ms: Vec<(usize, u128)>,
    notes: Vec<String>,
}

fn method_notes(method: Method) -> Vec<String> {
    match method {
        Method::Baseline(BaselineMethod::AdaboostM1) => vec![
            "sample weights are applied multiplicatively in the loss, not by resampling".into(),
        ],
        Method::Baseline(BaselineMethod::AdaboostNc) => vec![
            "sample weights are applied multiplicatively in the loss, not by resampling".into(),
            "the ambiguity-penalty weight update is a reconstruction (approximation), \
             not a literal transcription of the original method"
                .into(),
        ],
        _ => Vec::new(),
    }
}

fn edde_config(cfg: &RunConfig, dataset: &Dataset) -> Result<EddeConfig> {
    let beta = match &cfg.beta {
        BetaChoice::Fixed(b) => BetaChoice::Fixed(*b),
        BetaChoice::Auto(s) => BetaChoice::Auto(cfg.resolved_beta_search(s)),
    };
    Ok(EddeConfig {
        arch: cfg.architecture(dataset.dim(), dataset.k)?,
        t: cfg.t,
        gamma: cfg.gamma,
        beta,
        epochs_first: cfg.epochs,
        epochs_rest: cfg.epochs_rest,
        schedule: cfg.schedule,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
    })
}

fn baseline_config(
    cfg: &RunConfig,
    method: BaselineMethod,
    dataset: &Dataset,
) -> Result<BaselineConfig> {
    Ok(BaselineConfig {
        method,
        arch: cfg.architecture(dataset.dim(), dataset.k)?,
        t: cfg.t,
        epochs_per_model: cfg.epochs,
        schedule: cfg.schedule,
        batch_size: cfg.batch_size,
        lambda_nc: cfg.lambda_nc,
        bans_label_mix: cfg.bans_label_mix,
        seed: cfg.seed,
    })
}

/// Runs the configured trainer, capturing per-round wall-clock times.
fn run_training(cfg: &RunConfig, train: &Dataset) -> Result<TrainedRun> {
    let mut timings_ms = Vec::new();
    let mut last = Instant::now();
    let mut hook = |r: &RoundRecord| {
        timings_ms.push((r.round, last.elapsed().as_millis()));
        last = Instant::now();
    };
    match cfg.method {
        Method::Edde => {
            let ecfg = edde_config(cfg, train)?;
            let run = train_edde(train, &ecfg, &mut hook)?;
            Ok(TrainedRun {
                ensemble: run.ensemble,
                rounds: run.rounds,
                beta: Some(run.beta),
                beta_trace: run.beta_trace,
                timings_ms,
                notes: method_notes(cfg.method),
            })
        }
        Method::Baseline(method) => {
            let bcfg = baseline_config(cfg, method, train)?;
            let run = train_baseline(train, &bcfg, &mut hook)?;
            Ok(TrainedRun {
                ensemble: run.ensemble,
                rounds: run.rounds,
                beta: None,
                beta_trace: None,
                timings_ms,
                notes: method_notes(cfg.method),
            })
        }
    }
}

/// Accuracy/diversity summary plus the bias/variance pair when `T >= 2`.
fn evaluate_ensemble(
    ensemble: &Ensemble,
    dataset: &Dataset,
) -> Result<(DiversityReport, Option<f64>, Option<f64>)> {
    let preds = ensemble.member_predictions(dataset)?;
    let summary = accuracy_summary(&preds, &ensemble.alphas(), &dataset.labels)?;
    let (bias, variance) = if preds.len() >= 2 {
        let (b, v) = bias_variance_report(&preds, &dataset.labels)?;
        (Some(b), Some(v))
    } else {
        (None, None)
    };
    Ok((summary, bias, variance))
}

fn norm_stats(train: &Dataset) -> Option<NormStats> {
    train.stats.as_ref().map(|s| NormStats {
        means: s.means.clone(),
        stds: s.stds.clone(),
    })
}

pub fn cmd_train(config_path: &Path, overrides: &[String]) -> Result<()> {
    let cfg = RunConfig::load(config_path, overrides)?;
    let (train, test) = load_train_test(&cfg.data, cfg.normalize, cfg.seed)?;
    let run = run_training(&cfg, &train.dataset)?;

    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(CliError::io(cfg.output_dir.display().to_string()))?;
    save_ensemble(
        &cfg.output_dir.join("ensemble"),
        &run.ensemble,
        cfg.method.name(),
        cfg.seed,
        &train.label_names,
        norm_stats(&train.dataset),
        &run.notes,
    )?;

    let (train_metrics, _, _) = evaluate_ensemble(&run.ensemble, &train.dataset)?;
    let (test_metrics, bias, variance) = evaluate_ensemble(&run.ensemble, &test.dataset)?;

    let report = RunReport {
        version: software_version(),
        method: cfg.method.name().to_string(),
        seed: cfg.seed,
        config: cfg.echo.clone(),
        beta: run.beta,
        rounds: run
            .rounds
            .iter()
            .map(|r| RoundReport {
                round: r.round,
                alpha: r.alpha,
                skipped: r.skipped,
                epoch_losses: r.epoch_losses.clone(),
            })
            .collect(),
        train_metrics,
        test_metrics: test_metrics.clone(),
        bias,
        variance,
        notes: run.notes.clone(),
    };
    write_json(&cfg.output_dir.join("report.json"), &report)?;
    write_metrics_csv(
        &cfg.output_dir.join("metrics.csv"),
        &metric_rows(&test_metrics, bias, variance),
    )?;
    write_timings_csv(&cfg.output_dir.join("timings.csv"), &run.timings_ms)?;
    if let Some(trace) = &run.beta_trace {
        write_beta_trace_csv(&cfg.output_dir.join("beta_trace.csv"), trace)?;
    }

    println!("method: {}", cfg.method.name());
    println!("members: {}", run.ensemble.members.len());
    if let Some(beta) = run.beta {
        println!("beta: {beta}");
    }
    println!("test ensemble_accuracy: {}", test_metrics.ensemble_accuracy);
    println!("test average_accuracy: {}", test_metrics.average_accuracy);
    println!("output: {}", cfg.output_dir.display());
    Ok(())
}

pub fn cmd_beta_search(config_path: &Path, overrides: &[String]) -> Result<()> {
    let cfg = RunConfig::load(config_path, overrides)?;
    let (train, _) = load_train_test(&cfg.data, cfg.normalize, cfg.seed)?;
    let arch = cfg.architecture(train.dataset.dim(), train.dataset.k)?;
    let search_cfg = cfg.resolved_beta_search(&cfg.beta_search);
    let outcome = beta_search(
        &train.dataset,
        &arch,
        &search_cfg,
        &ProbeTrainSettings {
            lr0: cfg.schedule.lr0,
            batch_size: cfg.batch_size,
            seed: cfg.seed,
        },
    )?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(CliError::io(cfg.output_dir.display().to_string()))?;
    write_beta_trace_csv(&cfg.output_dir.join("beta_trace.csv"), &outcome.trace)?;
    println!("chosen_beta: {}", outcome.beta);
    for p in &outcome.trace {
        println!(
            "probe beta={} acc_seen={} acc_unseen={} gap={}",
            p.beta, p.acc_seen, p.acc_unseen, p.gap
        );
    }
    Ok(())
}

/// Loads evaluation data with the ensemble's frozen label mapping and
/// normalization statistics.
fn load_eval_data(manifest: &Manifest, data_path: &Path, label_column: &str) -> Result<Dataset> {
    let known = if manifest.label_names.is_empty() {
        None
    } else {
        Some(manifest.label_names.as_slice())
    };
    let LabeledData { mut dataset, .. } = load_csv(data_path, label_column, known)?;
    if !manifest.label_names.is_empty() {
        dataset.k = manifest.label_names.len();
    }
    if let Some(ns) = &manifest.normalization {
        dataset = normalize(
            &dataset,
            &FeatureStats {
                means: ns.means.clone(),
                stds: ns.stds.clone(),
            },
        )?;
    }
    Ok(dataset)
}

pub fn cmd_evaluate(
    ensemble_dir: &Path,
    data_path: &Path,
    label_column: &str,
    out_dir: Option<&Path>,
) -> Result<()> {
    let (ensemble, manifest) = load_ensemble(ensemble_dir)?;
    let dataset = load_eval_data(&manifest, data_path, label_column)?;
    let (summary, bias, variance) = evaluate_ensemble(&ensemble, &dataset)?;
    let out = out_dir.unwrap_or(ensemble_dir);
    std::fs::create_dir_all(out).map_err(CliError::io(out.display().to_string()))?;
    write_metrics_csv(
        &out.join("metrics.csv"),
        &metric_rows(&summary, bias, variance),
    )?;
    println!("ensemble_accuracy: {}", summary.ensemble_accuracy);
    println!("average_accuracy: {}", summary.average_accuracy);
    println!("increased_accuracy: {}", summary.increased_accuracy);
    Ok(())
}

pub fn cmd_diversity(
    ensemble_dir: &Path,
    data_path: &Path,
    label_column: &str,
    out_dir: Option<&Path>,
) -> Result<()> {
    let (ensemble, manifest) = load_ensemble(ensemble_dir)?;
    let dataset = load_eval_data(&manifest, data_path, label_column)?;
    let (summary, _, _) = evaluate_ensemble(&ensemble, &dataset)?;
    let out = out_dir.unwrap_or(ensemble_dir);
    std::fs::create_dir_all(out).map_err(CliError::io(out.display().to_string()))?;
    write_similarity_csv(&out.join("similarity.csv"), &summary.model_ids, &summary.pairwise)?;
    write_similarity_long_csv(
        &out.join("similarity_long.csv"),
        &summary.model_ids,
        &summary.pairwise,
    )?;
    let div_h = if summary.model_ids.len() >= 2 {
        Some(summary.div_h)
    } else {
        None
    };
    write_metrics_csv(&out.join("diversity.csv"), &[("div_h", div_h)])?;
    match div_h {
        Some(d) => println!("div_h: {d}"),
        None => println!("div_h: n/a"),
    }
    Ok(())
}

/// Per-seed evaluation results for one comparison method.
#[derive(Debug, serde::Serialize)]
struct CompareDetail {
    method: String,
    seed: u64,
    total_epochs: usize,
    ensemble_accuracy: f64,
    average_accuracy: f64,
    div_h: Option<f64>,
    bias: Option<f64>,
    variance: Option<f64>,
}

/// Applies a comparison method name (including ablation aliases) and the
/// shared epoch budget to a base configuration.
fn compare_run_config(base: &RunConfig, method_name: &str, budget: usize) -> Result<RunConfig> {
    let mut cfg = base.clone();
    let (method, gamma, beta) = match method_name {
        "edde" => (Method::Edde, cfg.gamma, cfg.beta.clone()),
        "edde_normal_loss" => (Method::Edde, 0.0, cfg.beta.clone()),
        "edde_transfer_all" => (Method::Edde, cfg.gamma, BetaChoice::Fixed(1.0)),
        "edde_transfer_none" => (Method::Edde, cfg.gamma, BetaChoice::Fixed(0.0)),
        other => (Method::parse(other)?, cfg.gamma, cfg.beta.clone()),
    };
    cfg.method = method;
    cfg.gamma = gamma;
    cfg.beta = beta;

    let members = match method {
        Method::Baseline(BaselineMethod::Single) => 1,
        _ => cfg.t,
    };
    if budget % members != 0 {
        return Err(CliError::Config(format!(
            "compare.budget_epochs {budget} is not divisible by the {members} members of '{method_name}'"
        )));
    }
    cfg.epochs = budget / members;
    cfg.epochs_rest = budget / members;

    cfg.echo
        .insert("run.method".into(), cfg.method.name().to_string());
    cfg.echo
        .insert("ensemble.gamma".into(), format!("{}", cfg.gamma));
    if let BetaChoice::Fixed(b) = cfg.beta {
        cfg.echo.insert("ensemble.beta".into(), format!("{b}"));
    }
    cfg.echo
        .insert("train.epochs".into(), format!("{}", cfg.epochs));
    cfg.echo
        .insert("train.epochs_rest".into(), format!("{}", cfg.epochs_rest));
    Ok(cfg)
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(values[values.len() / 2])
}

fn median_opt(values: &[Option<f64>]) -> Option<f64> {
    let mut present: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if present.len() != values.len() {
        return None;
    }
    median(&mut present)
}

/// Returns the process exit code: 0 when every sub-run succeeded, 1 when any
/// failed (failures are still recorded in the comparison table).
pub fn cmd_compare(config_path: &Path, overrides: &[String]) -> Result<i32> {
    let base = RunConfig::load(config_path, overrides)?;
    let compare = base.compare.clone().ok_or_else(|| {
        CliError::Config("cmd_compare needs a [compare] section with compare.methods".into())
    })?;
    std::fs::create_dir_all(&base.output_dir)
        .map_err(CliError::io(base.output_dir.display().to_string()))?;

    let mut rows = Vec::new();
    let mut details: Vec<CompareDetail> = Vec::new();
    let mut echoes = serde_json::Map::new();
    let mut any_failed = false;

    for method_name in &compare.methods {
        let mut ens_accs = Vec::new();
        let mut avg_accs = Vec::new();
        let mut div_hs = Vec::new();
        let mut biases = Vec::new();
        let mut variances = Vec::new();
        let mut error: Option<String> = None;

        for &seed in &compare.seeds {
            let result = (|| -> Result<CompareDetail> {
                let mut cfg = compare_run_config(&base, method_name, compare.budget_epochs)?;
                cfg.seed = seed;
                cfg.echo.insert("run.seed".into(), format!("{seed}"));
                let (train, test) = load_train_test(&cfg.data, cfg.normalize, seed)?;
                let run = run_training(&cfg, &train.dataset)?;
                let (summary, bias, variance) = evaluate_ensemble(&run.ensemble, &test.dataset)?;
                if !echoes.contains_key(method_name) {
                    echoes.insert(
                        method_name.clone(),
                        serde_json::to_value(&cfg.echo)
                            .map_err(|e| CliError::Other(e.to_string()))?,
                    );
                }
                Ok(CompareDetail {
                    method: method_name.clone(),
                    seed,
                    total_epochs: compare.budget_epochs,
                    ensemble_accuracy: summary.ensemble_accuracy,
                    average_accuracy: summary.average_accuracy,
                    div_h: if summary.model_ids.len() >= 2 {
                        Some(summary.div_h)
                    } else {
                        None
                    },
                    bias,
                    variance,
                })
            })();
            match result {
                Ok(d) => {
                    ens_accs.push(d.ensemble_accuracy);
                    avg_accs.push(d.average_accuracy);
                    div_hs.push(d.div_h);
                    biases.push(d.bias);
                    variances.push(d.variance);
                    details.push(d);
                }
                Err(e) => {
                    any_failed = true;
                    let msg = format!("seed {seed}: {e}");
                    error = Some(match error {
                        None => msg,
                        Some(prev) => format!("{prev}; {msg}"),
                    });
                }
            }
        }

        rows.push(CompareRow {
            method: method_name.clone(),
            total_epochs: compare.budget_epochs,
            ensemble_accuracy: median(&mut ens_accs),
            average_accuracy: median(&mut avg_accs),
            div_h: median_opt(&div_hs),
            bias: median_opt(&biases),
            variance: median_opt(&variances),
            error,
        });
    }

    write_compare_csv(&base.output_dir.join("compare.csv"), &rows)?;
    let json = serde_json::json!({
        "version": software_version(),
        "budget_epochs": compare.budget_epochs,
        "seeds": compare.seeds,
        "rows": rows,
        "runs": details,
        "configs": serde_json::Value::Object(echoes),
    });
    write_json(&base.output_dir.join("compare.json"), &json)?;

    for r in &rows {
        match (&r.error, r.ensemble_accuracy) {
            (Some(e), _) => println!("{}: FAILED ({e})", r.method),
            (None, Some(acc)) => println!(
                "{}: total_epochs={} ensemble_accuracy={acc}",
                r.method, r.total_epochs
            ),
            (None, None) => println!("{}: no results", r.method),
        }
    }
    Ok(if any_failed { 1 } else { 0 })
}

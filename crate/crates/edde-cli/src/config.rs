//! Flat `key = value` configuration files with `[section]` headers.
//!
//! Every key is validated and unknown keys are rejected so a typo cannot
//! silently fall back to a default. Command-line `--set section.key=value`
//! overrides are applied on top of the file before typed parsing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use edde_core::baselines::BaselineMethod;
use edde_core::boosting::{BetaChoice, ScheduleKind, ScheduleSpec};
use edde_core::nn::{Activation, Architecture};
use edde_core::transfer::BetaSearchConfig;

use crate::{CliError, Result};

/// Which trainer a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Edde,
    Baseline(BaselineMethod),
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        Ok(match s {
            "edde" => Method::Edde,
            "single" => Method::Baseline(BaselineMethod::Single),
            "bagging" => Method::Baseline(BaselineMethod::Bagging),
            "adaboost_m1" => Method::Baseline(BaselineMethod::AdaboostM1),
            "adaboost_nc" => Method::Baseline(BaselineMethod::AdaboostNc),
            "snapshot" => Method::Baseline(BaselineMethod::Snapshot),
            "bans" => Method::Baseline(BaselineMethod::Bans),
            other => {
                return Err(CliError::Config(format!(
                    "unknown method '{other}' (expected edde, single, bagging, \
                     adaboost_m1, adaboost_nc, snapshot, or bans)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Edde => "edde",
            Method::Baseline(BaselineMethod::Single) => "single",
            Method::Baseline(BaselineMethod::Bagging) => "bagging",
            Method::Baseline(BaselineMethod::AdaboostM1) => "adaboost_m1",
            Method::Baseline(BaselineMethod::AdaboostNc) => "adaboost_nc",
            Method::Baseline(BaselineMethod::Snapshot) => "snapshot",
            Method::Baseline(BaselineMethod::Bans) => "bans",
        }
    }
}

/// Where the training and test data come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataConfig {
    Blobs {
        train_per_class: usize,
        test_per_class: usize,
        classes: usize,
        dim: usize,
        spread: f64,
    },
    Csv {
        train_path: PathBuf,
        /// When absent, a holdout split of the training file is used.
        test_path: Option<PathBuf>,
        label_column: String,
        holdout_fraction: f64,
    },
    Idx {
        images_path: PathBuf,
        labels_path: PathBuf,
        /// 0 means all samples.
        limit: usize,
        holdout_fraction: f64,
    },
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub normalize: bool,
    /// Hidden layer sizes; input/output dims come from the data.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    /// Per-member epochs from round 2 on (diversity-driven pipeline only).
    pub epochs_rest: usize,
    pub batch_size: usize,
    pub schedule: ScheduleSpec,
    pub t: usize,
    pub gamma: f64,
    pub beta: BetaChoice,
    /// The fold-search settings, kept even when `beta` is fixed so the
    /// search command can run from the same file.
    pub beta_search: BetaSearchConfig,
    pub lambda_nc: f64,
    pub bans_label_mix: f64,
    pub compare: Option<CompareConfig>,
    /// Resolved key=value pairs, echoed into reports for reproducibility.
    pub echo: BTreeMap<String, String>,
}

/// Settings for the method-comparison command.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    /// Method names, including the ablation aliases `edde_normal_loss`,
    /// `edde_transfer_all`, and `edde_transfer_none`.
    pub methods: Vec<String>,
    /// Shared total-epoch budget per method.
    pub budget_epochs: usize,
    pub seeds: Vec<u64>,
}

/// Raw parsed file: `section.key -> value`, before typed validation.
struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    fn parse(text: &str, origin: &str) -> Result<RawConfig> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if section.is_empty() {
                    return Err(CliError::Config(format!(
                        "{origin}:{}: empty section name",
                        lineno + 1
                    )));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{origin}:{}: expected 'key = value', got '{line}'",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "{origin}:{}: empty key",
                    lineno + 1
                )));
            }
            if section.is_empty() {
                return Err(CliError::Config(format!(
                    "{origin}:{}: key '{key}' appears before any [section]",
                    lineno + 1
                )));
            }
            let full = format!("{section}.{key}");
            if values.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!(
                    "{origin}:{}: duplicate key '{full}'",
                    lineno + 1
                )));
            }
        }
        Ok(RawConfig { values })
    }

    fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "override '{spec}' must have the form section.key=value"
            ))
        })?;
        let key = key.trim();
        if !key.contains('.') {
            return Err(CliError::Config(format!(
                "override key '{key}' must be qualified as section.key"
            )));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }
}

/// Typed accessor that records which keys were consumed, so leftovers can be
/// rejected as unknown.
struct Reader {
    values: BTreeMap<String, String>,
    consumed: Vec<String>,
}

impl Reader {
    fn new(raw: RawConfig) -> Reader {
        Reader {
            values: raw.values,
            consumed: Vec::new(),
        }
    }

    fn take(&mut self, key: &str) -> Option<String> {
        let v = self.values.remove(key);
        if v.is_some() {
            self.consumed.push(key.to_string());
        }
        v
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("key '{key}': invalid value '{v}'"))),
        }
    }

    fn parse_required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| CliError::Config(format!("key '{key}': invalid value '{v}'")))
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key).as_deref() {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(CliError::Config(format!(
                "key '{key}': expected true or false, got '{v}'"
            ))),
        }
    }

    fn finish(self) -> Result<BTreeMap<String, String>> {
        if !self.values.is_empty() {
            let unknown: Vec<String> = self.values.keys().cloned().collect();
            return Err(CliError::Config(format!(
                "unknown configuration key(s): {}",
                unknown.join(", ")
            )));
        }
        Ok(BTreeMap::new())
    }
}

fn parse_usize_list(value: &str, key: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("key '{key}': invalid entry '{p}'")))
        })
        .collect()
}

fn parse_u64_list(value: &str, key: &str) -> Result<Vec<u64>> {
    value
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("key '{key}': invalid entry '{p}'")))
        })
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?;
        RunConfig::from_text(&text, &path.display().to_string(), overrides)
    }

    pub fn from_text(text: &str, origin: &str, overrides: &[String]) -> Result<RunConfig> {
        let mut raw = RawConfig::parse(text, origin)?;
        for o in overrides {
            raw.apply_override(o)?;
        }
        let echo = raw.values.clone();
        let mut r = Reader::new(raw);

        let method = Method::parse(&r.required("run.method")?)?;
        let seed: u64 = r.parse("run.seed", 0)?;
        let output_dir = PathBuf::from(r.parse("run.output_dir", String::from("edde-out"))?);

        let data = match r.parse("data.source", String::from("blobs"))?.as_str() {
            "blobs" => DataConfig::Blobs {
                train_per_class: r.parse("data.blobs_train_per_class", 200)?,
                test_per_class: r.parse("data.blobs_test_per_class", 50)?,
                classes: r.parse("data.blobs_classes", 3)?,
                dim: r.parse("data.blobs_dim", 2)?,
                spread: r.parse("data.blobs_spread", 1.0)?,
            },
            "csv" => DataConfig::Csv {
                train_path: PathBuf::from(r.required("data.train_path")?),
                test_path: r.take("data.test_path").map(PathBuf::from),
                label_column: r.parse("data.label_column", String::from("label"))?,
                holdout_fraction: r.parse("data.holdout_fraction", 0.2)?,
            },
            "idx" => DataConfig::Idx {
                images_path: PathBuf::from(r.required("data.images_path")?),
                labels_path: PathBuf::from(r.required("data.labels_path")?),
                limit: r.parse("data.limit", 0)?,
                holdout_fraction: r.parse("data.holdout_fraction", 0.2)?,
            },
            other => {
                return Err(CliError::Config(format!(
                    "data.source '{other}' is not one of blobs, csv, idx"
                )))
            }
        };
        let normalize = r.bool("data.normalize", true)?;

        let hidden = match r.take("model.hidden") {
            None => vec![16],
            Some(v) => parse_usize_list(&v, "model.hidden")?,
        };
        let activation = match r.parse("model.activation", String::from("relu"))?.as_str() {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            other => {
                return Err(CliError::Config(format!(
                    "model.activation '{other}' is not one of relu, tanh"
                )))
            }
        };

        let epochs: usize = r.parse("train.epochs", 30)?;
        let epochs_rest: usize = r.parse("train.epochs_rest", epochs)?;
        let batch_size: usize = r.parse("train.batch_size", 32)?;
        let kind = match r.parse("train.schedule", String::from("step"))?.as_str() {
            "step" => ScheduleKind::Step,
            "cosine_cyclic" => ScheduleKind::CosineCyclic,
            other => {
                return Err(CliError::Config(format!(
                    "train.schedule '{other}' is not one of step, cosine_cyclic"
                )))
            }
        };
        let schedule = ScheduleSpec {
            kind,
            lr0: r.parse("train.lr0", 0.1)?,
            cycles: r.parse("train.cycles", 1)?,
        };
        if !(schedule.lr0 > 0.0) {
            return Err(CliError::Config("train.lr0 must be positive".into()));
        }

        let t: usize = r.parse("ensemble.t", 5)?;
        let gamma: f64 = r.parse("ensemble.gamma", 0.1)?;
        let search_cfg = BetaSearchConfig {
            n_folds: r.parse("beta_search.n_folds", 6)?,
            probe_epochs: r.parse("beta_search.probe_epochs", 5)?,
            beta_step: r.parse("beta_search.beta_step", 0.1)?,
            gap_tolerance: r.parse("beta_search.gap_tolerance", 0.01)?,
            // 0 defers to train.epochs at run time.
            teacher_epochs: r.parse("beta_search.teacher_epochs", 0)?,
            student_epochs: r.parse("beta_search.student_epochs", 5)?,
        };
        let beta = match r.parse("ensemble.beta", String::from("auto"))?.as_str() {
            "auto" => BetaChoice::Auto(search_cfg.clone()),
            fixed => {
                let b: f64 = fixed.parse().map_err(|_| {
                    CliError::Config(format!(
                        "ensemble.beta must be 'auto' or a number in [0, 1], got '{fixed}'"
                    ))
                })?;
                if !(0.0..=1.0).contains(&b) {
                    return Err(CliError::Config(format!(
                        "ensemble.beta {b} outside [0, 1]"
                    )));
                }
                BetaChoice::Fixed(b)
            }
        };
        let lambda_nc: f64 = r.parse("ensemble.lambda_nc", 2.0)?;
        let bans_label_mix: f64 = r.parse("ensemble.bans_label_mix", 0.0)?;

        let compare = match r.take("compare.methods") {
            None => {
                // Consume the section's remaining keys only if present.
                if r.take("compare.budget_epochs").is_some() || r.take("compare.seeds").is_some() {
                    return Err(CliError::Config(
                        "compare.budget_epochs/compare.seeds given without compare.methods".into(),
                    ));
                }
                None
            }
            Some(methods) => {
                let methods: Vec<String> =
                    methods.split(',').map(|m| m.trim().to_string()).collect();
                if methods.iter().any(|m| m.is_empty()) {
                    return Err(CliError::Config("compare.methods has an empty entry".into()));
                }
                let budget_epochs: usize = r.parse_required("compare.budget_epochs")?;
                let seeds = match r.take("compare.seeds") {
                    None => vec![seed],
                    Some(v) => parse_u64_list(&v, "compare.seeds")?,
                };
                Some(CompareConfig {
                    methods,
                    budget_epochs,
                    seeds,
                })
            }
        };

        r.finish()?;

        let cfg = RunConfig {
            method,
            seed,
            output_dir,
            data,
            normalize,
            hidden,
            activation,
            epochs,
            epochs_rest,
            batch_size,
            schedule,
            t,
            gamma,
            beta,
            beta_search: search_cfg,
            lambda_nc,
            bans_label_mix,
            compare,
            echo,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.epochs_rest == 0 {
            return Err(CliError::Config("epoch counts must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(CliError::Config("train.batch_size must be positive".into()));
        }
        if self.t == 0 {
            return Err(CliError::Config("ensemble.t must be positive".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(CliError::Config("ensemble.gamma must be nonnegative".into()));
        }
        match &self.data {
            DataConfig::Blobs {
                train_per_class,
                test_per_class,
                classes,
                dim,
                spread,
            } => {
                if *train_per_class == 0 || *test_per_class == 0 || *classes == 0 || *dim == 0 {
                    return Err(CliError::Config("blob sizes must be positive".into()));
                }
                if !(*spread > 0.0) {
                    return Err(CliError::Config("data.blobs_spread must be positive".into()));
                }
            }
            DataConfig::Csv {
                holdout_fraction, ..
            }
            | DataConfig::Idx {
                holdout_fraction, ..
            } => {
                if !(0.0..1.0).contains(holdout_fraction) {
                    return Err(CliError::Config(
                        "data.holdout_fraction must lie in [0, 1)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The network shape for a dataset with `input_dim` features and `k`
    /// classes.
    pub fn architecture(&self, input_dim: usize, k: usize) -> Result<Architecture> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(k);
        Ok(Architecture::new(sizes, self.activation)?)
    }

    /// The fold-search settings with `teacher_epochs = 0` resolved to the
    /// configured first-round epoch count.
    pub fn resolved_beta_search(&self, search: &BetaSearchConfig) -> BetaSearchConfig {
        let mut s = search.clone();
        if s.teacher_epochs == 0 {
            s.teacher_epochs = self.epochs;
        }
        s
    }
}

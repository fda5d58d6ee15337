//! Report artifacts: `report.json`, `metrics.csv`, similarity matrices, and
//! the β-search trace. All writers are deterministic for identical inputs;
//! wall-clock timings go to a separate `timings.csv` so report files stay
//! byte-reproducible across runs.

use std::collections::BTreeMap;
use std::path::Path;

use edde_core::metrics::DiversityReport;
use edde_core::transfer::BetaProbe;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// One boosting/baseline round in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub alpha: f64,
    pub skipped: bool,
    pub epoch_losses: Vec<f64>,
}

/// The full training report. Reproduction needs only `config` + `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub method: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    /// Transfer proportion actually used, when the method has one.
    pub beta: Option<f64>,
    pub rounds: Vec<RoundReport>,
    pub train_metrics: DiversityReport,
    pub test_metrics: DiversityReport,
    /// Mean member distance to the one-hot truth; needs at least 2 members.
    pub bias: Option<f64>,
    /// Member spread (ensemble diversity); needs at least 2 members.
    pub variance: Option<f64>,
    pub notes: Vec<String>,
}

pub fn software_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Other(format!("serialization failed: {e}")))?;
    std::fs::write(path, json + "\n").map_err(CliError::io(path.display().to_string()))
}

fn write_text(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(CliError::io(path.display().to_string()))
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "n/a".into(),
    }
}

/// `metric,value` rows; absent values are written as `n/a`.
pub fn write_metrics_csv(path: &Path, rows: &[(&str, Option<f64>)]) -> Result<()> {
    let mut out = String::from("metric,value\n");
    for (name, value) in rows {
        out.push_str(&format!("{name},{}\n", fmt_opt(*value)));
    }
    write_text(path, out)
}

/// Standard metric rows for one evaluation.
pub fn metric_rows(
    report: &DiversityReport,
    bias: Option<f64>,
    variance: Option<f64>,
) -> Vec<(&'static str, Option<f64>)> {
    vec![
        ("ensemble_accuracy", Some(report.ensemble_accuracy)),
        ("average_accuracy", Some(report.average_accuracy)),
        ("increased_accuracy", Some(report.increased_accuracy)),
        (
            "div_h",
            if report.model_ids.len() >= 2 {
                Some(report.div_h)
            } else {
                None
            },
        ),
        ("bias", bias),
        ("variance", variance),
    ]
}

/// Square similarity matrix with model ids as header row and column.
pub fn write_similarity_csv(path: &Path, ids: &[String], matrix: &[Vec<f64>]) -> Result<()> {
    let mut out = String::from("model");
    for id in ids {
        out.push_str(&format!(",{id}"));
    }
    out.push('\n');
    for (id, row) in ids.iter().zip(matrix) {
        out.push_str(id);
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    write_text(path, out)
}

/// Long-format `(model_i, model_j, similarity)` rows for heatmap plotting.
pub fn write_similarity_long_csv(path: &Path, ids: &[String], matrix: &[Vec<f64>]) -> Result<()> {
    let mut out = String::from("model_i,model_j,similarity\n");
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out.push_str(&format!("{},{},{v}\n", ids[i], ids[j]));
        }
    }
    write_text(path, out)
}

/// One row per probed transfer proportion, in probe order.
pub fn write_beta_trace_csv(path: &Path, trace: &[BetaProbe]) -> Result<()> {
    let mut out = String::from("beta,acc_seen,acc_unseen,gap\n");
    for p in trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.beta, p.acc_seen, p.acc_unseen, p.gap
        ));
    }
    write_text(path, out)
}

/// Per-round wall-clock timings, kept out of `report.json` so reports stay
/// byte-identical across runs of the same config and seed.
pub fn write_timings_csv(path: &Path, millis: &[(usize, u128)]) -> Result<()> {
    let mut out = String::from("round,wall_clock_ms\n");
    for (round, ms) in millis {
        out.push_str(&format!("{round},{ms}\n"));
    }
    write_text(path, out)
}

/// One comparison-table row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: String,
    pub total_epochs: usize,
    pub ensemble_accuracy: Option<f64>,
    pub average_accuracy: Option<f64>,
    pub div_h: Option<f64>,
    pub bias: Option<f64>,
    pub variance: Option<f64>,
    /// Empty on success; the failure message otherwise.
    pub error: Option<String>,
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let mut out = String::from(
        "method,total_epochs,ensemble_accuracy,average_accuracy,div_h,bias,variance,error\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.method,
            r.total_epochs,
            fmt_opt(r.ensemble_accuracy),
            fmt_opt(r.average_accuracy),
            fmt_opt(r.div_h),
            fmt_opt(r.bias),
            fmt_opt(r.variance),
            r.error.as_deref().unwrap_or("")
        ));
    }
    write_text(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_csv_formats_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_metrics_csv(&p, &[("a", Some(0.5)), ("b", None)]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "metric,value\na,0.5\nb,n/a\n"
        );
    }

    #[test]
    fn similarity_csvs_are_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let ids = vec!["m0".to_string(), "m1".to_string()];
        let matrix = vec![vec![1.0, 0.25], vec![0.25, 1.0]];
        let p = dir.path().join("sim.csv");
        write_similarity_csv(&p, &ids, &matrix).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "model,m0,m1\nm0,1,0.25\nm1,0.25,1\n"
        );
        let pl = dir.path().join("sim_long.csv");
        write_similarity_long_csv(&pl, &ids, &matrix).unwrap();
        let text = std::fs::read_to_string(&pl).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains("m0,m1,0.25"));
    }

    #[test]
    fn beta_trace_has_one_row_per_probe() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bt.csv");
        let trace = vec![
            BetaProbe {
                beta: 1.0,
                acc_seen: 0.9,
                acc_unseen: 0.8,
                gap: 0.1,
            },
            BetaProbe {
                beta: 0.9,
                acc_seen: 0.85,
                acc_unseen: 0.84,
                gap: 0.01,
            },
        ];
        write_beta_trace_csv(&p, &trace).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(2).unwrap().starts_with("0.9,"));
    }
}

//! Argument parsing and exit-code mapping.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::ExitCode;

#[derive(Parser)]
#[command(
    name = "edde",
    version,
    about = "Train, search, evaluate, and compare diversity-driven neural network ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an ensemble from a config file and persist it with reports.
    Train {
        /// Path to the key=value config file.
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. --set ensemble.gamma=0 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the fold-based transfer-proportion search and print the chosen
    /// value.
    BetaSearch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate a saved ensemble on a CSV dataset.
    Evaluate {
        /// Ensemble directory written by `train`.
        #[arg(long)]
        ensemble: PathBuf,
        /// CSV file with a header row and a label column.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "label")]
        label_column: String,
        /// Where to write metrics.csv (defaults to the ensemble directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report pairwise similarities and ensemble diversity of a saved
    /// ensemble on a CSV dataset.
    Diversity {
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "label")]
        label_column: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several methods under a shared epoch budget and emit a
    /// comparison table.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests exit 0; real argument errors are input
            // errors.
            let code = if e.use_stderr() {
                ExitCode::ConfigError as i32
            } else {
                0
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Train { config, overrides } => commands::cmd_train(config, overrides).map(|()| 0),
        Command::BetaSearch { config, overrides } => {
            commands::cmd_beta_search(config, overrides).map(|()| 0)
        }
        Command::Evaluate {
            ensemble,
            data,
            label_column,
            out,
        } => commands::cmd_evaluate(ensemble, data, label_column, out.as_deref()).map(|()| 0),
        Command::Diversity {
            ensemble,
            data,
            label_column,
            out,
        } => commands::cmd_diversity(ensemble, data, label_column, out.as_deref()).map(|()| 0),
        Command::Compare { config, overrides } => commands::cmd_compare(config, overrides),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}

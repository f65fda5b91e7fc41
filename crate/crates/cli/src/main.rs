//! `genscope`: generalization index of layerwise classifier embeddings.
//!
//! Exit codes: 0 success, 1 validation or runtime error (a JSON error
//! document is written to stderr), 2 usage error.

mod commands;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "genscope", version, about = "Generalization index of layerwise embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// k-means and kNN settings shared by `evaluate` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Cluster count; defaults to the number of classes in the labels.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long = "max-iters", default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// balanced | per-point
    #[arg(long = "knn-rule", default_value = "per-point")]
    pub knn_rule: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every layer of one bundle and report g.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate several epochs of one model and emit the g-vs-epoch curve.
    Sweep {
        /// Comma-separated manifest paths, in epoch order.
        #[arg(long, value_delimiter = ',', required = true)]
        manifests: Vec<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// PCA projection of one layer, as CSV and optionally SVG.
    Project {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        layer: String,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long)]
        svg: bool,
        /// Also write the N members nearest each class centroid.
        #[arg(long)]
        representatives: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank networks by g from report files.
    Rank {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic Gaussian-blob bundle, one layer per separation.
    Synth {
        #[arg(long)]
        classes: usize,
        #[arg(long = "per-class")]
        per_class: usize,
        #[arg(long)]
        dims: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        separations: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic")]
        model: String,
        #[arg(long, default_value_t = 0)]
        epoch: u64,
        #[arg(long, default_value = "unseen")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GENSCOPE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::invalid("GENSCOPE_THREADS", format!("not a count: {raw:?}")))?;
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::invalid("GENSCOPE_THREADS", e.to_string()))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Evaluate {
            manifest,
            eval,
            out,
        } => commands::evaluate(&manifest, &eval, &out),
        Command::Sweep {
            manifests,
            eval,
            out,
        } => commands::sweep(&manifests, &eval, &out),
        Command::Project {
            manifest,
            layer,
            dims,
            svg,
            representatives,
            out,
        } => commands::project(&manifest, &layer, dims, svg, representatives, &out),
        Command::Rank { reports, out } => commands::rank(&reports, &out),
        Command::Synth {
            classes,
            per_class,
            dims,
            separations,
            seed,
            model,
            epoch,
            split,
            out,
        } => commands::synth(
            &commands::SynthArgs {
                classes,
                per_class,
                dims,
                separations,
                seed,
                model,
                epoch,
                split,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version exit 0, genuine usage errors exit 2
            e.exit();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}

//! Command-line front end: one subcommand per stage plus `pipeline`.
//!
//! Exit codes: 0 success, 1 configuration or environment error, 2 missing
//! upstream stage, 3 completed with partial failures (logged to stderr).

mod config;
mod corpus;
mod stages;
mod workspace;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::config::Config;
use crate::stages::{run_pipeline, run_stage, StageError};
use crate::workspace::{Workspace, WorkspaceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageArg {
    Filter,
    Prune,
    Stats,
    Harvest,
    Annotate,
    Score,
    Emit,
    Pipeline,
}

impl StageArg {
    fn name(self) -> &'static str {
        match self {
            StageArg::Filter => "filter",
            StageArg::Prune => "prune",
            StageArg::Stats => "stats",
            StageArg::Harvest => "harvest",
            StageArg::Annotate => "annotate",
            StageArg::Score => "score",
            StageArg::Emit => "emit",
            StageArg::Pipeline => "pipeline",
        }
    }
}

/// Converts legacy workflow corpora into semantically annotated artifacts.
#[derive(Debug, Parser)]
#[command(name = "wfsem", version, arg_required_else_help = true)]
struct Cli {
    /// Stage to run; `pipeline` runs filter through emit in order.
    #[arg(value_enum)]
    stage: StageArg,

    /// TOML configuration file. Falls back to $WFSEM_CONFIG, then to
    /// built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory of workflow documents (.scufl, .xml, .t2flow), consumed
    /// by `filter` and `pipeline`.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Directory the pipeline owns: stage outputs and the manifest.
    #[arg(long)]
    workspace: PathBuf,

    /// Worker threads for per-workflow fan-out; defaults to the number of
    /// processors. Output bytes do not depend on this.
    #[arg(long)]
    jobs: Option<usize>,

    /// Information-content metric, overriding the config file.
    #[arg(long, value_parser = ["seco", "zhou", "sanchez"])]
    metric: Option<String>,

    /// Weight for the zhou metric, in [0, 1].
    #[arg(long)]
    zhou_k: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    let config_path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("WFSEM_CONFIG").map(PathBuf::from));
    let mut config = match config_path {
        Some(path) => match Config::load(&path) {
            Ok(config) => config,
            Err(e) => {
                eprintln!("wfsem: {e}");
                return 1;
            }
        },
        None => Config::defaults(),
    };
    if let Err(e) = config.apply_overrides(cli.metric.as_deref(), cli.zhou_k) {
        eprintln!("wfsem: {e}");
        return 1;
    }

    let needs_input = matches!(cli.stage, StageArg::Filter | StageArg::Pipeline);
    let input = match &cli.input {
        Some(path) => path.clone(),
        None if needs_input => {
            eprintln!("wfsem: --input is required for {}", cli.stage.name());
            return 1;
        }
        None => PathBuf::new(),
    };

    let mut workspace = match Workspace::open(&cli.workspace) {
        Ok(workspace) => workspace,
        Err(e) => {
            eprintln!("wfsem: {e}");
            return 1;
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("wfsem: {e}");
            return 1;
        }
    };

    let result = pool.install(|| match cli.stage {
        StageArg::Pipeline => run_pipeline(&mut workspace, &config, &input),
        stage => run_stage(stage.name(), &mut workspace, &config, &input),
    });
    match result {
        Ok(outcome) if outcome.partial_failures > 0 => {
            eprintln!("wfsem: completed with {} partial failures", outcome.partial_failures);
            3
        }
        Ok(_) => 0,
        Err(StageError::Workspace(e @ WorkspaceError::MissingUpstream { .. })) => {
            eprintln!("wfsem: {e}");
            2
        }
        Err(e) => {
            eprintln!("wfsem: {e}");
            1
        }
    }
}

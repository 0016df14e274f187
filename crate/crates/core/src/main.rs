//! Command-line entry point: one subcommand per pipeline stage, plus `run`
//! and `report`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 stage failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdlab::harness::config::{ExperimentConfig, Profile};
use sdlab::harness::pipeline::{run_pipeline, ArtifactIndex, Family, Pipeline};
use sdlab::harness::report::{emit_report, ReportKind};

#[derive(Parser)]
#[command(name = "sdlab", version, about = "Pruning with distilled data: experiments and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; overrides --profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in config to start from.
    #[arg(long, global = true, value_enum, default_value = "quick")]
    profile: ProfileArg,
    /// Seed of the shared initialization.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum PruneMode {
    Imp,
    Distilled,
}

#[derive(Subcommand)]
enum Command {
    /// Distill the training set.
    Distill,
    /// Find masks with IMP or distilled pruning.
    Prune {
        #[arg(long, value_enum)]
        mode: PruneMode,
    },
    /// Instability analysis for every mask and seed pair.
    Stability,
    /// Loss grids around the dense and sparsest subnetworks.
    Landscape,
    /// Hessian-diagonal statistics per subnetwork.
    Hessian,
    /// Every stage from scratch.
    Run,
    /// Render reports from an output directory's index.
    Report {
        /// One report kind; all of them when omitted.
        #[arg(long)]
        kind: Option<String>,
    },
}

enum Failure {
    Config(String),
    Stage(String),
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?,
        None => ExperimentConfig::profile(match common.profile {
            ProfileArg::Quick => Profile::Quick,
            ProfileArg::Full => Profile::Full,
        }),
    };
    if let Some(seed) = common.seed {
        cfg.init_seed = seed;
    }
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn print_index(index: &ArtifactIndex) {
    for a in &index.artifacts {
        println!("{}  {}", &a.sha256[..16], a.path);
    }
    println!("{} artifacts in {}", index.artifacts.len(), index.root.display());
}

fn stage(cfg: ExperimentConfig, command: &Command) -> Result<ArtifactIndex, Failure> {
    let mut p = Pipeline::new(cfg, true).map_err(|e| Failure::Config(e.to_string()))?;
    let outcome = match command {
        Command::Distill => p.synthetic().map(drop),
        Command::Prune { mode: PruneMode::Imp } => p.masks(Family::Imp).map(drop),
        Command::Prune { mode: PruneMode::Distilled } => p.masks(Family::Distilled).map(drop),
        Command::Stability => p.stability().map(drop),
        Command::Landscape => p.landscape().map(drop),
        Command::Hessian => p.hessian().map(drop),
        Command::Run | Command::Report { .. } => unreachable!("handled by the caller"),
    };
    p.finish(outcome).map_err(|e| Failure::Stage(e.to_string()))
}

fn report(cfg: &ExperimentConfig, kind: Option<&str>) -> Result<(), Failure> {
    let kinds = match kind {
        Some(k) => vec![k.parse::<ReportKind>().map_err(|e| Failure::Config(e.to_string()))?],
        None => ReportKind::ALL.to_vec(),
    };
    let index = ArtifactIndex::load(&cfg.output_dir).map_err(|e| Failure::Stage(e.to_string()))?;
    let mut failed = Vec::new();
    for kind in kinds {
        match emit_report(&index, kind) {
            Ok(files) => files.iter().for_each(|f| println!("{}", f.display())),
            Err(e) => failed.push(format!("{}: {e}", kind.as_str())),
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Stage(failed.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli.common).and_then(|cfg| match &cli.command {
        Command::Run => {
            let index = run_pipeline(&cfg).map_err(|e| match e {
                sdlab::Error::InvalidConfig(_) => Failure::Config(e.to_string()),
                _ => Failure::Stage(e.to_string()),
            })?;
            print_index(&index);
            Ok(())
        }
        Command::Report { kind } => report(&cfg, kind.as_deref()),
        other => stage(cfg, other).map(|index| print_index(&index)),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Stage(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(3)
        }
    }
}

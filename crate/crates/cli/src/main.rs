use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prism_core::PrismError;

mod commands;

#[derive(Parser)]
#[command(name = "prism", version, about = "Train and inspect PRISM forecasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Parent directory for the run directory; defaults to the spec's output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model per seed and write checkpoints, histories and a report.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train only this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Test-split MSE and MAE of a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also write the forecast for this test window.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Split a CSV series into the spec's filter bands.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// Series to decompose; defaults to the spec's data source.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Per segment/band breakdown of one test-window forecast.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        window: usize,
    },
    /// Mean router weights per node and band over test windows.
    Importance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

/// 2 spec, 3 data, 4 checkpoint, 5 divergence, 1 anything else.
fn exit_code(err: &PrismError) -> u8 {
    match err {
        PrismError::Config(_) | PrismError::Shape(_) | PrismError::Usage(_) => 2,
        PrismError::Data { .. } => 3,
        PrismError::Checkpoint(_) => 4,
        PrismError::Diverged { .. } | PrismError::Numeric { .. } => 5,
        PrismError::Internal(_) | PrismError::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { common, seed } => commands::train(&common.spec, common.out.as_deref(), seed),
        Command::Eval {
            common,
            checkpoint,
            window,
        } => commands::eval(&common.spec, common.out.as_deref(), &checkpoint, window),
        Command::Decompose { common, input } => {
            commands::decompose(&common.spec, common.out.as_deref(), input.as_deref())
        }
        Command::Trace {
            common,
            checkpoint,
            window,
        } => commands::trace(&common.spec, common.out.as_deref(), &checkpoint, window),
        Command::Importance { common, checkpoint } => {
            commands::importance(&common.spec, common.out.as_deref(), &checkpoint)
        }
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

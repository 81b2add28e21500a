use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fpmforge::{run, thread_cap, Command, Invocation};

/// Fourier ptychographic microscopy: simulate, preprocess, reconstruct.
#[derive(Parser, Debug)]
#[command(name = "fpmforge", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Dataset directory to read.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the dark-frame subtraction step.
    #[arg(long)]
    skip_uniformity: bool,
    /// Reconstruct from normalized raw captures.
    #[arg(long)]
    no_preprocess: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = thread_cap() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let inv = Invocation {
        command: cli.command,
        config: cli.config,
        dataset: cli.dataset,
        out: cli.out,
        seed: cli.seed,
        skip_uniformity: cli.skip_uniformity,
        no_preprocess: cli.no_preprocess,
    };
    match run(&inv) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! `qdlab`: configuration-driven runner for the decoherence experiments.

mod config;
mod runner;

use clap::{Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qdlab", about = "Phase-averaged decoherence experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its report.
    Run {
        /// Path to the config document.
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's Monte Carlo sample count.
        #[arg(long)]
        samples: Option<u64>,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's report format.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Parse and validate a config document without running it.
    Validate {
        /// Path to the config document.
        config: PathBuf,
        /// Print the canonical rendering of the config instead of a summary.
        #[arg(long)]
        render: bool,
    },
}

fn apply_max_dim_env() -> Result<(), String> {
    match std::env::var("QD_MAX_DIM") {
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(format!("QD_MAX_DIM: {e}")),
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 2 => {
                qdlab_core::set_max_dim(n);
                Ok(())
            }
            _ => Err(format!("QD_MAX_DIM: `{v}` is not an integer >= 2")),
        },
    }
}

fn load_config(path: &Path) -> Result<config::ExperimentConfig, Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| vec![format!("{}: {e}", path.display())])?;
    config::parse_config(&text)
}

/// Writes via a sibling temp file and an atomic rename, so a failed run
/// never leaves a partial report behind.
fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(&format!(".tmp.{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, body)?;
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = apply_max_dim_env() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    match cli.command {
        Command::Validate { config, render } => match load_config(&config) {
            Ok(cfg) => {
                if render {
                    print!("{}", config::render(&cfg));
                } else {
                    println!("ok: {} experiment, seed {}", cfg.kind.name(), cfg.seed);
                }
                ExitCode::SUCCESS
            }
            Err(errors) => {
                for e in errors {
                    eprintln!("error: {e}");
                }
                ExitCode::FAILURE
            }
        },
        Command::Run { config, seed, samples, out, format } => {
            let mut cfg = match load_config(&config) {
                Ok(cfg) => cfg,
                Err(errors) => {
                    for e in errors {
                        eprintln!("error: {e}");
                    }
                    return ExitCode::FAILURE;
                }
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(samples) = samples {
                cfg.samples = Some(samples);
            }
            if let Some(out) = out {
                cfg.output = Some(out.display().to_string());
            }
            if let Some(format) = format {
                cfg.format = match format {
                    FormatArg::Json => config::OutputFormat::Json,
                    FormatArg::Csv => config::OutputFormat::Csv,
                };
            }
            if let Err(errors) = cfg.validate() {
                for e in errors {
                    eprintln!("error: {e}");
                }
                return ExitCode::FAILURE;
            }
            let output = match runner::run_experiment(&cfg) {
                Ok(output) => output,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match &cfg.output {
                Some(path) => {
                    if let Err(e) = write_atomic(Path::new(path), &output.body) {
                        eprintln!("error: {path}: {e}");
                        return ExitCode::FAILURE;
                    }
                    println!("{}", output.summary);
                }
                None => {
                    print!("{}", output.body);
                    eprintln!("{}", output.summary);
                }
            }
            ExitCode::SUCCESS
        }
    }
}

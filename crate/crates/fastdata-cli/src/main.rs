//! Command-line harness: generate streams, run strategy experiments, score
//! datasets, and compare reports.
//!
//! Exit codes: 0 success, 2 config/parse errors, 3 engine state corruption,
//! 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fastdata_core::error::Error;
use fastdata_core::experiment::{
    compare_strategies, generate_stream_file, load_config, run_experiment, score_dataset_file,
    ExperimentConfig, RunOverrides,
};
use fastdata_core::formats;

#[derive(Parser)]
#[command(
    name = "fastdata",
    version,
    about = "Closed-loop stream data collection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the experiment seed.
    #[arg(long, env = "FASTDATA_SEED")]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, env = "FASTDATA_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured stream and write it as a replayable file.
    Generate {
        #[command(flatten)]
        shared: Shared,
        /// Stream file to write (default: <out dir>/stream.txt).
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Run every configured strategy over one shared stream and write
    /// datasets, decision logs, reports, and the comparison summary.
    Run {
        #[command(flatten)]
        shared: Shared,
        /// Replay an existing stream file instead of generating one.
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Evaluate an existing dataset file against the configured target.
    Score {
        #[command(flatten)]
        shared: Shared,
        /// Dataset file produced by `run`.
        dataset: PathBuf,
    },
    /// Rank existing reports that were produced over the same stream.
    Compare {
        /// Two or more report files.
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        /// Directory to write the summary into (printed either way).
        #[arg(long, env = "FASTDATA_OUT")]
        out: Option<PathBuf>,
    },
}

fn load(shared: &Shared) -> Result<ExperimentConfig, Error> {
    let mut config = load_config(&shared.config)?;
    if let Some(seed) = shared.seed {
        config.seed = seed;
    }
    if let Some(out) = &shared.out {
        config.out_dir = Some(out.clone());
    }
    Ok(config)
}

fn out_dir(config: &ExperimentConfig) -> Result<&Path, Error> {
    config
        .out_dir
        .as_deref()
        .ok_or_else(|| Error::ConfigError("no output directory (config out_dir or --out)".into()))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { shared, stream } => {
            let config = load(&shared)?;
            let path = match stream {
                Some(p) => p,
                None => out_dir(&config)?.join("stream.txt"),
            };
            let (count, hash) = generate_stream_file(&config, &path)?;
            println!("wrote {count} samples to {} (sha256 {hash})", path.display());
        }
        Command::Run { shared, stream } => {
            let config = load(&shared)?;
            let outcome = run_experiment(
                config,
                &RunOverrides {
                    seed: None, // already folded into the config
                    out_dir: None,
                    stream_file: stream,
                },
            )?;
            print!("{}", outcome.summary.to_text());
            eprintln!(
                "stream sha256 {}; artifacts in {}",
                outcome.stream_hash,
                outcome.out_dir.display()
            );
        }
        Command::Score { shared, dataset } => {
            let config = load(&shared)?;
            let report = score_dataset_file(&dataset, &config)?;
            print!("{}", formats::report_to_string(&report));
            if let Some(out) = &config.out_dir {
                std::fs::create_dir_all(out)?;
                let stem = dataset
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".to_string());
                let path = out.join(format!("{stem}.report.txt"));
                formats::write_report(&path, &report)?;
                eprintln!("report written to {}", path.display());
            }
        }
        Command::Compare { reports, out } => {
            let loaded = reports
                .iter()
                .map(|p| formats::read_report(p))
                .collect::<Result<Vec<_>, _>>()?;
            let summary = compare_strategies(&loaded)?;
            print!("{}", summary.to_text());
            if let Some(out) = out {
                std::fs::create_dir_all(&out)?;
                let path = out.join("summary.tsv");
                std::fs::write(&path, summary.to_text())?;
                eprintln!("summary written to {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ConfigError(_) | Error::Parse { .. } => ExitCode::from(2),
                Error::StateCorruption(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

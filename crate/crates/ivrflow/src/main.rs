//! `ivrflow` — thin CLI over the engine library.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use ivrflow::config::{load_config, CallLogWriter, EngineConfig};
use ivrflow::engine::CallEngine;
use ivrflow::error::EngineError;
use ivrflow::simulator::{self, RunOptions};
use ivrflow::{bridge, EngineError as E};

#[derive(Parser)]
#[command(
    name = "ivrflow",
    version,
    about = "IVR dialog engine: serve the bridge, replay scripted callers, run seeded batches, evaluate ASR output"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Engine config file; falls back to the IVR_CONFIG environment variable.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<EngineConfig, EngineError> {
        let path = match &self.config {
            Some(path) => path.clone(),
            None => std::env::var("IVR_CONFIG")
                .map(PathBuf::from)
                .map_err(|_| EngineError::Input {
                    reason: "no --config given and IVR_CONFIG is not set".to_string(),
                })?,
        };
        load_config(path)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the NDJSON-over-TCP telephony bridge until interrupted.
    Serve {
        #[command(flatten)]
        config: ConfigArg,
        /// Suppress timestamps in the call log (golden-test mode).
        #[arg(long)]
        no_timestamps: bool,
    },
    /// Replay one scripted caller scenario against the configured backends.
    RunScenario {
        #[command(flatten)]
        config: ConfigArg,
        /// Scenario JSON file.
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// Batch seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Mock ASR error-rate override.
        #[arg(long)]
        error_rate: Option<f64>,
        /// Write the report here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Suppress timestamps in the call log (golden-test mode).
        #[arg(long)]
        no_timestamps: bool,
    },
    /// Run every scenario in a directory across seeds and error rates.
    RunBatch {
        #[command(flatten)]
        config: ConfigArg,
        /// Directory of scenario JSON files.
        #[arg(long, value_name = "DIR")]
        scenarios: PathBuf,
        /// Seed(s); repeat the flag for several.
        #[arg(long)]
        seed: Vec<u64>,
        /// Mock ASR error rate(s); repeat the flag for a sweep.
        #[arg(long)]
        error_rate: Vec<f64>,
        /// Write the report here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Accepted for interface symmetry; batch reports carry no timestamps.
        #[arg(long)]
        no_timestamps: bool,
    },
    /// Compute corpus WER for line-aligned reference/hypothesis files.
    EvalAsr {
        /// Reference transcript, one utterance per line.
        #[arg(long = "ref", value_name = "PATH", required_unless_present = "tsv")]
        reference: Option<PathBuf>,
        /// Hypothesis transcript, line-aligned with the reference.
        #[arg(long, value_name = "PATH", required_unless_present = "tsv")]
        hyp: Option<PathBuf>,
        /// Single TSV file (reference<TAB>hypothesis per line).
        #[arg(long, value_name = "PATH", conflicts_with_all = ["reference", "hyp"])]
        tsv: Option<PathBuf>,
        /// Write the report here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Load and validate a config file, then exit.
    ValidateConfig {
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn emit(report: &impl serde::Serialize, out: Option<&PathBuf>) -> Result<(), EngineError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| EngineError::Input {
        reason: format!("report serialization failed: {e}"),
    })?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), EngineError> {
    match cli.command {
        Command::Serve {
            config,
            no_timestamps,
        } => {
            let config = Arc::new(config.load()?);
            let call_log = match &config.call_log_path {
                Some(path) => Some(Arc::new(CallLogWriter::to_file(path, !no_timestamps)?)),
                None => None,
            };
            let addr = std::env::var("IVR_BIND_ADDR").unwrap_or_else(|_| config.bind_addr.clone());
            let engine = Arc::new(CallEngine::new(config, call_log));
            let server = bridge::serve(&addr, engine)?;
            eprintln!("ivrflow bridge listening on {}", server.local_addr());
            loop {
                std::thread::sleep(std::time::Duration::from_secs(3600));
            }
        }
        Command::RunScenario {
            config,
            scenario,
            seed,
            error_rate,
            out,
            no_timestamps,
        } => {
            let config = config.load()?;
            let scenario = simulator::load_scenario(&scenario)?;
            let call_log = match &config.call_log_path {
                Some(path) => Some(Arc::new(CallLogWriter::to_file(path, !no_timestamps)?)),
                None => None,
            };
            let options = RunOptions {
                error_rate,
                seed,
                call_log,
            };
            let report = simulator::run_scenario_with(&scenario, &config, &options)?;
            emit(&report, out.as_ref())
        }
        Command::RunBatch {
            config,
            scenarios,
            seed,
            error_rate,
            out,
            no_timestamps: _,
        } => {
            let config = config.load()?;
            let scenarios = simulator::load_scenario_dir(&scenarios)?;
            let report = simulator::run_batch(&scenarios, &config, &seed, &error_rate)?;
            emit(&report, out.as_ref())
        }
        Command::EvalAsr {
            reference,
            hyp,
            tsv,
            out,
        } => {
            let summary = match (tsv, reference, hyp) {
                (Some(tsv), _, _) => simulator::eval_asr_tsv(&tsv)?,
                (None, Some(reference), Some(hyp)) => simulator::eval_asr_files(&reference, &hyp)?,
                _ => {
                    return Err(EngineError::Input {
                        reason: "eval-asr needs --ref and --hyp, or --tsv".to_string(),
                    })
                }
            };
            emit(&summary, out.as_ref())
        }
        Command::ValidateConfig { config } => {
            let config = config.load()?;
            eprintln!(
                "config ok: {} classes, {} queues, threshold {}, max confirm attempts {}",
                config.taxonomy.len(),
                config.routing.len(),
                config.confidence_threshold,
                config.max_confirm_attempts
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with success status.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let usage = matches!(e, E::Config { .. } | E::Input { .. } | E::Template { .. });
            if usage {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

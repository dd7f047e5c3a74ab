use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use sqg_core::calibrate::{calibrate, CalibrationOptions};
use sqg_core::config::ExperimentConfig;
use sqg_core::constants::{Constants, ENV_VAR};
use sqg_core::corpus::{default_corpus_text, load_corpus, parse_corpus};
use sqg_core::experiments::{self, run_prefix, Outcome, OutputFile};
use sqg_core::manifest::Manifest;
use sqg_core::snapshot::write_snapshot;
use sqg_core::verify::VerifyOptions;
use sqg_core::Error;

const EXIT_FALSIFIED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BLOWUP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sqg",
    version,
    about = "Critical SQG and Burgers experiments with envelope checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Config file, or a manifest.json to rerun.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// exact-decay, steady-state, holder-corpus, dimension-sweep or burgers-basic.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "sqg-out")]
    out: PathBuf,
    /// Replaces `[solver] seed`.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads for sweeps; outputs do not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the planar equation and check every envelope.
    Simulate(RunArgs),
    /// Same on the line.
    Burgers(RunArgs),
    /// Tangent-volume run and attractor dimension bound.
    Dimension {
        #[command(flatten)]
        run: RunArgs,
        /// Tangent ensemble size (default: `[dimension] ensemble`).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n_max: Option<u64>,
    },
    /// Identity, Poincaré and lower-bound suites over a corpus.
    VerifyKernels {
        /// CSV with `seed,band,norm[,mean]` (default: the shipped corpus).
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "sqg-out")]
        out: PathBuf,
    },
    /// Recompute the constants file from corpus measurements.
    Calibrate {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "sqg-out")]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Blowup { .. } | Error::EnsembleCollapse { .. } | Error::RankDeficient { .. } => EXIT_BLOWUP,
        _ => EXIT_USAGE,
    }
}

fn status_name(code: u8) -> &'static str {
    match code {
        0 => "pass",
        EXIT_FALSIFIED => "falsified",
        EXIT_BLOWUP => "blowup",
        _ => "error",
    }
}

struct Loaded {
    config: ExperimentConfig,
    n_max: Option<usize>,
}

fn load_config(args: &RunArgs, command: &str) -> Result<Loaded, Failure> {
    let mut n_max = None;
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) if path.extension().is_some_and(|e| e == "json") => {
            let m = Manifest::read(path).map_err(|e| Failure::usage(e.to_string()))?;
            if m.command != command {
                return Err(Failure::usage(format!(
                    "{}: manifest is for `{}`, not `{command}`",
                    path.display(),
                    m.command
                )));
            }
            n_max = m.argument("n_max").and_then(|v| v.parse().ok());
            let mut cfg = ExperimentConfig::parse(&m.config)
                .map_err(|e| Failure::usage(format!("{} (config): {e}", path.display())))?;
            cfg.solver.seed = m.seed;
            cfg
        }
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => ExperimentConfig::preset(name).map_err(|e| Failure::usage(e.to_string()))?,
        (None, None) => return Err(Failure::usage("one of --config or --preset is required")),
    };
    if let Some(seed) = args.seed_override {
        config.solver.seed = seed;
    }
    Ok(Loaded { config, n_max })
}

fn load_constants() -> Result<(Constants, String, String), Failure> {
    let (c, text) = Constants::load().map_err(|e| Failure::usage(e.to_string()))?;
    let source = std::env::var(ENV_VAR).unwrap_or_else(|_| "embedded".into());
    Ok((c, text, source))
}

fn write_outputs(dir: &Path, files: &[OutputFile], manifest: &mut Manifest) -> Result<(), Failure> {
    for f in files {
        std::fs::write(dir.join(&f.name), &f.bytes)
            .map_err(|e| Failure::usage(format!("{}: {e}", dir.join(&f.name).display())))?;
        manifest.record_output(&f.name, &f.bytes);
    }
    Ok(())
}

/// Write outputs, finish the manifest and pick the exit code.
fn conclude(dir: &Path, manifest: &mut Manifest, result: sqg_core::Result<Outcome>) -> Result<u8, Failure> {
    match result {
        Ok(outcome) => {
            write_outputs(dir, &outcome.files, manifest)?;
            print!("{}", outcome.report);
            let code = if outcome.falsifications > 0 { EXIT_FALSIFIED } else { 0 };
            manifest.finish(
                status_name(code),
                code.into(),
                format!("{} falsification(s)", outcome.falsifications),
            );
            manifest.write(dir).map_err(|e| Failure::usage(e.to_string()))?;
            Ok(code)
        }
        Err(e) => {
            let code = exit_code(&e);
            if let Error::Blowup { time, last_valid } = &e {
                let mut buf = Vec::new();
                if write_snapshot(&mut buf, last_valid, *time).is_ok() {
                    write_outputs(
                        dir,
                        &[OutputFile {
                            name: "blowup_state.snap".into(),
                            bytes: buf,
                        }],
                        manifest,
                    )?;
                }
            }
            manifest.finish(status_name(code), code.into(), e.to_string());
            manifest.write(dir).map_err(|e| Failure::usage(e.to_string()))?;
            Err(Failure {
                code,
                message: e.to_string(),
            })
        }
    }
}

fn start_manifest(
    dir: &Path,
    command: &str,
    config: &str,
    constants: &(Constants, String, String),
    seed: u64,
    threads: usize,
) -> Result<Manifest, Failure> {
    let m = Manifest::start(command, config, &constants.1, &constants.2, seed, threads);
    m.write(dir)
        .map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    Ok(m)
}

fn pool(threads: u64) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads as usize)
        .build()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn run_sweep(args: &RunArgs, command: &str, dim: usize, n_max_flag: Option<u64>) -> Result<u8, Failure> {
    let loaded = load_config(args, command)?;
    let cfg = loaded.config;
    if cfg.dim != dim {
        return Err(Failure::usage(format!(
            "`{command}` needs [grid] dim = {dim}, config has {}",
            cfg.dim
        )));
    }
    let n_max = n_max_flag.map(|n| n as usize).or(loaded.n_max);
    let constants = load_constants()?;
    let mut manifest = start_manifest(
        &args.out,
        command,
        &cfg.to_text(),
        &constants,
        cfg.solver.seed,
        args.threads as usize,
    )?;
    if let Some(n) = n_max {
        manifest.arguments.push(("n_max".into(), n.to_string()));
        manifest.write(&args.out).map_err(|e| Failure::usage(e.to_string()))?;
    }
    let runs = cfg.runs();
    let consts = &constants.0;
    let result = pool(args.threads)?.install(|| {
        runs.par_iter()
            .enumerate()
            .map(|(i, r)| {
                let prefix = run_prefix(i, runs.len());
                if command == "dimension" {
                    experiments::dimension_run(&cfg, r, consts, n_max, &prefix)
                } else {
                    experiments::simulate_run(&cfg, r, consts, &prefix)
                }
            })
            .collect::<sqg_core::Result<Vec<_>>>()
            .map(Outcome::assemble)
    });
    conclude(&args.out, &mut manifest, result)
}

fn corpus_text(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        Some(p) => {
            load_corpus(p).map_err(|e| Failure::usage(e.to_string()))?;
            std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
        }
        None => Ok(default_corpus_text().to_string()),
    }
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Simulate(args) => run_sweep(&args, "simulate", 2, None),
        Command::Burgers(args) => run_sweep(&args, "burgers", 1, None),
        Command::Dimension { run, n_max } => run_sweep(&run, "dimension", 2, n_max),
        Command::VerifyKernels { corpus, out } => {
            let text = corpus_text(corpus.as_deref())?;
            let entries = parse_corpus(&text).map_err(|e| Failure::usage(e.to_string()))?;
            if entries.is_empty() {
                eprintln!("warning: empty corpus, every suite passes vacuously");
            }
            let constants = load_constants()?;
            let mut manifest = start_manifest(&out, "verify-kernels", &text, &constants, 0, 1)?;
            let result = experiments::verify(&entries, &constants.0, &VerifyOptions::default());
            conclude(&out, &mut manifest, result)
        }
        Command::Calibrate { corpus, out } => {
            let text = corpus_text(corpus.as_deref())?;
            let entries = parse_corpus(&text).map_err(|e| Failure::usage(e.to_string()))?;
            let constants = load_constants()?;
            let mut manifest = start_manifest(&out, "calibrate", &text, &constants, 0, 1)?;
            let result = calibrate(&entries, &CalibrationOptions::default()).map(|cal| {
                let body = cal.to_text();
                Outcome {
                    files: vec![OutputFile {
                        name: "constants.txt".into(),
                        bytes: body.clone().into_bytes(),
                    }],
                    falsifications: 0,
                    report: body,
                }
            });
            conclude(&out, &mut manifest, result)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

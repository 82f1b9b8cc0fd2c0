//! Command dispatch, configuration and output for the `tool` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod experiments;
pub mod output;

use clap::Parser;
use config::{load_config, ExperimentConfig, Overrides};
use experiment::{experiment_registry, Outcome};
use std::path::PathBuf;
use std::time::Instant;

/// Errors of a run, mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] lrising::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

impl RunError {
    pub fn exit_code(&self) -> i32 {
        use lrising::Error as E;
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Model(E::InvalidParameter(_) | E::TooLarge { .. } | E::ScheduleOverflow { .. }) => EXIT_CONFIG,
            _ => EXIT_INTERNAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_CONFIG => "config",
            _ => "internal",
        }
    }
}

/// Runs the experiment named in `cfg` without touching the disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let registry = experiment_registry();
    let exp = registry.must_get(&cfg.command).map_err(RunError::Config)?;
    exp.run(&cfg.params)
}

/// Runs `cfg` and writes its CSV files and manifest; returns the exit code.
pub fn run(cfg: &ExperimentConfig) -> i32 {
    let start = Instant::now();
    let result = execute(cfg);
    let dir = PathBuf::from(cfg.params.text("output_dir").unwrap_or_else(|_| config::DEFAULT_OUTPUT_DIR.into()));
    let (outcome, error) = match result {
        Ok(o) => (Some(o), None),
        Err(e) => (None, Some(e)),
    };
    let written = match &outcome {
        Some(o) => output::write_tables(&dir, &o.tables),
        None => Ok(Vec::new()),
    };
    let (files, error) = match (written, error) {
        (Ok(f), e) => (f, e),
        (Err(e), _) => (Vec::new(), Some(e)),
    };
    let code = match (&outcome, &error) {
        (_, Some(e)) => e.exit_code(),
        (Some(o), None) if o.passed() => EXIT_PASS,
        _ => EXIT_ASSERTION,
    };
    let manifest = output::Manifest::new(cfg, outcome.as_ref(), files, error.as_ref(), code, start.elapsed());
    if let Err(e) = output::write_manifest(&dir, &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_INTERNAL;
    }
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }
    if let Some(o) = &outcome {
        for a in &o.assertions {
            eprintln!("{} {}", if a.pass { "PASS" } else { "FAIL" }, a.name);
        }
    }
    code
}

#[derive(Debug, Parser)]
#[command(name = "tool", version, about = "Long-range Ising experiments with random boundary conditions")]
struct Cli {
    /// One of: toy-scan, wllt-check, contours-verify, peierls, rho-scan,
    /// gibbs-exact, gibbs-mc, metastate, null-recurrence, dichotomy.
    command: String,
    /// Flat JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Caps the worker pool at `TOOL_THREADS` when set.
fn init_threads() -> Result<(), RunError> {
    let Ok(v) = std::env::var("TOOL_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RunError::Config(format!("TOOL_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RunError::Config(format!("cannot size the thread pool: {e}")))
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let overrides = Overrides {
        command: Some(cli.command.clone()),
        seed: cli.seed,
        output_dir: cli.out.as_ref().map(|p| p.display().to_string()),
    };
    match load_config(cli.config.as_deref(), &overrides) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            if let Some(dir) = &cli.out {
                let m = output::Manifest::config_failure(&cli.command, &e);
                let _ = output::write_manifest(dir, &m);
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

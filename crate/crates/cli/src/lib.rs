//! Experiment runner for the `nodeflow` verification suites.
//!
//! A run reads one JSON [`config::ExperimentConfig`], executes the named
//! suite and writes `<prefix>.csv`, `<prefix>.report.json` and, for suites
//! with a chart, `<prefix>.svg`. Nothing is written unless the suite
//! completes.

pub mod config;
pub mod output;
pub mod suites;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

pub use config::{ConfigInvalid, ExperimentConfig, SuiteKind};
pub use suites::{run_suite, CaseError, Check, SuiteOutput};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "NODEFLOW_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigInvalid),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug)]
pub struct RunOutcome {
    pub output: SuiteOutput,
    pub csv_path: PathBuf,
    pub report_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.output.passed()
    }
}

/// Suite names, one per line, or a JSON array of them.
pub fn list_suites(as_json: bool) -> String {
    let names: Vec<&str> = SuiteKind::ALL.iter().map(|k| k.name()).collect();
    if as_json {
        serde_json::to_string(&names).expect("strings serialize")
    } else {
        names.join("\n")
    }
}

/// `flag` if given, else a positive integer from [`THREADS_ENV`].
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, RunError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Threads(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn output_paths(config: &ExperimentConfig, out_dir: Option<&Path>) -> (PathBuf, PathBuf, PathBuf) {
    let prefix = match out_dir {
        Some(dir) => dir.join(&config.output_prefix),
        None => PathBuf::from(&config.output_prefix),
    };
    let with = |suffix: &str| {
        let mut s = prefix.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with(".csv"), with(".report.json"), with(".svg"))
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    let io = |source| RunError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

/// The JSON report. Everything run-dependent lives under `metadata`.
pub fn report_json(config: &ExperimentConfig, output: &SuiteOutput, threads: usize) -> Value {
    let generated = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "suite": config.kind,
        "seed": config.seed,
        "passed": output.passed(),
        "config": config,
        "checks": output.checks,
        "results": output.results,
        "metadata": {
            "generated_unix_seconds": generated,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": threads,
        },
    })
}

/// Runs a suite and writes its outputs.
pub fn run_config(config: &ExperimentConfig, out_dir: Option<&Path>, threads: Option<usize>) -> Result<RunOutcome, RunError> {
    let (output, used_threads) = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| RunError::Threads(e.to_string()))?;
            (pool.install(|| run_suite(config))?, n)
        }
        None => (run_suite(config)?, rayon::current_num_threads()),
    };
    let (csv_path, report_path, svg) = output_paths(config, out_dir);
    write(&csv_path, &output.table.to_csv())?;
    let report = report_json(config, &output, used_threads);
    write(&report_path, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    let svg_path = match (&output.chart, config.svg) {
        (Some(chart), true) => {
            write(&svg, &chart.to_svg())?;
            Some(svg)
        }
        _ => None,
    };
    Ok(RunOutcome { output, csv_path, report_path, svg_path })
}

/// Parses a config file and runs it.
pub fn run_file(path: &Path, out_dir: Option<&Path>, threads: Option<usize>) -> Result<RunOutcome, RunError> {
    let config = ExperimentConfig::from_file(path)?;
    run_config(&config, out_dir, threads)
}

//! Configuration, task dispatch and artifact writing for the `cavity-ising`
//! command-line tool.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub mod config;
mod output;
pub mod tasks;

pub use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Fixed points and hysteresis traces over a drive grid.
    Sweep,
    /// All fixed points at selected drives.
    Branches,
    /// Critical drives along parameter axes and the detuning scaling check.
    Phase,
    /// Fluctuation spectra and critical exponents.
    Fluct,
    /// Cross-module consistency checklist.
    Validate,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Sweep => "sweep",
            Task::Branches => "branches",
            Task::Phase => "phase",
            Task::Fluct => "fluct",
            Task::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure in {}: {0}", .0.operation())]
    Numerical(#[from] cavity_ising::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Checklist items failed; `report` holds one line per item.
    #[error("validation failed: {failed}")]
    ValidationFailed { failed: String, report: Vec<String> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } | CliError::ValidationFailed { .. } => 1,
        }
    }
}

/// Artifacts and console lines produced by one run.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub artifacts: Vec<PathBuf>,
    pub lines: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    task: Task,
    format: Format,
    config: &'a RunConfig,
    wall_time_s: f64,
    artifacts: Vec<String>,
}

/// Runs `task` and writes its artifacts plus `run.json` into `out_dir`.
pub fn run(task: Task, config: &RunConfig, out_dir: &Path, format: Format) -> Result<RunSummary, CliError> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let start = Instant::now();
    let result = match task {
        Task::Sweep => tasks::sweep(config, out_dir, format),
        Task::Branches => tasks::branches(config, out_dir, format),
        Task::Phase => tasks::phase(config, out_dir, format),
        Task::Fluct => tasks::fluct(config, out_dir, format),
        Task::Validate => tasks::validate(config, out_dir),
    };
    // A failed checklist still leaves its report behind.
    let (mut summary, failure) = match result {
        Ok(s) => (s, None),
        Err(tasks::TaskError::Checklist(s, failed)) => {
            let report = s.lines.clone();
            (s, Some(CliError::ValidationFailed { failed, report }))
        }
        Err(tasks::TaskError::Cli(e)) => return Err(e),
    };
    let manifest = Manifest {
        tool: "cavity-ising",
        version: env!("CARGO_PKG_VERSION"),
        task,
        format,
        config,
        wall_time_s: start.elapsed().as_secs_f64(),
        artifacts: summary
            .artifacts
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    summary.artifacts.push(output::write_json(out_dir, "run.json", &manifest)?);
    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

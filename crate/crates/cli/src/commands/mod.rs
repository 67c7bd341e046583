pub mod eval;
pub mod replay;
pub mod report;
pub mod train;

use std::fmt::Display;
use std::path::{Path, PathBuf};

use cloudward::config::RunConfig;

/// Environment variable naming the parent directory for run directories.
pub const RUNS_ENV: &str = "CLOUDWARD_RUNS";

#[derive(Debug)]
pub enum CliError {
    /// Wrong invocation; exit code 1.
    Usage(String),
    /// Unreadable or invalid input data; exit code 2.
    Data(String),
}

pub fn usage(msg: impl Display) -> CliError {
    CliError::Usage(msg.to_string())
}

pub fn data(msg: impl Display) -> CliError {
    CliError::Data(msg.to_string())
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p).map_err(data),
        None => Ok(RunConfig::default()),
    }
}

/// Where a run's artifacts go: the explicit --out path, or a fresh
/// timestamped directory under the configured root (overridable through
/// the CLOUDWARD_RUNS environment variable).
pub fn resolve_run_dir(
    out: Option<PathBuf>,
    cfg: &RunConfig,
    label: &str,
    seed: u64,
) -> PathBuf {
    if let Some(dir) = out {
        return dir;
    }
    let root = std::env::var_os(RUNS_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(&cfg.output.root));
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    root.join(format!("{stamp}-{label}-seed{seed}"))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| data(format!("cannot write {}: {e}", path.display())))
}

/// Print to stdout, treating a closed pipe (`cloudward ... | head`) as a
/// normal end of output rather than an error.
pub fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(data(format!("cannot write to stdout: {e}"))),
    }
}

//! Configuration, dispatch and exit codes of the `rspin` binary.
//!
//! Data goes to `--out` or standard output. Diagnostics go to standard error.

use std::io::Write;
use std::path::{Path, PathBuf};

use rspin_core::correlator::{correlators_to_csv, correlators_to_json, extract_correlators, CorrelatorError};
use rspin_core::generators::Generators;
use rspin_core::io::serialize_tau;
use rspin_core::solver::compute_tau_with;
use rspin_core::verify::{
    check_commutators, check_exponential_agreement, reports_to_json, run_checks, Check, CheckReport, CheckStatus,
    VerifyError,
};
use rspin_core::{SolverError, TauCache, TauExpansion};
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Compute,
    Correlators,
    Verify,
    Commutator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub enum Verbosity {
    Quiet,
    #[default]
    Normal,
    Verbose,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub r: u32,
    pub degree: u32,
    pub out_path: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub format: Format,
    /// Empty means every check.
    pub checks: Vec<Check>,
    pub m_max: Option<i64>,
    pub generators: Generators,
    pub verbosity: Verbosity,
}

impl RunConfig {
    pub fn new(command: Command, r: u32, degree: u32) -> Self {
        RunConfig {
            command,
            r,
            degree,
            out_path: None,
            cache_dir: None,
            format: Format::Json,
            checks: Vec::new(),
            m_max: None,
            generators: Generators::default(),
            verbosity: Verbosity::Normal,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.r < 2 {
            return Err(CliError::Invalid(format!("--r must be at least 2, got {}", self.r)));
        }
        if self.format == Format::Csv && self.command != Command::Correlators {
            return Err(CliError::Invalid(
                "--format csv is only available for correlators".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Correlator(#[from] CorrelatorError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode output: {0}")]
    Encode(String),
}

/// Runs one command and returns the process exit code.
pub fn run(config: &RunConfig) -> u8 {
    match execute(config) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("rspin: {err}");
            EXIT_INVALID
        }
    }
}

fn execute(config: &RunConfig) -> Result<u8, CliError> {
    config.validate()?;
    let log = Logger(config.verbosity);
    match config.command {
        Command::Compute => {
            let tau = solve(config, &log)?;
            emit(config, &serialize_tau(&tau))?;
            Ok(EXIT_OK)
        }
        Command::Correlators => {
            let tau = solve(config, &log)?;
            let records = extract_correlators(&tau)?;
            log.info(format_args!("{} correlators", records.len()));
            let bytes = match config.format {
                Format::Json => correlators_to_json(&records),
                Format::Csv => correlators_to_csv(&records).map_err(|e| CliError::Encode(e.to_string()))?,
            };
            emit(config, &bytes)?;
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let tau = solve(config, &log)?;
            let checks = if config.checks.is_empty() {
                Check::ALL.to_vec()
            } else {
                config.checks.clone()
            };
            let reports = run_checks(&tau, &checks, config.m_max);
            for report in &reports {
                log.report(report);
            }
            emit(config, &reports_to_json(&reports))?;
            let failed = reports.iter().any(|r| !r.passed());
            Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
        }
        Command::Commutator => {
            let commutators = check_commutators(config.r, config.degree, config.generators)?;
            let tau = solve(config, &log)?;
            let exponential = check_exponential_agreement(&tau)?;
            let reports = [commutators, exponential];
            for report in &reports {
                log.report(report);
            }
            emit(config, &reports_to_json(&reports))?;
            Ok(EXIT_OK)
        }
    }
}

fn solve(config: &RunConfig, log: &Logger) -> Result<TauExpansion, CliError> {
    let cache = config.cache_dir.as_ref().map(TauCache::new);
    if let Some(c) = &cache {
        log.verbose(format_args!("cache directory {}", c.dir().display()));
    }
    let start = std::time::Instant::now();
    let tau = compute_tau_with(config.r, config.degree, config.generators, cache.as_ref())?;
    log.verbose(format_args!(
        "solved r = {} to degree {} ({} generators, {} backend) in {:.1} ms",
        config.r,
        config.degree,
        config.generators,
        rspin_core::exec::backend(),
        start.elapsed().as_secs_f64() * 1e3
    ));
    Ok(tau)
}

fn emit(config: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &config.out_path {
        Some(path) => write_file(path, bytes),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|source| CliError::Write {
                path: "standard output".into(),
                source,
            }),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

struct Logger(Verbosity);

impl Logger {
    fn info(&self, args: std::fmt::Arguments) {
        if self.0 >= Verbosity::Normal {
            eprintln!("{args}");
        }
    }

    fn verbose(&self, args: std::fmt::Arguments) {
        if self.0 >= Verbosity::Verbose {
            eprintln!("{args}");
        }
    }

    /// One summary line per report. Nonzero diagnostics are printed even in
    /// quiet mode.
    fn report(&self, report: &CheckReport) {
        let loud = report.status == CheckStatus::Diagnostic && !report.is_clean();
        if self.0 == Verbosity::Quiet && !loud {
            return;
        }
        let tag = match (report.status, report.is_clean()) {
            (CheckStatus::Diagnostic, false) => "DIAGNOSTIC NONZERO".to_string(),
            (status, _) => status.to_string().to_uppercase(),
        };
        eprintln!(
            "{tag} {}: {} evaluated, {} vacuous, {} residual(s), {} failure(s), {:.1} ms",
            report.check_name,
            report.evaluated,
            report.vacuous,
            report.residuals.len(),
            report.failures.len(),
            report.timing_ms
        );
        let limit = if self.0 == Verbosity::Verbose { usize::MAX } else { 3 };
        for residual in report.residuals.iter().take(limit) {
            eprintln!("  {}: {}", residual.label, residual.polynomial);
        }
        for failure in report.failures.iter().take(limit) {
            eprintln!("  {failure}");
        }
    }
}

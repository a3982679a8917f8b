use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rspin_cli::{run, Command, Format, RunConfig, Verbosity};
use rspin_core::generators::Generators;
use rspin_core::verify::Check;

/// Exact r-spin intersection numbers from the W-constraint recursion.
#[derive(Parser)]
#[command(name = "rspin", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve for the graded pieces of the partition function.
    Compute(Common),
    /// Extract correlators sorted by genus and insertions.
    Correlators(Common),
    /// Run the exact checks. Exits 1 if any fails.
    Verify(VerifyArgs),
    /// Report [A_i, A_j] residuals and exponential-formula agreement.
    Commutator(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    r: u32,
    #[arg(long)]
    degree: u32,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory of cached graded pieces.
    #[arg(long, env = "RSPIN_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "elementary")]
    generators: GeneratorsArg,
    #[arg(long, short, conflicts_with = "verbose")]
    quiet: bool,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated subset of wconstraints, string_dilaton, grading, selection.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Largest constraint mode to check.
    #[arg(long, allow_negative_numbers = true)]
    m_max: Option<i64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorsArg {
    Elementary,
    PowerSum,
}

fn config(command: Command, c: Common) -> RunConfig {
    let mut cfg = RunConfig::new(command, c.r, c.degree);
    cfg.out_path = c.out;
    cfg.cache_dir = c.cache_dir.filter(|p| !p.as_os_str().is_empty());
    cfg.format = match c.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    cfg.generators = match c.generators {
        GeneratorsArg::Elementary => Generators::Elementary,
        GeneratorsArg::PowerSum => Generators::PowerSum,
    };
    cfg.verbosity = if c.quiet {
        Verbosity::Quiet
    } else if c.verbose {
        Verbosity::Verbose
    } else {
        Verbosity::Normal
    };
    cfg
}

fn main() -> ExitCode {
    let cfg = match Cli::parse().command {
        Sub::Compute(c) => config(Command::Compute, c),
        Sub::Correlators(c) => config(Command::Correlators, c),
        Sub::Commutator(c) => config(Command::Commutator, c),
        Sub::Verify(v) => {
            let mut cfg = config(Command::Verify, v.common);
            cfg.m_max = v.m_max;
            for name in &v.checks {
                match name.trim().parse::<Check>() {
                    Ok(check) => cfg.checks.push(check),
                    Err(err) => {
                        eprintln!("rspin: invalid input: {err}");
                        return ExitCode::from(rspin_cli::EXIT_INVALID);
                    }
                }
            }
            cfg
        }
    };
    ExitCode::from(run(&cfg))
}

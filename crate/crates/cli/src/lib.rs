//! Command-line driver: protocol runs, privacy audits, distortion sweeps and
//! communication-cost tables.
//!
//! [`run`] is the whole program minus process exit, so tests and custom
//! binaries can register extra protocols (e.g. deliberately broken ones).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sumtype_mpc::analysis::{AnalysisError, DEFAULT_AUDIT_BUDGET};
use sumtype_mpc::sampling::DEFAULT_ENUMERATION_BUDGET;
use sumtype_mpc::{EngineError, Protocol, ProtocolKind};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod inputs;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{origin}:{line}: {message}")]
    Input {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Parser, Debug)]
#[command(
    name = "sumtype-mpc",
    version,
    about = "Subsampled three-party computation of sum-type functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one protocol on a pair of sequences.
    #[command(args_override_self = true)]
    Run(RunArgs),
    /// Exhaustive privacy audit on a tiny instance.
    #[command(args_override_self = true)]
    Audit(AuditArgs),
    /// Worst-case distortion sweep over (n, m).
    #[command(args_override_self = true)]
    Distortion(DistortionArgs),
    /// Communication cost and rate sweep over n.
    #[command(name = "comm-cost", args_override_self = true)]
    CommCost(CommArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exhaustive,
    MonteCarlo,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, default_value = "otp")]
    pub protocol: String,
    /// Builtin table name or path to a table file.
    #[arg(long, default_value = "hamming")]
    pub f1: String,
    /// `|X|,|Y|` for builtin tables.
    #[arg(long)]
    pub alphabets: Option<String>,
    /// Alice's sequence file.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Bob's sequence file.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Builtin sequence generator, used instead of --x/--y.
    #[arg(long = "gen")]
    pub generator: Option<String>,
    /// Sequence length for --gen.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample size: a positive integer, `sqrt` or `equal-n`.
    #[arg(long)]
    pub m: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Field modulus; defaults to the protocol's smallest admissible prime.
    #[arg(long)]
    pub modulus: Option<u64>,
    /// Write the full transcript here.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long)]
    pub protocol: String,
    #[arg(long, default_value = "hamming")]
    pub f1: String,
    #[arg(long)]
    pub alphabets: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long)]
    pub modulus: Option<u64>,
    /// Cap on input pairs times randomness leaves.
    #[arg(long, default_value_t = DEFAULT_AUDIT_BUDGET)]
    pub budget: u64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DistortionArgs {
    #[arg(long, default_value = "hamming")]
    pub f1: String,
    #[arg(long)]
    pub alphabets: Option<String>,
    /// Comma-separated sequence lengths.
    #[arg(long)]
    pub n: String,
    /// Comma-separated sample sizes; cells with m > n are skipped.
    #[arg(long)]
    pub m: String,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: Mode,
    /// Index sets sampled per candidate pair in monte-carlo mode.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random candidate pairs added to the structured ones in monte-carlo mode.
    #[arg(long, default_value_t = 8)]
    pub random_pairs: usize,
    /// Protocol whose live run supplies the rate column.
    #[arg(long, default_value = "poly-l")]
    pub protocol: String,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CommArgs {
    #[arg(long)]
    pub protocol: String,
    #[arg(long, default_value = "hamming")]
    pub f1: String,
    #[arg(long)]
    pub alphabets: Option<String>,
    /// Comma-separated sequence lengths.
    #[arg(long)]
    pub n: String,
    /// `sqrt`, `equal-n` or a fixed positive integer.
    #[arg(long, alias = "m", default_value = "sqrt")]
    pub m_rule: String,
    /// Fixed field modulus for every cell.
    #[arg(long)]
    pub modulus: Option<u64>,
    /// Meter a live run per cell and compare it with the closed form.
    #[arg(long, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub verify_live: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Verification result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Verified,
    Failed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Verified => EXIT_OK,
            Outcome::Failed => EXIT_VERIFICATION_FAILED,
        }
    }
}

/// Looks `name` up among the builtin protocols, then `extra`.
pub fn resolve_protocol<'a>(name: &str, extra: &[&'a dyn Protocol]) -> Result<&'a dyn Protocol, CliError> {
    if let Ok(kind) = name.parse::<ProtocolKind>() {
        return Ok(kind.protocol());
    }
    extra.iter().copied().find(|p| p.name() == name).ok_or_else(|| {
        let mut known: Vec<&str> = ProtocolKind::ALL.iter().map(|k| k.name()).collect();
        known.extend(extra.iter().map(|p| p.name()));
        CliError::Usage(format!("unknown protocol `{name}` (known: {})", known.join(", ")))
    })
}

/// Expands `--config`, parses, runs, and returns the exit code.
pub fn run<I, T>(args: I, extra: &[&dyn Protocol], out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut args: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    if let Err(e) = expand_config(&mut args) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_ERROR;
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return EXIT_ERROR;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match commands::dispatch(cli.command, extra, out) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn expand_config(args: &mut Vec<String>) -> Result<(), CliError> {
    let Some(path) = config::take_config_flag(args)? else {
        return Ok(());
    };
    let mut entries = config::read_config(std::path::Path::new(&path))?;
    if let Some(pos) = entries.iter().position(|e| e.key == "command") {
        let command = entries.remove(pos).value;
        let has_subcommand = args.get(1).is_some_and(|a| !a.starts_with('-'));
        if !has_subcommand {
            args.insert(1.min(args.len()), command);
        } else if args[1] != command {
            return Err(CliError::Usage(format!(
                "{path}: config is for `{command}` but the command line says `{}`",
                args[1]
            )));
        }
    }
    config::splice_entries(args, &entries);
    Ok(())
}

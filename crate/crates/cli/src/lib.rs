//! The `treelab` command line: seeded experiments over the constructions,
//! adversaries and games of the `treelab` crate, written as text, JSON and CSV
//! artifacts with a replayable manifest.
//!
//! Exit codes: 0 ok, 2 a checked bound failed, 3 a guard refused the
//! parameters, 4 the input did not parse, 5 the game strategy failed, 1 for
//! I/O trouble.

mod commands;
pub mod order_expr;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use treelab::adversaries::AdversaryError;
use treelab::classes_games::ClassError;
use treelab::constructions::ConstructionError;
use treelab::functional::FunctionalError;
use treelab::machine::MachineError;
use treelab::trees::TreeError;

pub use commands::{AdversaryArgs, ConstructArgs, GameArgs, PhiArgs, ProfileArgs, ReplayArgs};
pub use output::Manifest;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "TREELAB_OUT";
pub const DEFAULT_OUT: &str = "treelab-out";

#[derive(Parser, Debug)]
#[command(name = "treelab", version, about = "Seeded experiments on incompressible trees and sets")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct Global {
    /// Output directory [default: $TREELAB_OUT, then ./treelab-out]
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Reference machine state as written by `adversary` (JSON); empty codebook if absent
    #[arg(long, global = true)]
    pub machine_state: Option<PathBuf>,
    /// Format of tabular outputs [default: csv for profile, json otherwise]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a set or tree and write it in its text format
    #[command(subcommand)]
    Construct(ConstructArgs),
    /// Run a compression adversary against bounded-use functionals
    #[command(subcommand)]
    Adversary(AdversaryArgs),
    /// Width and deficiency per level of a tree file
    Profile(ProfileArgs),
    /// Play and verify the tree game against a seeded opponent
    Game(GameArgs),
    /// Re-run a manifest and compare output digests
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    BoundViolation,
    StrategyFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::BoundViolation => 2,
            Status::StrategyFailure => 5,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    /// Printed on stdout.
    pub summary: serde_json::Value,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Strategy(String),
    #[error("{0}")]
    Io(String),
    /// `--help` and `--version`: not an error, printed as is.
    #[error("{0}")]
    Info(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Io(_) => 1,
            CliError::Guard(_) => 3,
            CliError::Parse(_) => 4,
            CliError::Strategy(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Info(_) => "info",
            CliError::Io(_) => "io",
            CliError::Guard(_) => "guard",
            CliError::Parse(_) => "parse",
            CliError::Strategy(_) => "strategy",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "code": self.code(), "message": self.to_string() }).to_string()
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::BadOrder(_) | ConstructionError::Tree(_) => CliError::Parse(e.to_string()),
            _ => CliError::Guard(e.to_string()),
        }
    }
}

impl From<AdversaryError> for CliError {
    fn from(e: AdversaryError) -> Self {
        match e {
            AdversaryError::Params(_) | AdversaryError::Parse { .. } => CliError::Parse(e.to_string()),
            _ => CliError::Guard(e.to_string()),
        }
    }
}

impl From<ClassError> for CliError {
    fn from(e: ClassError) -> Self {
        match e {
            ClassError::Params(_) | ClassError::Tree(_) => CliError::Parse(e.to_string()),
            ClassError::Guard(_) => CliError::Guard(e.to_string()),
            ClassError::IllegalMove { .. } | ClassError::NoExtension { .. } | ClassError::Strategy { .. } => {
                CliError::Strategy(e.to_string())
            }
        }
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<MachineError> for CliError {
    fn from(e: MachineError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<FunctionalError> for CliError {
    fn from(e: FunctionalError) -> Self {
        CliError::Guard(e.to_string())
    }
}

/// `args` without the output directory flag.
pub fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn parse(args: &[String]) -> Result<Cli, CliError> {
    Cli::try_parse_from(std::iter::once("treelab".to_string()).chain(args.iter().cloned())).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Info(e.render().to_string()),
            _ => CliError::Parse(e.render().to_string()),
        }
    })
}

/// Run one command line (without the program name).
pub fn run(args: &[String]) -> Result<Outcome, CliError> {
    let cli = parse(args)?;
    let out = resolve_out(cli.global.out.clone());
    commands::execute(cli, strip_out(args), &out)
}

/// Run with an explicit output directory, ignoring any `--out` in `args`.
pub fn run_into(args: &[String], out: &std::path::Path) -> Result<Outcome, CliError> {
    let argv = strip_out(args);
    let cli = parse(&argv)?;
    commands::execute(cli, argv, out)
}

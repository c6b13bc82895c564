//! Configuration-driven front end used by the `mfdstag` binary.
//!
//! Every failure is reported on stderr as a single line
//! `error code=<CODE> exit=<n> message=<text>`.

mod commands;
mod config;

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use thiserror::Error;

pub use commands::{build_mesh, build_problem, run, Outcome, Problem};
pub use config::{
    apply_override, CoefficientConfig, CoefficientPiece, CompareConfig, ConvergeConfig, DiscretizationConfig, ExprText,
    FamilyKind, InfSupConfig, MeshConfig, OutputConfig, PieceConfig, ProblemConfig, RunConfig, SolverConfig,
};

use crate::field::FieldError;
use crate::mesh::{MeshError, MeshIoError};
use crate::mfd::MfdError;
use crate::solver::SolverError;
use crate::verify::VerifyError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Solve,
    Converge,
    Compare,
    Infsup,
    MeshInfo,
}

#[derive(Debug, Parser)]
#[command(name = "mfdstag", version, about = "Mimetic finite differences with staggered diffusion coefficients")]
pub struct Cli {
    pub command: Command,
    /// TOML run configuration; built-in defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted-path override, e.g. `--set mesh.n=16`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    MeshFile(#[from] MeshIoError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Mfd(#[from] MfdError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{0}")]
    RateFloor(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "CONFIG",
            CliError::Io { .. } => "IO",
            CliError::Mesh(_) => "MESH",
            CliError::MeshFile(MeshIoError::Io { .. }) => "IO",
            CliError::MeshFile(_) => "MESH_FILE",
            CliError::Field(_) => "FIELD",
            CliError::Mfd(_) => "DISCRETIZATION",
            CliError::Solver(e) => solver_code(e),
            CliError::Verify(e) => verify_code(e),
            CliError::RateFloor(_) => "RATE_FLOOR",
            CliError::Invariant(_) => "INVARIANT",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "CONFIG" => 2,
            "IO" => 3,
            "MESH" | "MESH_FILE" => 4,
            "FIELD" | "EXPRESSION" | "DISCRETIZATION" => 5,
            "SOLVER" => 6,
            "POSITIVITY" => 7,
            "RATE_FLOOR" => 8,
            "INVARIANT" => 9,
            _ => 1,
        }
    }

    /// The single diagnostic line written to stderr.
    pub fn line(&self) -> String {
        format!(
            "error code={} exit={} message={}",
            self.code(),
            self.exit_code(),
            config::one_line(&self.to_string())
        )
    }
}

fn solver_code(e: &SolverError) -> &'static str {
    match e {
        SolverError::Positivity { .. } => "POSITIVITY",
        SolverError::Mfd(_) => "DISCRETIZATION",
        SolverError::Field(_) => "FIELD",
        SolverError::Linalg(_) | SolverError::NotConverged { .. } | SolverError::Unsupported(_) => "SOLVER",
    }
}

fn verify_code(e: &VerifyError) -> &'static str {
    match e {
        VerifyError::Parse(_) | VerifyError::Diff(_) => "EXPRESSION",
        VerifyError::Field(_) => "FIELD",
        VerifyError::Mesh(_) => "MESH",
        VerifyError::Solver(s) => solver_code(s),
        VerifyError::Level { source, .. } => verify_code(source),
        VerifyError::Levels(_) => "CONFIG",
    }
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// follow the same single-line format with code `USAGE`; help and version
/// requests print normally and return 0.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => main_with(cli),
        Err(e) if !e.use_stderr() => {
            let _ = write!(std::io::stdout(), "{e}");
            0
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let message = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error code=USAGE exit=2 message={}", config::one_line(message));
            2
        }
    }
}

/// Runs the parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match run(&cli) {
        Ok(outcome) => {
            let _ = write!(std::io::stdout(), "{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}

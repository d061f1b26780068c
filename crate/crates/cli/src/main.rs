//! Command-line front end: point evaluation, diagram figure, slope
//! constants, inequality audit, continuous paths and envelope probes.
//!
//! Exit codes: 0 ok, 2 usage or I/O, 3 solver failure, 4 verification
//! failure, 5 invariant breach.

mod commands;
mod shapes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use shapes::ShapeArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("invariant breach: {0}")]
    Invariant(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Io(_) => 2,
            Self::Solver(_) => 3,
            Self::Verification(_) => 4,
            Self::Invariant(_) => 5,
        }
    }
}

impl From<santalo::fem::FemError> for CliError {
    fn from(e: santalo::fem::FemError) -> Self {
        Self::Solver(e.to_string())
    }
}

impl From<santalo::diagram::DiagramError> for CliError {
    fn from(e: santalo::diagram::DiagramError) -> Self {
        use santalo::diagram::DiagramError as E;
        match e {
            E::InvalidSpec(_) | E::OutOfRange { .. } => Self::Usage(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

impl From<santalo::special::SpecialError> for CliError {
    fn from(e: santalo::special::SpecialError) -> Self {
        Self::Solver(e.to_string())
    }
}

impl From<santalo::shapederiv::ShapeDerivError> for CliError {
    fn from(e: santalo::shapederiv::ShapeDerivError) -> Self {
        Self::Solver(e.to_string())
    }
}

impl From<santalo::optimize::OptimizeError> for CliError {
    fn from(e: santalo::optimize::OptimizeError) -> Self {
        use santalo::optimize::OptimizeError as E;
        match e {
            E::BudgetTooSmall { .. } | E::InvalidTarget { .. } => Self::Usage(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Usage(format!("cannot write CSV: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "santalo", version, about = "Blaschke-Santalo diagram of (lambda_1, 1/T) for planar convex domains")]
pub struct Cli {
    /// Seed of every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Nested FEM meshes per shape (Richardson levels).
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=6))]
    pub levels: u64,
    /// Output directory for CSV, SVG and shape files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate one shape.
    Point {
        #[command(flatten)]
        shape: ShapeArgs,
    },
    /// Sample shape families, audit them against the region and draw the figure.
    Diagram {
        /// Comma-separated families: ellipse, rectangle, isosceles, regular, random, random:K.
        #[arg(long, value_delimiter = ',', default_value = "ellipse,rectangle,isosceles,regular,random")]
        families: Vec<String>,
        /// Shapes per family (default: the figure's grid for each family).
        #[arg(long)]
        count: Option<usize>,
        /// Bins of the empirical envelopes.
        #[arg(long, default_value_t = 12)]
        bins: usize,
    },
    /// Slope constants and finite-difference check of the second derivatives.
    Slopes {
        /// Largest mode of the r_m table.
        #[arg(long, default_value_t = 20)]
        max_m: u32,
    },
    /// Audit the classical inequalities over random convex polygons.
    Verify {
        /// Number of random polygons.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Audit the disk polygon instead.
        #[arg(long)]
        disk: bool,
        /// Report shapes violating the reverse Polya bound y <= x / C2.
        #[arg(long, value_name = "C2")]
        polya_c2: Option<f64>,
        /// Test hook: multiply every computed lambda_1 by this factor.
        #[arg(long, hide = true)]
        tamper_lambda: Option<f64>,
    },
    /// Continuous paths in the diagram.
    Path {
        #[arg(value_enum)]
        kind: PathArg,
        #[command(flatten)]
        shape: ShapeArgs,
        /// Steps along the path.
        #[arg(long, default_value_t = 32)]
        steps: usize,
        /// Grid resolution for loop certification.
        #[arg(long, default_value_t = 50)]
        grid: usize,
        /// Right end of a homothety curve.
        #[arg(long, default_value_t = 60.0)]
        x_max: f64,
    },
    /// Envelope estimates and shape optimization.
    Envelope {
        /// Minimize F_gamma = y - gamma x.
        #[arg(long, conflicts_with = "x_target")]
        gamma: Option<f64>,
        /// Extremize y at this x.
        #[arg(long)]
        x_target: Option<f64>,
        #[arg(long, value_enum, default_value_t = SenseArg::Min)]
        sense: SenseArg,
        /// Evaluation budget of a search.
        #[arg(long, default_value_t = 400)]
        budget: usize,
        /// Parallel restarts of an F_gamma search.
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        /// Bins of the empirical envelopes (without --gamma or --x-target).
        #[arg(long, default_value_t = 12)]
        bins: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathArg {
    Homothety,
    Css,
    Minkowski,
    Loop,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenseArg {
    Min,
    Max,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line front end for `wavespeed-core`.
//!
//! Every subcommand writes to caller-supplied sinks so it can be driven from
//! tests without spawning a process. [`CliError::exit_code`] maps failures to
//! the process exit status: 2 for bad arguments, 3 for numerical failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wavespeed_core::kernel::Kernel;

mod commands;
mod format;
pub mod svg;
mod verify;

pub use format::fmt_num;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<wavespeed_core::Error> for CliError {
    fn from(e: wavespeed_core::Error) -> Self {
        use wavespeed_core::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::UnsupportedVariant { .. }
            | E::KernelTable(_)
            | E::KernelSpec { .. }
            | E::EpsilonTooSmall(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wavespeed", version, about = "Minimal speeds of delayed non-local monostable fronts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical speed at one delay, with its bound window.
    Speed(PointArgs),
    /// c*(h) and every bound on a grid of delays, as CSV.
    Curve(CurveArgs),
    /// All bound candidates at one delay.
    Bounds(PointArgs),
    /// The G, H and R curves of the w-form system, as CSV.
    Curves(CurvesArgs),
    /// Run the built-in consistency checks.
    Verify(VerifyArgs),
    /// Simulate a front and fit its speed; writes the `t,x_front` trace.
    Simulate(SimulateArgs),
    /// Speed and bounds for p = 2, gaussian:alpha=1, h in [0, 5].
    Figure2(Figure2Args),
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Birth-rate slope g'(0); must exceed 1.
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    /// Delay h >= 0.
    #[arg(long, value_parser = parse_nonneg, default_value = "0")]
    pub h: f64,
    #[arg(long, value_parser = parse_kernel, default_value = "gaussian:alpha=1")]
    pub kernel: Kernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Direct,
    Ode,
    Both,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    #[arg(long, value_parser = parse_kernel, default_value = "gaussian:alpha=1")]
    pub kernel: Kernel,
    #[arg(long, value_parser = parse_nonneg, default_value = "0")]
    pub h_min: f64,
    #[arg(long, value_parser = parse_nonneg, default_value = "5")]
    pub h_max: f64,
    /// Number of equally spaced delays, endpoints included.
    #[arg(long, default_value_t = 51)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "direct")]
    pub method: Method,
    /// Largest RK4 step in h for the continuation method.
    #[arg(long, default_value_t = 0.01)]
    pub max_step: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render a line chart of every column against h.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    #[arg(long, value_parser = parse_nonneg, default_value = "0")]
    pub h: f64,
    #[arg(long, value_parser = parse_kernel, default_value = "gaussian:alpha=1")]
    pub kernel: Kernel,
    /// eps = 1/c²; defaults to the critical value at this delay.
    #[arg(long, value_parser = parse_positive)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 301)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_p, default_value = "2")]
    pub p: f64,
    #[arg(long, value_parser = parse_kernel, default_value = "gaussian:alpha=1")]
    pub kernel: Kernel,
    /// Relative perturbation applied to the continuation seed (test hook).
    #[arg(long, hide = true, default_value_t = 0.0)]
    pub perturb_seed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Birth {
    Nicholson,
    Capped,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    #[arg(long, value_parser = parse_nonneg, default_value = "0")]
    pub h: f64,
    #[arg(long, value_parser = parse_kernel, default_value = "dirac")]
    pub kernel: Kernel,
    #[arg(long, value_enum, default_value = "nicholson")]
    pub birth: Birth,
    /// Saturation level u+ of the capped birth function.
    #[arg(long, value_parser = parse_positive, default_value = "1")]
    pub cap: f64,
    #[arg(long, value_parser = parse_positive, default_value = "0.1")]
    pub dx: f64,
    #[arg(long, value_parser = parse_positive)]
    pub dt: Option<f64>,
    #[arg(long, value_parser = parse_positive, default_value = "400")]
    pub length: f64,
    #[arg(long, value_parser = parse_positive, default_value = "100")]
    pub t_end: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Figure2Args {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn parse_p(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if p > 1.0 && p.is_finite() {
        Ok(p)
    } else {
        Err(format!("the monostable hypothesis requires p > 1 (p = g'(0)), got {s}"))
    }
}

fn parse_nonneg(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err(format!("must be finite and >= 0, got {s}")),
        Err(_) => Err(format!("`{s}` is not a number")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err(format!("must be finite and > 0, got {s}")),
        Err(_) => Err(format!("`{s}` is not a number")),
    }
}

fn parse_kernel(s: &str) -> Result<Kernel, String> {
    s.parse().map_err(|e: wavespeed_core::Error| e.to_string())
}

/// Runs one parsed invocation. Primary output goes to `out` unless a
/// subcommand was given an output path; progress and summaries go to `diag`.
pub fn run(cli: Cli, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Speed(a) => commands::speed(&a, out),
        Command::Curve(a) => commands::curve(&a, out),
        Command::Bounds(a) => commands::bounds(&a, out),
        Command::Curves(a) => commands::curves(&a, out),
        Command::Verify(a) => verify::run(&a, out),
        Command::Simulate(a) => commands::simulate(&a, out, diag),
        Command::Figure2(a) => commands::curve(&figure2_args(a), out),
    }
}

/// The curve invocation that `figure2` stands for.
pub fn figure2_args(a: Figure2Args) -> CurveArgs {
    CurveArgs {
        p: 2.0,
        kernel: Kernel::gaussian(1.0).expect("alpha = 1 is valid"),
        h_min: 0.0,
        h_max: 5.0,
        samples: 101,
        method: Method::Both,
        max_step: 0.01,
        out: a.out,
        svg: a.svg,
    }
}

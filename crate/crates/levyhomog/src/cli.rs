use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Method;

#[derive(Debug, Parser)]
#[command(
    name = "levyhomog",
    version,
    about = "Periodic homogenization of nonlocal Lévy equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// INI configuration file; optional for `selftest`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cell solver, overriding `[cell] method`.
    #[arg(long, global = true)]
    pub method: Option<MethodArg>,
    /// Corrupt one quadrature weight before the comparison gate of `homogenize`.
    #[arg(long, global = true)]
    pub debug_tamper: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Ergodic constant of the cell problem at `[cell] i_value`.
    Cell,
    /// Fit the effective operator and check its certificate.
    Effective,
    /// Solve the ε-problem at `[problem] epsilon`.
    Solve,
    /// ε-sweep against the effective problem.
    Homogenize,
    /// Near/far split consistency on cosine modes.
    SplitCheck,
    /// Closed-form checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Discounted,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => Method::Direct,
            MethodArg::Discounted => Method::Discounted,
        }
    }
}

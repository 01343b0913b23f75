//! Configuration, file formats and the command-line front end for
//! `levyhomog-core`.

pub mod cli;
pub mod config;
pub mod emit;
pub mod error;
pub mod run;
pub mod selftest;

pub use error::{AppError, ConfigError};

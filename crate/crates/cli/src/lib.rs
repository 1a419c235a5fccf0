//! Command-line front end for training and evaluating dissipative quantum
//! GANs: configuration, file formats and subcommands.

pub mod commands;
pub mod config;
pub mod exit;
pub mod files;

pub use exit::{ExitKind, Failure, Outcome};

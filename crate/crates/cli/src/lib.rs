//! Command-line surface for the `mart-entropy` estimators: configuration,
//! artifact rendering and the verification suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

pub use config::{Format, Overrides, RunConfig};
pub use error::CliError;

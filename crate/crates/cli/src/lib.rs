//! Command-line driver for the `lll-phase` engine.

pub mod config;
pub mod error;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
pub use run::{run, Outcome};

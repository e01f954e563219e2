//! Configuration, orchestration and reporting for the `vlab` command line
//! tool.

pub mod battery;
pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

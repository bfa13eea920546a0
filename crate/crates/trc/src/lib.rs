//! File formats, parallel campaigns and the `trc` command line on top of
//! [`trc_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod output;

pub use error::{CliError, CliResult};

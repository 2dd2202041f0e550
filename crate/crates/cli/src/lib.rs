//! File formats, parallel drivers and the verification suite behind the
//! `unitarity` command-line tool.

pub mod channel_spec;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod runner;
pub mod scan;
pub mod verify;

pub use error::CliError;

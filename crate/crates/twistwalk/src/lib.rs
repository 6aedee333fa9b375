//! Parallel ensembles, configuration files, reports and the `twistwalk`
//! command-line front end on top of [`twistwalk_core`].

pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod io;

pub use error::CliError;

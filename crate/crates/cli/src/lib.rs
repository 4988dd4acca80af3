//! Configuration, experiment drivers and file output for the poroelasticity
//! solver.

pub mod config;
pub mod drivers;
pub mod error;
pub mod output;

pub use config::{parse_config, parse_config_str, Mode, RunConfig};
pub use error::{CliError, CliResult};

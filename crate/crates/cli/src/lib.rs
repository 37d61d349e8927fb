//! Library half of the `rpts` binary: argument parsing, the per-command
//! pipelines, and the experiment runner.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod pipeline;

pub use cli::{main_with, run, Cli};
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentSummary};

//! Maze experiments for the value-prior estimator: sweep configuration, the
//! parallel sweep driver, CSV output and the command-line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod results;
pub mod seeds;
pub mod sweep;

pub use config::{EstimatorKind, ExperimentConfig, RmsScope, Scenario};
pub use error::{ExpError, Result};
pub use results::{read_results, summarize, to_csv, write_results, ResultRow};
pub use sweep::run_sweep;

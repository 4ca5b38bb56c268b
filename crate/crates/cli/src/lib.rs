//! Command-line front end for the `spsim` simulator: configuration,
//! figure pipelines, sweeps and the photon budget.

mod app;
pub mod budget;
pub mod config;
pub mod figures;
pub mod output;
pub mod sweep;

pub use app::{run, EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
pub use config::RunConfig;

//! Command-line front end for `sketchguard`: sketch data, bootstrap a stored
//! sketch, plan a sketch size, and run oracle-versus-estimator experiments
//! that write CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod pair_file;
pub mod source;

pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, ExperimentResult, ExperimentRow, ExperimentSpec};

/// Sizes the global thread pool from `SKETCHGUARD_THREADS` (unset or `0`
/// means one thread per core). Results do not depend on the count.
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let threads = match value.map(str::trim) {
        None | Some("") => 0,
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| CliError::usage(format!("SKETCHGUARD_THREADS must be a count, got {v:?}")))?,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot configure thread pool: {e}")))
}

//! Experiment harness for `hemilearn`: instance generation, single trials,
//! parameter sweeps written as CSV, and an oracle self-test of the
//! projections.

use std::path::PathBuf;

pub mod config;
pub mod sweep;
pub mod trial;
pub mod verify;

pub use config::{Algorithm, ExperimentConfig, InstanceKind, NoiseSetting, SweepAxis, TrialParams, RestaurantModel};
pub use sweep::{sweep, write_sweep_csv, SweepResult};
pub use trial::{build_instance, execute, run_trial};
pub use verify::{verify, verify_with_fault, VerifyReport};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{}{}: {message}", path.display(), at_line(*line))]
    Config { path: PathBuf, line: usize, message: String },

    #[error("{0}")]
    Trial(String),

    #[error(transparent)]
    Core(#[from] hemilearn::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(":{line}")
    }
}

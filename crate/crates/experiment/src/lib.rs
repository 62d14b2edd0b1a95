//! Reproduction harness for the network experiments: configuration, seeded
//! runs, CSV output, horizon sweeps and the validation suite.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;
pub mod stats;
pub mod sweep;
pub mod validate;

pub use config::{load_config, parse_config, CaseSpec, ConfigError, ExperimentConfig};
pub use output::{emit_csv, read_csv, write_rows};
pub use run::{run_experiment, run_seed, summarize, ExperimentOutput, ResultRow};
pub use sweep::{horizon_sweep, SweepReport};
pub use validate::{validate_suite, Fault, ValidationOptions, ValidationReport};

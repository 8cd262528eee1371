//! Monte-Carlo experiment harness: configuration, seeded stream
//! derivation, the trial runner, CSV emission and complexity reports.
//!
//! The harness guarantees full determinism: a `(config, master_seed)` pair
//! produces byte-identical CSV output regardless of worker count, because
//! every random draw comes from a counter-derived substream keyed by
//! `(snr index, trial index, role)` rather than from a shared sequential
//! generator.

mod complexity;
mod config;
mod csv;
mod runner;
mod streams;

pub use complexity::{estimate_complexity_report, ComplexityEntry, ComplexityReport};
pub use config::{parse_config_file, DetectorKind, ExperimentConfig, SnrConvention};
pub use csv::{parse_csv, render_csv, write_csv};
pub use runner::{generate_trial, run_experiment, BerRecord, TrialSystem};
pub use streams::{
    substream, ROLE_BITS, ROLE_CHANNEL, ROLE_DETECTOR_BASE, ROLE_NOISE,
};

//! File formats, configuration and the command-line pipeline around
//! `stateselect-core`: CSV datasets with TOML manifests, benchmark
//! generation, prefiltering, cap sweeps of the selectors, prediction traces
//! and cost reports.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};

//! State-variable selection for data-driven linear surrogates.
//!
//! Given recorded process-variable time series, this crate picks a compact set
//! of measured channels to act as the state of a discrete-time LTI model and
//! identifies that model with dynamic mode decomposition with control (DMDc).
//! Two selectors share one accuracy cost:
//!
//! * [`rfe`]: recursive feature elimination ranked by the fitted output map,
//!   run per subsystem, followed by a cross-subsystem import step and an
//!   exhaustive subset sweep over the merged shortlist.
//! * [`ga`]: a binary-mask genetic search over the candidate pool.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. File formats, ingestion and the command-line front end live in the
//! `stateselect` companion crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod bench;
pub mod cost;
pub mod data;
pub mod dmdc;
mod error;
pub mod exec;
pub mod ga;
pub mod linalg;
pub mod prefilter;
pub mod rfe;
pub mod selection;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};

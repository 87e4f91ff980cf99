//! Simulation and verification toolkit for a d-station heavy-tailed
//! workload model under exponential admission control.
//!
//! Layers, bottom-up: [`model`] (parameters and policies), [`arrivals`]
//! (exact path simulation), [`fluid`] (deterministic limits), [`gaussian`]
//! (second-order limit objects), [`fractional`] (fBm and the fOU limit) and
//! [`harness`] (configured experiments and reports).

pub mod arrivals;
pub mod csvout;
pub mod error;
pub mod fluid;
pub mod fractional;
pub mod gaussian;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod stats;

pub use error::{Result, SimError, ValidationError};
pub use model::{alpha_window, intensity_eval, ModelParams, PolicyKind, PolicySpec};

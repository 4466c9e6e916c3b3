//! Composite Mirror Prox for convex-concave saddle-point problems.
//!
//! The crate is organized bottom-up:
//!
//! - [`prox_core`]: proximal setups and the composite prox-mapping,
//! - [`certificates`]: execution protocols, resolution and lower bounds,
//! - [`comp_mp`]: the stepper, adaptive stepsizes and the run loop,
//! - [`multiterm`]: multi-term composite problems with exact penalties,
//! - [`semisep`]: the filter-driven multi-stage solver for constrained problems,
//! - [`harness`]: instance generators, file formats, configuration and traces.

pub mod certificates;
pub mod comp_mp;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod multiterm;
pub mod prox_core;
pub mod semisep;

pub use error::{Error, Result};

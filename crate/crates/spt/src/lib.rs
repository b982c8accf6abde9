//! Quantum-trajectory simulator and analytic toolkit for continuous-wave
//! Rydberg single-photon transistors, in a cavity and in free space.
//!
//! Units: every rate is measured in units of the control excited-state decay
//! rate `gamma_ec`, which the presets set to 1. Lengths are arbitrary; the
//! van der Waals coefficient `c6` carries the compensating dimension.

pub mod cavity;
pub mod engine;
pub mod error;
pub mod freespace;
pub mod geometry;
pub mod harness;
pub mod scattering;

pub use num_complex::Complex64;

pub use error::{BlockadeError, EngineError, GeometryError, HarnessError};

//! Repeated-measurement quantum trajectories and their continuous limits.
//!
//! A qubit interacts in turn with fresh copies of a probe, the probe is
//! measured, and the conditional system state is kept. This crate builds
//! those discrete chains, the ODEs and SDEs they converge to, and a Monte
//! Carlo harness that checks the convergence numerically.
//!
//! Module map:
//! - [`linalg`]: small dense complex matrices, spectra, density checks.
//! - [`asymptotics`]: the φ/ψ integral maps, generator reconstruction,
//!   dilation unitaries and measurement constants.
//! - [`discrete`]: the trajectory generators.
//! - [`continuous`]: Lindblad-type ODEs, Euler–Maruyama, Volterra solvers.
//! - [`harness`]: experiments and reports.
//! - [`runner`]: JSON scenario files and command dispatch.

#![forbid(unsafe_code)]

pub mod asymptotics;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityOperator, Observable, C64};

//! Discrete repeated-measurement chains: a qubit meets a fresh probe each
//! step, the probe is measured, and the conditional state is kept.

mod config;
mod increments;
mod memory;
mod model;

pub use config::{
    MatrixSpec, ModelConfig, ModelKind, ObservableSpec, StateSpec, DEFAULT_EPS, DEFAULT_GAMMA_MEM,
};
pub use increments::increment_residual;
pub use memory::{evolve_memory_swap, swap_chain};
pub use model::{build_model, run_chain, simulate, simulate_steps, DiscreteModel, StepResult, TrajectoryRecord, DEGENERATE_TOL};

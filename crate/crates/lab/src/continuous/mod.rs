//! Continuous-time limits: master equations and their deterministic
//! relatives, Euler–Maruyama for the filtering SDEs, and a direct solver for
//! stochastic Volterra equations.

mod generators;
mod ode;
mod sde;
mod volterra;

pub use generators::{
    eps_map, eps_map_kraus, lindblad_apply, omega_eps, omega_trace_preserving, probe_kraus, swap_operator,
    theta_apply,
};
pub(crate) use generators::{apply_kraus, lindblad_with_jump};
pub use ode::{grid_steps, solve_ode, OdeKind, OdePath};
pub use sde::{
    build_sde_spec, em_integrate, em_run, EmOptions, Forcing, Increments, NoiseDrift, NoisePath, SdeParams, SdePath, SdeSpec,
    StateMap,
};
pub use volterra::{volterra_direct, Kernel, PlainMap, VolterraKernelPair};

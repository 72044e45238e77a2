//! Deterministic limits: RK4 for the local equations, a trapezoidal
//! convolution rule for the memory kernel equation.

use serde::Serialize;

use super::generators::{apply_kraus, eps_map_kraus, lindblad_with_jump, omega_eps, omega_trace_preserving};
use crate::asymptotics::Convention;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, EnvironmentState};

#[derive(Clone, Debug)]
pub enum OdeKind {
    /// dφ/dt = L(φ).
    Master { h0: ComplexMatrix, c: ComplexMatrix, convention: Convention },
    /// dφ/dt = (L⁺(φ) + L⁻(φ))/2.
    Averaged { h0: ComplexMatrix, c_plus: ComplexMatrix, c_minus: ComplexMatrix, convention: Convention },
    /// dφ/dt = Ω^ε(φ) = (1 − ε)φ + ε Σ K φ K†. Trace grows like e^t.
    Channel { kraus: [ComplexMatrix; 3], eps: f64 },
    /// dφ/dt = ε(Σ K φ K† − ½{G, φ}), the trace-preserving counterpart.
    ChannelTracePreserving { kraus: [ComplexMatrix; 3], eps: f64 },
    /// ψ_t = ρ₀ + ∫₀ᵗ e^{−Γ(t−s)} L(ψ_s) ds, solved in its local form
    /// dψ/dt = L(ψ) − Γ(ψ − ρ₀).
    MemoryMean { h0: ComplexMatrix, c: ComplexMatrix, convention: Convention, gamma: f64 },
    /// φ_t = Γ ∫₀ᵗ e^{−Γ(t−s)} ε_{t−s}[φ_s] ds + e^{−Γt} ε_t[ρ₀].
    VolterraDet { h: ComplexMatrix, gamma: f64, env: EnvironmentState },
}

#[derive(Clone, Debug, Serialize)]
pub struct OdePath {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
}

impl OdePath {
    /// State at grid index closest to t.
    pub fn at(&self, t: f64) -> &ComplexMatrix {
        let dt = self.times[1] - self.times[0];
        let k = ((t - self.times[0]) / dt).round() as usize;
        &self.states[k.min(self.states.len() - 1)]
    }
}

pub fn grid_steps(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_final > 0.0) {
        return Err(Error::Config(format!("need positive dt and horizon, got dt = {dt}, T = {t_final}")));
    }
    let steps = (t_final / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - t_final).abs() > 1e-9 * t_final {
        return Err(Error::Config(format!("horizon {t_final} is not a multiple of dt = {dt}")));
    }
    Ok(steps)
}

pub fn solve_ode(kind: &OdeKind, rho0: &ComplexMatrix, dt: f64, t_final: f64) -> Result<OdePath> {
    if dt > 1e-2 {
        return Err(Error::Config(format!("ODE step must be at most 1e-2, got {dt}")));
    }
    let steps = grid_steps(dt, t_final)?;
    match kind {
        OdeKind::VolterraDet { h, gamma, env } => volterra_det(h, *gamma, *env, rho0, dt, steps),
        _ => {
            let f = local_rhs(kind, rho0);
            Ok(rk4(&*f, rho0, dt, steps))
        }
    }
}

type Rhs = dyn Fn(&ComplexMatrix) -> ComplexMatrix;

fn local_rhs(kind: &OdeKind, rho0: &ComplexMatrix) -> Box<Rhs> {
    match kind.clone() {
        OdeKind::Master { h0, c, convention } => {
            let j = convention.jump(&c);
            Box::new(move |r| lindblad_with_jump(r, &h0, &j))
        }
        OdeKind::Averaged { h0, c_plus, c_minus, convention } => {
            let (jp, jm) = (convention.jump(&c_plus), convention.jump(&c_minus));
            Box::new(move |r| (lindblad_with_jump(r, &h0, &jp) + lindblad_with_jump(r, &h0, &jm)).scale_re(0.5))
        }
        OdeKind::Channel { kraus, eps } => Box::new(move |r| omega_eps(&kraus, eps, r)),
        OdeKind::ChannelTracePreserving { kraus, eps } => Box::new(move |r| omega_trace_preserving(&kraus, eps, r)),
        OdeKind::MemoryMean { h0, c, convention, gamma } => {
            let j = convention.jump(&c);
            let r0 = rho0.clone();
            Box::new(move |r| {
                let mut out = lindblad_with_jump(r, &h0, &j);
                out.axpy_re(-gamma, &(r - &r0));
                out
            })
        }
        OdeKind::VolterraDet { .. } => unreachable!("handled by the convolution solver"),
    }
}

fn rk4(f: &Rhs, rho0: &ComplexMatrix, dt: f64, steps: usize) -> OdePath {
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut y = rho0.clone();
    times.push(0.0);
    states.push(y.clone());
    for k in 0..steps {
        let k1 = f(&y);
        let k2 = f(&(&y + &k1.scale_re(dt / 2.0)));
        let k3 = f(&(&y + &k2.scale_re(dt / 2.0)));
        let k4 = f(&(&y + &k3.scale_re(dt)));
        let mut incr = k1;
        incr.axpy_re(2.0, &k2);
        incr.axpy_re(2.0, &k3);
        incr += &k4;
        y.axpy_re(dt / 6.0, &incr);
        y.symmetrize();
        times.push((k + 1) as f64 * dt);
        states.push(y.clone());
    }
    OdePath { times, states }
}

/// Trapezoidal rule on the convolution. The zero-lag kernel is the
/// identity map, so the implicit endpoint term is solved exactly by a
/// scalar division instead of a predictor–corrector pass.
fn volterra_det(
    h: &ComplexMatrix,
    gamma: f64,
    env: EnvironmentState,
    rho0: &ComplexMatrix,
    dt: f64,
    steps: usize,
) -> Result<OdePath> {
    if h.rows() != rho0.rows() * env.dim || h.hermiticity_error() > 1e-10 {
        return Err(Error::Dimension("Volterra Hamiltonian must be Hermitian on system ⊗ probe".into()));
    }
    let kraus: Vec<Vec<ComplexMatrix>> = (0..=steps).map(|m| eps_map_kraus(m as f64 * dt, h, env)).collect();
    let weight: Vec<f64> = (0..=steps).map(|m| (-gamma * m as f64 * dt).exp()).collect();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let denom = 1.0 - gamma * dt / 2.0;
    for k in 1..=steps {
        let boundary = apply_kraus(&kraus[k], rho0);
        let mut conv = boundary.scale_re(0.5 * weight[k]);
        for j in 1..k {
            conv.axpy_re(weight[k - j], &apply_kraus(&kraus[k - j], &states[j]));
        }
        let mut next = conv.scale_re(gamma * dt);
        next.axpy_re(weight[k], &boundary);
        let mut next = next.scale_re(1.0 / denom);
        next.symmetrize();
        times.push(k as f64 * dt);
        states.push(next);
    }
    Ok(OdePath { times, states })
}

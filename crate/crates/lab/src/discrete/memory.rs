//! Deterministic swap-memory chain.
//!
//! ρ_k = (1 − p) Σ_{j=1}^{k−1} p^{j−1} E₀[U^j(ρ_{k−j}⊗β)U^{†j}] + p^{k−1} E₀[U^k(ρ₀⊗β)U^{†k}]
//! with U = e^{−iH/n} and p = e^{−Γ/n}.

use super::config::ModelKind;
use super::model::DiscreteModel;
use crate::continuous::{apply_kraus, probe_kraus};
use crate::error::{Error, Result};
use crate::linalg::{exp_i_hermitian, ComplexMatrix, EnvironmentState};

pub fn evolve_memory_swap(model: &DiscreteModel) -> Result<Vec<ComplexMatrix>> {
    if model.kind != ModelKind::MemorySwap {
        return Err(Error::Config(format!("evolve_memory_swap needs memory_swap, got {}", model.kind.name())));
    }
    let h = model.hamiltonian.as_ref().expect("memory_swap models carry a Hamiltonian");
    Ok(swap_chain(h, model.initial.matrix(), model.n, model.p_reset))
}

/// The recursion for an arbitrary weight p ∈ [0, 1]; p = 0 is the
/// memoryless collision chain, p = 1 leaves only the k-fold interaction.
pub fn swap_chain(h: &ComplexMatrix, rho0: &ComplexMatrix, n: usize, p: f64) -> Vec<ComplexMatrix> {
    let env = EnvironmentState::ground(2);
    let u = exp_i_hermitian(h, 1.0 / n as f64);
    // kraus[j] realizes E₀[U^j(·⊗β)U^{†j}], j = 0..=n.
    let mut kraus = Vec::with_capacity(n + 1);
    let mut power = ComplexMatrix::identity(h.rows());
    for _ in 0..=n {
        kraus.push(probe_kraus(&power, env));
        power = u.matmul(&power);
    }
    let weights: Vec<f64> = (0..=n).map(|j| p.powi(j as i32)).collect();
    let mut states = vec![rho0.clone()];
    for k in 1..=n {
        let mut next = apply_kraus(&kraus[k], rho0).scale_re(weights[k - 1]);
        for j in 1..k {
            next.axpy_re((1.0 - p) * weights[j - 1], &apply_kraus(&kraus[j], &states[k - j]));
        }
        next.symmetrize();
        states.push(next);
    }
    states
}

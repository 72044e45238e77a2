//! The linear and nonlinear maps on states that appear as drifts and
//! diffusion coefficients.

use crate::asymptotics::Convention;
use crate::linalg::{exp_i_hermitian, partial_trace_env, ComplexMatrix, EnvironmentState, C64, I};

/// L(ρ) = −i[H₀, ρ] − ½{J†J, ρ} + JρJ†, with J = C or C† per convention.
pub fn lindblad_apply(rho: &ComplexMatrix, h0: &ComplexMatrix, c: &ComplexMatrix, convention: Convention) -> ComplexMatrix {
    lindblad_with_jump(rho, h0, &convention.jump(c))
}

pub(crate) fn lindblad_with_jump(rho: &ComplexMatrix, h0: &ComplexMatrix, j: &ComplexMatrix) -> ComplexMatrix {
    lindblad_cached(rho, h0, j, &j.adjoint().matmul(j))
}

/// As [`lindblad_with_jump`] with J†J supplied, for hot loops.
pub(crate) fn lindblad_cached(rho: &ComplexMatrix, h0: &ComplexMatrix, j: &ComplexMatrix, jdj: &ComplexMatrix) -> ComplexMatrix {
    let mut out = h0.commutator(rho).scale(-I);
    out.axpy_re(-0.5, &jdj.anticommutator(rho));
    out += &j.sandwich(rho);
    out
}

/// Θ_C(ρ) = Cρ + ρC† − Tr[ρ(C + C†)]ρ.
pub fn theta_apply(rho: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    let c_rho = c.matmul(rho);
    let rho_cd = rho.matmul_adjoint(c);
    let tr = (c_rho.trace() + rho_cd.trace()).re;
    let mut out = c_rho + &rho_cd;
    out.axpy_re(-tr, rho);
    out
}

/// Ω^ε(ρ) = (1 − ε)ρ + ε Σ K_a ρ K_a†.
pub fn omega_eps(kraus: &[ComplexMatrix; 3], eps: f64, rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = rho.scale_re(1.0 - eps);
    for k in kraus {
        out.axpy_re(eps, &k.sandwich(rho));
    }
    out
}

/// ε(Σ K_a ρ K_a† − ½{G, ρ}) with G = Σ K_a†K_a: the generator realized by
/// the unitarized noise interaction. Equals Ω^ε(ρ) − ρ when G = I.
pub fn omega_trace_preserving(kraus: &[ComplexMatrix; 3], eps: f64, rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
    let mut g = ComplexMatrix::zeros(rho.rows(), rho.cols());
    for k in kraus {
        out += &k.sandwich(rho);
        g += &k.adjoint().matmul(k);
    }
    out.axpy_re(-0.5, &g.anticommutator(rho));
    out.scale_re(eps)
}

/// Kraus operators of ε_t[ρ] = E₀[e^{−itH}(ρ⊗β)e^{itH}] on C²⊗C².
pub fn eps_map_kraus(t: f64, h: &ComplexMatrix, env: EnvironmentState) -> Vec<ComplexMatrix> {
    probe_kraus(&exp_i_hermitian(h, t), env)
}

/// Kraus operators M_a = (I ⊗ e_a†) U (I ⊗ e_env) of ρ ↦ E₀[U(ρ⊗β)U†].
pub fn probe_kraus(u: &ComplexMatrix, env: EnvironmentState) -> Vec<ComplexMatrix> {
    let de = env.dim;
    let ds = u.rows() / de;
    (0..de)
        .map(|a| {
            let mut m = ComplexMatrix::zeros(ds, ds);
            for s in 0..ds {
                for r in 0..ds {
                    m[(s, r)] = u[(s * de + a, r * de + env.index)];
                }
            }
            m
        })
        .collect()
}

/// ε_t[ρ] by explicit exponential, tensor and partial trace.
pub fn eps_map(t: f64, rho: &ComplexMatrix, h: &ComplexMatrix, env: EnvironmentState) -> ComplexMatrix {
    let u = exp_i_hermitian(h, t);
    let joint = u.sandwich(&rho.kron(&env.beta()));
    partial_trace_env(&joint, rho.rows(), env.dim).expect("dimensions fixed by construction")
}

pub(crate) fn apply_kraus(kraus: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
    for k in kraus {
        out += &k.sandwich(rho);
    }
    out
}

/// SWAP on C²⊗C²; Hermitian, so usable as a Hamiltonian.
pub fn swap_operator() -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            s[(a * 2 + b, b * 2 + a)] = C64::new(1.0, 0.0);
        }
    }
    s
}

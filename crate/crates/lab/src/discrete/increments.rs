//! Exact one-step increments against their small-step expansion
//! Δρ = drift(ρ)/n + Σ_i diffusion_i(ρ) X⁽ⁱ⁾/√n + remainder.

use super::config::ModelKind;
use super::model::DiscreteModel;
use crate::continuous::{lindblad_with_jump, omega_eps, omega_trace_preserving, theta_apply, NoiseDrift};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Largest remainder over all outcomes (and over both unitaries of the
/// alternating kind) of the step from `rho`. For a diagonal observable,
/// only the no-jump outcome is checked, where √(pq)X = −q and
/// Δρ = L(ρ)/n − (JρJ†/Tr[JρJ†] − ρ) q + o(1/n).
pub fn increment_residual(model: &DiscreteModel, rho: &ComplexMatrix, noise_drift: NoiseDrift) -> Result<f64> {
    let cfg = &model.config;
    let nf = model.n as f64;
    let h0 = cfg.h0_matrix()?;
    let mut worst: f64 = 0.0;
    let steps: &[usize] = if model.kind == ModelKind::Alternating { &[0, 1] } else { &[0] };
    for &k in steps {
        let cands = model.candidates(rho, k);
        let weights: Vec<f64> = cands.iter().map(|c| c.trace().re).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let (drift, diffusions): (ComplexMatrix, Vec<ComplexMatrix>) = match model.kind {
            ModelKind::Single | ModelKind::MemoryReset | ModelKind::Alternating => {
                let c = match model.kind {
                    ModelKind::Alternating => {
                        let (cp, cm) = cfg.c_pm()?;
                        if model.unitary_index(k) == 0 {
                            cp
                        } else {
                            cm
                        }
                    }
                    _ => cfg.c_matrix()?,
                };
                let j = cfg.convention.jump(&c);
                let mut drift = lindblad_with_jump(rho, &h0, &j);
                if model.kind == ModelKind::MemoryReset {
                    drift.axpy_re(model.gamma_mem, &(model.initial.matrix() - rho));
                }
                let diff = match &model.constants {
                    Some(dc) => {
                        let gamma = dc.single().expect("two-outcome constants").gamma;
                        vec![theta_apply(rho, &j.scale(gamma))]
                    }
                    None => {
                        let gain = j.sandwich(rho);
                        let tr = gain.trace().re;
                        if tr <= 1e-300 {
                            Vec::new()
                        } else {
                            let mut d = gain.scale_re(1.0 / tr);
                            d -= rho;
                            vec![d]
                        }
                    }
                };
                (drift, diff)
            }
            ModelKind::Noise => {
                let kraus = cfg.kraus_matrices()?;
                let eps = cfg.eps_value()?;
                let nc = model.constants.as_ref().and_then(|c| c.noise()).expect("noise constants");
                let drift = match noise_drift {
                    NoiseDrift::TracePreserving => omega_trace_preserving(&kraus, eps, rho),
                    NoiseDrift::AsWritten => omega_eps(&kraus, eps, rho),
                };
                let diff = (0..3)
                    .map(|i| {
                        let mut out = ComplexMatrix::zeros(2, 2);
                        for (a, ka) in kraus.iter().enumerate() {
                            out += &theta_apply(rho, &ka.scale(nc.gamma_ai[i][a]));
                        }
                        out.scale_re(nc.beta[i] * eps.sqrt())
                    })
                    .collect();
                (drift, diff)
            }
            ModelKind::MemorySwap => {
                return Err(Error::Config("memory_swap has no stochastic increment".into()));
            }
        };
        let diagonal = model.constants.is_none();
        let outcomes: Vec<usize> = if diagonal { vec![0] } else { (0..cands.len()).collect() };
        for nu in outcomes {
            if weights[nu] <= 1e-300 {
                continue;
            }
            let mut next = cands[nu].scale_re(1.0 / weights[nu]);
            if model.kind == ModelKind::MemoryReset {
                next = next.scale_re(model.p_reset);
                next.axpy_re(1.0 - model.p_reset, model.initial.matrix());
            }
            let mut r = &next - rho;
            r.axpy_re(-1.0 / nf, &drift);
            if diagonal {
                for d in &diffusions {
                    r.axpy_re(probs[1], d);
                }
            } else {
                let x = model.outcome_variables(&probs, nu);
                for (d, xi) in diffusions.iter().zip(&x) {
                    r.axpy(C64::new(-xi / nf.sqrt(), 0.0), d);
                }
            }
            worst = worst.max(r.frobenius_norm());
        }
    }
    Ok(worst)
}

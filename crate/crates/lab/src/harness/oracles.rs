//! Limits each discrete kind is compared against, plus the real state
//! functionals used for weak comparisons.

use serde::{Deserialize, Serialize};

use crate::continuous::{build_sde_spec, NoiseDrift, OdeKind, SdeParams, SdeSpec};
use crate::discrete::{DiscreteModel, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::linalg::consts::{sigma_x, sigma_z};
use crate::linalg::{ComplexMatrix, EnvironmentState, C64};
use crate::rng::RngStream;

/// Step of every reference ODE solve.
pub const ODE_DT: f64 = 1e-3;
/// The deterministic memory chain is held to a tighter bound, so its
/// Volterra reference uses a finer step.
pub const VOLTERRA_DT: f64 = 5e-4;

/// The ODE the mean of `cfg` converges to.
pub fn mean_oracle(cfg: &ModelConfig) -> Result<OdeKind> {
    let convention = cfg.convention;
    Ok(match cfg.kind {
        ModelKind::Single => OdeKind::Master { h0: cfg.h0_matrix()?, c: cfg.c_matrix()?, convention },
        ModelKind::Alternating => {
            let (c_plus, c_minus) = cfg.c_pm()?;
            OdeKind::Averaged { h0: cfg.h0_matrix()?, c_plus, c_minus, convention }
        }
        ModelKind::Noise => OdeKind::ChannelTracePreserving { kraus: cfg.kraus_matrices()?, eps: cfg.eps_value()? },
        ModelKind::MemoryReset => OdeKind::MemoryMean {
            h0: cfg.h0_matrix()?,
            c: cfg.c_matrix()?,
            convention,
            gamma: cfg.gamma_mem_value()?,
        },
        ModelKind::MemorySwap => OdeKind::VolterraDet {
            h: cfg.hamiltonian_matrix()?,
            gamma: cfg.gamma_mem_value()?,
            env: EnvironmentState::ground(2),
        },
    })
}

/// A second reference that the mean should *not* track, where one exists:
/// the plain master equation for memory_reset and the as-written channel
/// equation for noise.
pub fn alternative_oracle(cfg: &ModelConfig) -> Result<Option<(&'static str, OdeKind)>> {
    Ok(match cfg.kind {
        ModelKind::MemoryReset => Some((
            "plain_master",
            OdeKind::Master { h0: cfg.h0_matrix()?, c: cfg.c_matrix()?, convention: cfg.convention },
        )),
        ModelKind::Noise => {
            Some(("channel_as_written", OdeKind::Channel { kraus: cfg.kraus_matrices()?, eps: cfg.eps_value()? }))
        }
        _ => None,
    })
}

/// The diffusive limit of a stochastic kind. For memory_reset the SDE state
/// is the lift X = e^{Γt}ρ; [`LimitSde::density`] maps it back.
pub struct LimitSde {
    pub spec: SdeSpec,
    pub lift_rate: Option<f64>,
}

impl LimitSde {
    pub fn density(&self, t: f64, x: &ComplexMatrix) -> ComplexMatrix {
        match self.lift_rate {
            Some(g) => x.scale_re((-g * t).exp()),
            None => x.clone(),
        }
    }
}

pub fn limit_sde(model: &DiscreteModel, noise_drift: NoiseDrift) -> Result<LimitSde> {
    let cfg = &model.config;
    let gamma = || -> Result<C64> {
        model.constants.as_ref().and_then(|c| c.single()).map(|s| s.gamma).ok_or_else(|| Error::Assumption {
            name: "non_diagonal_observable",
            detail: "the diffusive limit needs a non-diagonal observable".into(),
        })
    };
    let convention = cfg.convention;
    let (params, lift_rate) = match model.kind {
        ModelKind::Single => {
            (SdeParams::Belavkin { h0: cfg.h0_matrix()?, c: cfg.c_matrix()?, convention, gamma: gamma()? }, None)
        }
        ModelKind::Alternating => {
            let (c_plus, c_minus) = cfg.c_pm()?;
            (SdeParams::Alternating { h0: cfg.h0_matrix()?, c_plus, c_minus, convention, gamma: gamma()? }, None)
        }
        ModelKind::Noise => {
            let constants = model.constants.as_ref().and_then(|c| c.noise()).cloned().ok_or_else(|| {
                Error::Assumption { name: "four_outcome_probe", detail: "noise kind without noise constants".into() }
            })?;
            (SdeParams::Noise { kraus: cfg.kraus_matrices()?, eps: cfg.eps_value()?, constants, drift: noise_drift }, None)
        }
        ModelKind::MemoryReset => {
            let g = model.gamma_mem;
            (
                SdeParams::VolterraLift {
                    h0: cfg.h0_matrix()?,
                    c: cfg.c_matrix()?,
                    convention,
                    gamma: gamma()?,
                    gamma_mem: g,
                    rho0: model.initial.matrix().clone(),
                },
                Some(g),
            )
        }
        ModelKind::MemorySwap => return Err(Error::Config("memory_swap has no diffusive limit".into())),
    };
    Ok(LimitSde { spec: build_sde_spec(&params)?, lift_rate })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    SigmaX,
    SigmaZ,
    Purity,
}

impl Functional {
    pub const DEFAULTS: [Functional; 3] = [Functional::SigmaX, Functional::SigmaZ, Functional::Purity];

    pub fn name(self) -> &'static str {
        match self {
            Functional::SigmaX => "tr_sigma_x_rho",
            Functional::SigmaZ => "tr_sigma_z_rho",
            Functional::Purity => "purity",
        }
    }

    pub fn eval(self, rho: &ComplexMatrix) -> f64 {
        match self {
            Functional::SigmaX => sigma_x().matmul(rho).trace().re,
            Functional::SigmaZ => sigma_z().matmul(rho).trace().re,
            Functional::Purity => rho.matmul(rho).trace().re,
        }
    }
}

/// Real coordinates (ρ₀₀, ρ₁₁, Re ρ₀₁, Im ρ₀₁) of a 2×2 state; the
/// Frobenius distance is √(d₀₀² + d₁₁² + 2d_re² + 2d_im²).
pub fn coords(rho: &ComplexMatrix) -> [f64; 4] {
    [rho[(0, 0)].re, rho[(1, 1)].re, rho[(0, 1)].re, rho[(0, 1)].im]
}

pub fn coord_norm(d: [f64; 4]) -> f64 {
    (d[0] * d[0] + d[1] * d[1] + 2.0 * d[2] * d[2] + 2.0 * d[3] * d[3]).sqrt()
}

/// Gaussian matrix with entries scaled by `scale`.
pub fn gaussian_matrix(rng: &mut RngStream, n: usize, scale: f64) -> ComplexMatrix {
    let data = (0..n * n).map(|_| C64::new(rng.normal(), rng.normal()) * scale).collect();
    ComplexMatrix::from_vec(n, n, data).expect("square by construction")
}

/// Full-rank random density matrix GG†/Tr.
pub fn random_state(rng: &mut RngStream, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, 1.0);
    let m = g.matmul(&g.adjoint());
    let mut m = m.scale_re(1.0 / m.trace().re);
    m.symmetrize();
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::solve_ode;
    use crate::discrete::build_model;
    use crate::linalg::validate_density;

    #[test]
    fn every_kind_has_a_mean_oracle() {
        for kind in ModelKind::ALL {
            let cfg = ModelConfig::new(kind, 100);
            let oracle = mean_oracle(&cfg).unwrap();
            let path = solve_ode(&oracle, &ComplexMatrix::identity(2).scale_re(0.5), 1e-2, 1.0).unwrap();
            // The Volterra trapezoid keeps the trace only to O(dt²).
            let tol = if kind == ModelKind::MemorySwap { 1e-4 } else { 1e-10 };
            assert!((path.states.last().unwrap().trace().re - 1.0).abs() < tol, "{kind:?}");
        }
    }

    #[test]
    fn lift_density_undoes_growth() {
        let model = build_model(&ModelConfig::new(ModelKind::MemoryReset, 100)).unwrap();
        let sde = limit_sde(&model, NoiseDrift::TracePreserving).unwrap();
        let x = ComplexMatrix::identity(2).scale_re(0.5 * 1f64.exp());
        assert!((sde.density(1.0, &x).trace().re - 1.0).abs() < 1e-15);
        assert!(limit_sde(&build_model(&ModelConfig::new(ModelKind::MemorySwap, 10)).unwrap(), NoiseDrift::AsWritten).is_err());
    }

    #[test]
    fn functionals_on_plus_state() {
        let plus = ComplexMatrix::from_real_rows(&[[0.5, 0.5], [0.5, 0.5]]);
        assert!((Functional::SigmaX.eval(&plus) - 1.0).abs() < 1e-15);
        assert!(Functional::SigmaZ.eval(&plus).abs() < 1e-15);
        assert!((Functional::Purity.eval(&plus) - 1.0).abs() < 1e-15);
        let d = coords(&plus);
        assert!((coord_norm(d) - plus.frobenius_norm()).abs() < 1e-15);
    }

    #[test]
    fn random_states_are_valid() {
        let mut r = RngStream::new(1, 0);
        for _ in 0..20 {
            let s = random_state(&mut r, 2);
            assert!(validate_density(&s, &Default::default()).passed());
        }
    }
}

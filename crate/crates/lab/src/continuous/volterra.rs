//! Direct left-point discretization of a stochastic Volterra equation
//!
//!   X_t = x₀(t) + ∫₀ᵗ K_b(t − s) b(X_s) ds + ∫₀ᵗ K_σ(t − s) σ(X_s) dW_s.
//!
//! Cost is quadratic in the number of steps; the exponential kernel also
//! has the linear-cost lift in [`super::sde`], used to cross-check this one.

use std::sync::Arc;

use serde::Serialize;

use super::ode::grid_steps;
use super::sde::{EmOptions, NoisePath, SdePath};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::rng::RngStream;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// e^{−Γu}.
    Exponential { gamma: f64 },
    Constant { value: f64 },
    /// Values on a uniform grid over [0, 1], linearly interpolated.
    Tabulated { values: Vec<f64> },
}

impl Kernel {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Kernel::Exponential { gamma } => (-gamma * u).exp(),
            Kernel::Constant { value } => *value,
            Kernel::Tabulated { values } => {
                let n = values.len() - 1;
                let x = (u.clamp(0.0, 1.0)) * n as f64;
                let i = (x.floor() as usize).min(n.saturating_sub(1));
                let f = x - i as f64;
                values[i] * (1.0 - f) + values[(i + 1).min(n)] * f
            }
        }
    }

    /// Trapezoid estimate of ∫₀¹ K²; finite for every accepted kernel.
    pub fn l2_norm_sq(&self) -> f64 {
        let m = 4096;
        let h = 1.0 / m as f64;
        (0..=m)
            .map(|i| {
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                w * self.eval(i as f64 * h).powi(2) * h
            })
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if let Kernel::Tabulated { values } = self {
            if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("tabulated kernel needs at least two finite values".into()));
            }
        }
        let n2 = self.l2_norm_sq();
        if !n2.is_finite() {
            return Err(Error::Config("kernel is not square integrable on [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolterraKernelPair {
    pub drift: Kernel,
    pub diffusion: Kernel,
}

impl VolterraKernelPair {
    pub fn exponential(gamma: f64) -> Self {
        Self { drift: Kernel::Exponential { gamma }, diffusion: Kernel::Exponential { gamma } }
    }
}

pub type PlainMap = Arc<dyn Fn(&ComplexMatrix) -> ComplexMatrix + Send + Sync>;

/// Left-point convolution scheme with independent unit-covariance channels.
/// `x0` gives the forcing x₀(t); a constant ρ₀ is `|_| rho0.clone()`.
#[allow(clippy::too_many_arguments)]
pub fn volterra_direct(
    x0: &dyn Fn(f64) -> ComplexMatrix,
    kernels: &VolterraKernelPair,
    drift: &PlainMap,
    diffusions: &[PlainMap],
    dt: f64,
    t_final: f64,
    seed: u64,
    stream_index: u64,
    noise: Option<&NoisePath>,
) -> Result<SdePath> {
    kernels.drift.validate()?;
    kernels.diffusion.validate()?;
    let steps = grid_steps(dt, t_final)?;
    let m = diffusions.len();
    let owned;
    let path = match noise {
        Some(p) => {
            if p.m != m || p.steps != steps {
                return Err(Error::Dimension("noise path shape does not match".into()));
            }
            p
        }
        None => {
            let mut r = RngStream::new(seed, stream_index);
            owned = NoisePath::sample(m, steps, dt, &mut r);
            &owned
        }
    };
    let kb: Vec<f64> = (0..=steps).map(|j| kernels.drift.eval(j as f64 * dt)).collect();
    let ks: Vec<f64> = (0..=steps).map(|j| kernels.diffusion.eval(j as f64 * dt)).collect();

    let mut states: Vec<ComplexMatrix> = vec![x0(0.0)];
    // Per-step contributions b(X_j) dt and Σ_i σ_i(X_j) ΔW_j.
    let mut bterms: Vec<ComplexMatrix> = Vec::with_capacity(steps);
    let mut sterms: Vec<ComplexMatrix> = Vec::with_capacity(steps);
    for k in 1..=steps {
        let prev = &states[k - 1];
        bterms.push(drift(prev).scale_re(dt));
        let mut s = ComplexMatrix::zeros(prev.rows(), prev.cols());
        for (i, d) in diffusions.iter().enumerate() {
            s.axpy_re(path.step(k - 1)[i], &d(prev));
        }
        sterms.push(s);
        let mut x = x0(k as f64 * dt);
        for j in 0..k {
            x.axpy_re(kb[k - j], &bterms[j]);
            x.axpy_re(ks[k - j], &sterms[j]);
        }
        x.symmetrize();
        let norm = x.frobenius_norm();
        if !(norm <= 1e6) {
            return Err(Error::Divergence { step: k, norm });
        }
        states.push(x);
    }
    Ok(SdePath {
        scheme: "volterra_direct".into(),
        times: (0..=steps).map(|k| k as f64 * dt).collect(),
        states,
        noise: Some(path.clone()),
        seed,
        stream_index,
        options: EmOptions::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::Convention;
    use crate::continuous::{lindblad_with_jump, theta_apply};
    use crate::continuous::{solve_ode, OdeKind};
    use crate::continuous::{build_sde_spec, em_integrate, SdeParams, SdeSpec, StateMap};
    use crate::linalg::consts::*;
    use crate::linalg::testutil::*;
    use crate::linalg::C64;

    fn maps() -> (PlainMap, PlainMap) {
        let (h, c) = (sigma_z(), lowering());
        let c2 = c.clone();
        let drift: PlainMap = Arc::new(move |r| lindblad_with_jump(r, &h, &c));
        let diff: PlainMap = Arc::new(move |r| theta_apply(r, &c2));
        (drift, diff)
    }

    #[test]
    fn constant_kernel_is_plain_euler() {
        let rho = random_density(&mut rng(1), 2);
        let (drift, diff) = maps();
        let kernels = VolterraKernelPair { drift: Kernel::Constant { value: 1.0 }, diffusion: Kernel::Constant { value: 1.0 } };
        let r0 = rho.matrix().clone();
        let direct = volterra_direct(&move |_| r0.clone(), &kernels, &drift, &[diff.clone()], 1e-3, 0.5, 3, 0, None).unwrap();
        let (d2, s2) = (drift.clone(), diff.clone());
        let spec = SdeSpec::new(
            2,
            "plain",
            Arc::new(move |_: f64, r: &ComplexMatrix| d2(r)) as StateMap,
            vec![Arc::new(move |_: f64, r: &ComplexMatrix| s2(r)) as StateMap],
            vec![vec![1.0]],
        )
        .unwrap();
        let em = em_integrate(&spec, rho.matrix(), 1e-3, 0.5, 0, 0, direct.noise.as_ref(), &EmOptions::default()).unwrap();
        for (a, b) in direct.states.iter().zip(&em.states) {
            assert!(a.approx_eq(b, 1e-12));
        }
    }

    #[test]
    fn exponential_kernel_matches_lift() {
        let rho = random_density(&mut rng(2), 2);
        let gamma_mem = 1.3;
        let (drift, diff) = maps();
        let r0 = rho.matrix().clone();
        let direct = volterra_direct(
            &move |_| r0.clone(),
            &VolterraKernelPair::exponential(gamma_mem),
            &drift,
            &[diff],
            1e-3,
            1.0,
            4,
            0,
            None,
        )
        .unwrap();
        let spec = build_sde_spec(&SdeParams::VolterraLift {
            h0: sigma_z(),
            c: lowering(),
            convention: Convention::Standard,
            gamma: C64::new(1.0, 0.0),
            gamma_mem,
            rho0: rho.matrix().clone(),
        })
        .unwrap();
        let lift = em_integrate(&spec, rho.matrix(), 1e-3, 1.0, 0, 0, direct.noise.as_ref(), &EmOptions::default()).unwrap();
        for ((t, x), r) in lift.times.iter().zip(&lift.states).zip(&direct.states) {
            assert!(x.scale_re((-gamma_mem * t).exp()).approx_eq(r, 1e-10));
            assert!((r.trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_reduction_matches_mean_ode() {
        let rho = random_density(&mut rng(3), 2);
        let (drift, _) = maps();
        let r0 = rho.matrix().clone();
        let gamma_mem = 1.0;
        let dt = 1e-3;
        let direct =
            volterra_direct(&move |_| r0.clone(), &VolterraKernelPair::exponential(gamma_mem), &drift, &[], dt, 1.0, 0, 0, None)
                .unwrap();
        let ode = solve_ode(
            &OdeKind::MemoryMean { h0: sigma_z(), c: lowering(), convention: Convention::Standard, gamma: gamma_mem },
            rho.matrix(),
            dt,
            1.0,
        )
        .unwrap();
        let err = direct.states.last().unwrap().dist(ode.at(1.0));
        assert!(err < 5.0 * dt, "err {err}");
    }

    #[test]
    fn tabulated_kernel_interpolates() {
        let k = Kernel::Tabulated { values: vec![1.0, 0.0, 1.0] };
        assert!((k.eval(0.25) - 0.5).abs() < 1e-15);
        assert!((k.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((k.l2_norm_sq() - 1.0 / 3.0).abs() < 1e-5);
        assert!(Kernel::Tabulated { values: vec![f64::INFINITY, 1.0] }.validate().is_err());
    }
}

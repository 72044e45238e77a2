//! Diffusive limits and a generic Euler–Maruyama integrator.
//!
//! An [`SdeSpec`] describes dρ = a·b(t, ρ) dt + s·Σ_i σ_i(t, ρ) (B̃ dW)_i
//! (+ dF(t) for a state-independent forcing integrated exactly), with
//! W a standard m-dimensional Brownian motion and B̃² = B.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::generators::{lindblad_cached, omega_eps, theta_apply};
use super::ode::grid_steps;
use crate::asymptotics::{Convention, NoiseConstants};
use crate::error::{Error, Result};
use crate::linalg::{psd_repair, psd_sqrt, ComplexMatrix, C64};
use crate::rng::RngStream;

pub type StateMap = Arc<dyn Fn(f64, &ComplexMatrix) -> ComplexMatrix + Send + Sync>;
pub type Forcing = Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;

#[derive(Clone)]
pub struct SdeSpec {
    pub dim: usize,
    pub label: String,
    pub drift: StateMap,
    pub diffusions: Vec<StateMap>,
    pub covariance: Vec<Vec<f64>>,
    pub covariance_sqrt: Vec<Vec<f64>>,
    pub drift_scale: f64,
    pub diffusion_scale: f64,
    pub time_dependent: bool,
    /// F(t) with dF added each step as F(t + dt) − F(t).
    pub forcing: Option<Forcing>,
    /// Abort when ‖ρ‖_F exceeds this.
    pub norm_guard: f64,
}

impl fmt::Debug for SdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeSpec")
            .field("label", &self.label)
            .field("m", &self.diffusions.len())
            .field("covariance", &self.covariance)
            .field("drift_scale", &self.drift_scale)
            .field("diffusion_scale", &self.diffusion_scale)
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

impl SdeSpec {
    pub fn noise_dim(&self) -> usize {
        self.diffusions.len()
    }

    /// Build from parts; checks the covariance and computes its root.
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        drift: StateMap,
        diffusions: Vec<StateMap>,
        covariance: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = diffusions.len();
        if covariance.len() != m || covariance.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!("covariance must be {m}x{m}")));
        }
        let b = ComplexMatrix::from_real_rows(&covariance);
        let root = psd_sqrt(&b).map_err(|e| match e {
            Error::NotPsd(l) => Error::Covariance(l),
            other => other,
        })?;
        let covariance_sqrt = (0..m).map(|i| (0..m).map(|j| root[(i, j)].re).collect()).collect();
        Ok(Self {
            dim,
            label: label.into(),
            drift,
            diffusions,
            covariance,
            covariance_sqrt,
            drift_scale: 1.0,
            diffusion_scale: 1.0,
            time_dependent: false,
            forcing: None,
            norm_guard: 1e6,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDrift {
    /// Ω^ε as stated for the correlated-noise limit.
    #[default]
    AsWritten,
    /// ε(Σ KρK† − ½{G, ρ}), the drift of the unitarized discrete model.
    TracePreserving,
}

#[derive(Clone, Debug)]
pub enum SdeParams {
    /// Drift L, one channel with diffusion Θ_{γJ}.
    Belavkin { h0: ComplexMatrix, c: ComplexMatrix, convention: Convention, gamma: C64 },
    /// Drift (L⁺ + L⁻)/2, channels Θ_{γJ±}/√2, B = I₂.
    Alternating { h0: ComplexMatrix, c_plus: ComplexMatrix, c_minus: ComplexMatrix, convention: Convention, gamma: C64 },
    /// Drift Ω^ε (or its trace-preserving form), channels √ε Ξ_i with
    /// Ξ_i = β_i Σ_a Θ_{γ_a^{(i)} K_a}, covariance B.
    Noise { kraus: [ComplexMatrix; 3], eps: f64, constants: NoiseConstants, drift: NoiseDrift },
    /// Lift X = e^{Γt}ρ of the memory equation:
    /// dX = L(X) dt + d(e^{Γt}ρ₀) + e^{Γt} Θ_{γJ}(e^{−Γt} X) dW.
    VolterraLift { h0: ComplexMatrix, c: ComplexMatrix, convention: Convention, gamma: C64, gamma_mem: f64, rho0: ComplexMatrix },
}

pub fn build_sde_spec(params: &SdeParams) -> Result<SdeSpec> {
    match params.clone() {
        SdeParams::Belavkin { h0, c, convention, gamma } => {
            let j = convention.jump(&c);
            let jg = j.scale(gamma);
            let jdj = j.adjoint().matmul(&j);
            let drift: StateMap = Arc::new(move |_, r| lindblad_cached(r, &h0, &j, &jdj));
            let diff: StateMap = Arc::new(move |_, r| theta_apply(r, &jg));
            SdeSpec::new(2, "belavkin", drift, vec![diff], vec![vec![1.0]])
        }
        SdeParams::Alternating { h0, c_plus, c_minus, convention, gamma } => {
            let (jp, jm) = (convention.jump(&c_plus), convention.jump(&c_minus));
            let (gp, gm) = (jp.scale(gamma), jm.scale(gamma));
            let (pdp, mdm) = (jp.adjoint().matmul(&jp), jm.adjoint().matmul(&jm));
            let drift: StateMap = Arc::new(move |_, r| {
                (lindblad_cached(r, &h0, &jp, &pdp) + lindblad_cached(r, &h0, &jm, &mdm)).scale_re(0.5)
            });
            let d1: StateMap = Arc::new(move |_, r| theta_apply(r, &gp));
            let d2: StateMap = Arc::new(move |_, r| theta_apply(r, &gm));
            let mut spec = SdeSpec::new(2, "alternating", drift, vec![d1, d2], vec![vec![1.0, 0.0], vec![0.0, 1.0]])?;
            spec.diffusion_scale = std::f64::consts::FRAC_1_SQRT_2;
            Ok(spec)
        }
        SdeParams::Noise { kraus, eps, constants, drift } => {
            let k2 = kraus.clone();
            let drift_map: StateMap = match drift {
                NoiseDrift::AsWritten => Arc::new(move |_, r| omega_eps(&k2, eps, r)),
                NoiseDrift::TracePreserving => {
                    let mut g = ComplexMatrix::zeros(2, 2);
                    for k in &k2 {
                        g += &k.adjoint().matmul(k);
                    }
                    Arc::new(move |_, r| {
                        let mut out = g.anticommutator(r).scale_re(-0.5);
                        for k in &k2 {
                            out += &k.sandwich(r);
                        }
                        out.scale_re(eps)
                    })
                }
            };
            let mut diffusions: Vec<StateMap> = Vec::new();
            for i in 0..3 {
                // Θ is linear in its operator, so Σ_a Θ_{γ_a K_a} = Θ_{Σ_a γ_a K_a}.
                let mut op = ComplexMatrix::zeros(2, 2);
                for a in 0..3 {
                    op.axpy(constants.gamma_ai[i][a], &kraus[a]);
                }
                let op = op.scale_re(constants.beta[i]);
                diffusions.push(Arc::new(move |_, r| theta_apply(r, &op)));
            }
            let cov: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| constants.b_matrix[(i, j)].re).collect()).collect();
            let label = match drift {
                NoiseDrift::AsWritten => "noise",
                NoiseDrift::TracePreserving => "noise_trace_preserving",
            };
            let mut spec = SdeSpec::new(2, label, drift_map, diffusions, cov)?;
            spec.diffusion_scale = eps.sqrt();
            spec.norm_guard = 10.0;
            Ok(spec)
        }
        SdeParams::VolterraLift { h0, c, convention, gamma, gamma_mem, rho0 } => {
            let j = convention.jump(&c);
            let jg = j.scale(gamma);
            let jdj = j.adjoint().matmul(&j);
            let drift: StateMap = Arc::new(move |_, x| lindblad_cached(x, &h0, &j, &jdj));
            let diff: StateMap = Arc::new(move |t, x| {
                let g = (gamma_mem * t).exp();
                theta_apply(&x.scale_re(1.0 / g), &jg).scale_re(g)
            });
            let mut spec = SdeSpec::new(2, "volterra_lift", drift, vec![diff], vec![vec![1.0]])?;
            spec.time_dependent = true;
            spec.forcing = Some(Arc::new(move |t| rho0.scale_re((gamma_mem * t).exp())));
            Ok(spec)
        }
    }
}

/// Standard Brownian increments, `m` per step, row-major by step.
#[derive(Clone, Debug, Serialize)]
pub struct NoisePath {
    pub m: usize,
    pub steps: usize,
    pub dt: f64,
    pub data: Vec<f64>,
}

impl NoisePath {
    pub fn sample(m: usize, steps: usize, dt: f64, rng: &mut RngStream) -> Self {
        let s = dt.sqrt();
        let data = (0..m * steps).map(|_| s * rng.normal()).collect();
        Self { m, steps, dt, data }
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    /// Pairwise sums: the same Brownian path on a grid twice as coarse.
    pub fn coarsen(&self) -> Self {
        assert!(self.steps % 2 == 0, "coarsening needs an even step count");
        let steps = self.steps / 2;
        let mut data = Vec::with_capacity(self.m * steps);
        for k in 0..steps {
            for i in 0..self.m {
                data.push(self.data[2 * k * self.m + i] + self.data[(2 * k + 1) * self.m + i]);
            }
        }
        Self { m: self.m, steps, dt: 2.0 * self.dt, data }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct EmOptions {
    pub renormalize_trace: bool,
    pub psd_repair: bool,
    /// Keep every k-th state (0 or 1 keeps all).
    pub record_every: usize,
    pub record_noise: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdePath {
    pub scheme: String,
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    pub noise: Option<NoisePath>,
    pub seed: u64,
    pub stream_index: u64,
    pub options: EmOptions,
}

/// Where the increments come from: fresh draws or a recorded path.
pub enum Increments<'a> {
    Rng(&'a mut RngStream),
    Path(&'a NoisePath),
}

/// Core Euler–Maruyama loop; `observe(k, t, state)` sees every grid state,
/// k = 0..=steps.
pub fn em_run<F: FnMut(usize, f64, &ComplexMatrix)>(
    spec: &SdeSpec,
    rho0: &ComplexMatrix,
    dt: f64,
    steps: usize,
    mut increments: Increments<'_>,
    options: &EmOptions,
    mut observe: F,
) -> Result<()> {
    let m = spec.noise_dim();
    if let Increments::Path(p) = &increments {
        if p.m != m || p.steps != steps {
            return Err(Error::Dimension(format!(
                "noise path is {}x{}, integrator needs {}x{}",
                p.m, p.steps, m, steps
            )));
        }
    }
    let sqdt = dt.sqrt();
    let mut dw = vec![0.0; m];
    let mut corr = vec![0.0; m];
    let mut state = rho0.clone();
    observe(0, 0.0, &state);
    for k in 0..steps {
        let t = k as f64 * dt;
        match &mut increments {
            Increments::Rng(r) => dw.iter_mut().for_each(|w| *w = sqdt * r.normal()),
            Increments::Path(p) => dw.copy_from_slice(p.step(k)),
        }
        for i in 0..m {
            corr[i] = (0..m).map(|j| spec.covariance_sqrt[i][j] * dw[j]).sum();
        }
        let mut next = state.clone();
        next.axpy_re(spec.drift_scale * dt, &(spec.drift)(t, &state));
        for (i, d) in spec.diffusions.iter().enumerate() {
            if corr[i] != 0.0 {
                next.axpy_re(spec.diffusion_scale * corr[i], &d(t, &state));
            }
        }
        if let Some(f) = &spec.forcing {
            next += &(f(t + dt) - f(t));
        }
        next.symmetrize();
        if options.renormalize_trace {
            let tr = next.trace().re;
            next = next.scale_re(1.0 / tr);
        }
        if options.psd_repair {
            next = psd_repair(&next)?.into_matrix();
        }
        let norm = next.frobenius_norm();
        if !(norm <= spec.norm_guard) {
            return Err(Error::Divergence { step: k + 1, norm });
        }
        state = next;
        observe(k + 1, (k + 1) as f64 * dt, &state);
    }
    Ok(())
}

/// Euler–Maruyama path on [0, T]. With `noise` given, its increments are
/// used verbatim; otherwise they are drawn from (seed, stream_index).
pub fn em_integrate(
    spec: &SdeSpec,
    rho0: &ComplexMatrix,
    dt: f64,
    t_final: f64,
    seed: u64,
    stream_index: u64,
    noise: Option<&NoisePath>,
    options: &EmOptions,
) -> Result<SdePath> {
    if dt > 1e-2 {
        return Err(Error::Config(format!("SDE step must be at most 1e-2, got {dt}")));
    }
    let steps = grid_steps(dt, t_final)?;
    let owned;
    let path = match noise {
        Some(p) => p,
        None => {
            let mut r = RngStream::new(seed, stream_index);
            owned = NoisePath::sample(spec.noise_dim(), steps, dt, &mut r);
            &owned
        }
    };
    let every = options.record_every.max(1);
    let mut times = Vec::new();
    let mut states = Vec::new();
    em_run(spec, rho0, dt, steps, Increments::Path(path), options, |k, t, s| {
        if k % every == 0 || k == steps {
            times.push(t);
            states.push(s.clone());
        }
    })?;
    Ok(SdePath {
        scheme: format!("euler_maruyama:{}", spec.label),
        times,
        states,
        noise: if options.record_noise { Some(path.clone()) } else { None },
        seed,
        stream_index,
        options: *options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{derive_constants, ConstantsModel};
    use crate::linalg::consts::*;
    use crate::linalg::testutil::*;
    use crate::linalg::Observable;

    fn belavkin() -> SdeSpec {
        build_sde_spec(&SdeParams::Belavkin {
            h0: sigma_z(),
            c: lowering(),
            convention: Convention::Standard,
            gamma: C64::new(1.0, 0.0),
        })
        .unwrap()
    }

    #[test]
    fn zero_maps_give_constant_path() {
        let zero: StateMap = Arc::new(|_, r| ComplexMatrix::zeros(r.rows(), r.cols()));
        let spec = SdeSpec::new(2, "zero", zero.clone(), vec![zero], vec![vec![1.0]]).unwrap();
        let rho = random_density(&mut rng(1), 2);
        let p = em_integrate(&spec, rho.matrix(), 1e-3, 1.0, 1, 0, None, &EmOptions::default()).unwrap();
        assert!(p.states.iter().all(|s| s.approx_eq(rho.matrix(), 1e-15)));
    }

    #[test]
    fn belavkin_preserves_trace() {
        let rho = random_density(&mut rng(2), 2);
        let p = em_integrate(&belavkin(), rho.matrix(), 1e-4, 1.0, 5, 0, None, &EmOptions::default()).unwrap();
        assert_eq!(p.states.len(), 10_001);
        for s in &p.states {
            assert!((s.trace().re - 1.0).abs() <= 1e-10);
            assert!(s.hermiticity_error() <= 1e-10);
        }
    }

    #[test]
    fn strong_order_half() {
        let spec = belavkin();
        let rho = random_density(&mut rng(3), 2);
        let fine_steps = 2048;
        let (mut e1, mut e2) = (0.0, 0.0);
        for path_id in 0..200 {
            let mut r = RngStream::new(11, path_id);
            let finest = NoisePath::sample(1, fine_steps, 1.0 / fine_steps as f64, &mut r);
            let mid = finest.coarsen().coarsen();
            let coarse = mid.coarsen();
            let run = |p: &NoisePath| {
                em_integrate(&spec, rho.matrix(), p.dt, 1.0, 0, 0, Some(p), &EmOptions::default())
                    .unwrap()
                    .states
                    .last()
                    .unwrap()
                    .clone()
            };
            let (a, b, c) = (run(&coarse), run(&mid), run(&finest));
            e1 += a.dist(&c).powi(2);
            e2 += b.dist(&c).powi(2);
        }
        // dt ratio 2 between coarse and mid, both against the finest path.
        let order = 0.5 * (e1 / e2).log2();
        assert!(order >= 0.45, "order {order}");
    }

    #[test]
    fn noise_spec_scales_and_covariance() {
        let c = derive_constants(&Observable::dft4(), ConstantsModel::Noise).unwrap();
        let spec = build_sde_spec(&SdeParams::Noise {
            kraus: [sigma_x(), sigma_y(), sigma_z()],
            eps: 0.25,
            constants: c.noise().unwrap().clone(),
            drift: NoiseDrift::AsWritten,
        })
        .unwrap();
        assert_eq!(spec.noise_dim(), 3);
        assert!((spec.diffusion_scale - 0.5).abs() < 1e-15);
        assert!((spec.covariance[0][1] + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn noise_spec_at_zero_eps_is_exponential() {
        let c = derive_constants(&Observable::dft4(), ConstantsModel::Noise).unwrap();
        let spec = build_sde_spec(&SdeParams::Noise {
            kraus: [sigma_x(), sigma_y(), sigma_z()],
            eps: 0.0,
            constants: c.noise().unwrap().clone(),
            drift: NoiseDrift::AsWritten,
        })
        .unwrap();
        let rho = random_density(&mut rng(4), 2);
        let dt = 1e-3;
        let p = em_integrate(&spec, rho.matrix(), dt, 1.0, 1, 0, None, &EmOptions::default()).unwrap();
        let last = p.states.last().unwrap();
        let want = rho.matrix().scale_re(1f64.exp());
        assert!(last.dist(&want) <= 2.0 * dt * want.frobenius_norm());
    }

    #[test]
    fn alternating_spec_scale() {
        let spec = build_sde_spec(&SdeParams::Alternating {
            h0: sigma_z(),
            c_plus: lowering(),
            c_minus: lowering().adjoint(),
            convention: Convention::Standard,
            gamma: C64::new(-1.0, 0.0),
        })
        .unwrap();
        assert!((spec.diffusion_scale - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(spec.covariance, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn noise_path_shape_checked() {
        let p = NoisePath { m: 2, steps: 10, dt: 0.1, data: vec![0.0; 20] };
        let rho = random_density(&mut rng(5), 2);
        assert!(em_integrate(&belavkin(), rho.matrix(), 0.01, 0.1, 0, 0, Some(&p), &EmOptions::default()).is_err());
    }
}

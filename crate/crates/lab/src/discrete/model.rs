//! Built models, the one-step update and trajectory simulation.

use serde::Serialize;
use smallvec::SmallVec;

use super::config::{ModelConfig, ModelKind};
use super::memory::evolve_memory_swap;
use crate::asymptotics::{
    build_dilation_unitary, build_noise_unitary, derive_constants, BlockUnitary, ConstantsModel, DerivedConstants,
};
use crate::continuous::probe_kraus;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityOperator, EnvironmentState, Observable};
use crate::rng::RngStream;

/// Probabilities at or below this are treated as exact zeros.
pub const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct DiscreteModel {
    pub config: ModelConfig,
    pub kind: ModelKind,
    pub n: usize,
    /// `[U]`, or `[U⁺, U⁻]` for the alternating kind; empty for `memory_swap`.
    pub blocks: Vec<BlockUnitary>,
    pub observable: Option<Observable>,
    pub env: EnvironmentState,
    /// `None` for `memory_swap` and for a diagonal observable run under
    /// `allow_diagonal`.
    pub constants: Option<DerivedConstants>,
    pub gamma_mem: f64,
    /// e^{−Γ/n} for the memory kinds, 1 otherwise.
    pub p_reset: f64,
    pub hamiltonian: Option<ComplexMatrix>,
    pub initial: DensityOperator,
    pub digest: String,
    /// kraus[u][j] lists the operators M_{jr} = Σ_a conj(v_r[a]) U_{a0} of
    /// outcome j under unitary u, v_r an orthonormal basis of eigenspace j.
    kraus: Vec<Vec<Vec<ComplexMatrix>>>,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub next_state: DensityOperator,
    pub outcome: usize,
    pub probs: SmallVec<[f64; 4]>,
    /// Normalized outcome variables; zeros on a degenerate step.
    pub x: SmallVec<[f64; 3]>,
}

pub fn build_model(config: &ModelConfig) -> Result<DiscreteModel> {
    let n = config.n;
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let initial = config.rho0.resolve()?;
    if initial.dim() != 2 {
        return Err(Error::Dimension("initial state must be 2x2".into()));
    }
    let kind = config.kind;
    let gamma_mem = match kind {
        ModelKind::MemoryReset | ModelKind::MemorySwap => config.gamma_mem_value()?,
        _ => 0.0,
    };
    let p_reset = (-gamma_mem / n as f64).exp();
    let mut model = DiscreteModel {
        config: config.clone(),
        kind,
        n,
        blocks: Vec::new(),
        observable: None,
        env: EnvironmentState::ground(2),
        constants: None,
        gamma_mem,
        p_reset,
        hamiltonian: None,
        initial,
        digest: config.digest(),
        kraus: Vec::new(),
    };
    if kind == ModelKind::MemorySwap {
        model.hamiltonian = Some(config.hamiltonian_matrix()?);
        return Ok(model);
    }

    let observable = config.observable_value()?;
    let h0 = config.h0_matrix()?;
    match kind {
        ModelKind::Single | ModelKind::MemoryReset => {
            model.constants = single_constants(&observable, config.allow_diagonal && kind == ModelKind::Single)?;
            model.blocks.push(build_dilation_unitary(&h0, &config.c_matrix()?, n, config.convention)?);
        }
        ModelKind::Alternating => {
            model.constants = Some(derive_constants(&observable, ConstantsModel::Single)?);
            let (cp, cm) = config.c_pm()?;
            model.blocks.push(build_dilation_unitary(&h0, &cp, n, config.convention)?);
            model.blocks.push(build_dilation_unitary(&h0, &cm, n, config.convention)?);
        }
        ModelKind::Noise => {
            model.constants = Some(derive_constants(&observable, ConstantsModel::Noise)?);
            model.env = EnvironmentState::ground(4);
            model.blocks.push(build_noise_unitary(&config.kraus_matrices()?, config.eps_value()?, n)?);
        }
        ModelKind::MemorySwap => unreachable!(),
    }
    if observable.dim() != model.env.dim {
        return Err(Error::Dimension(format!(
            "observable acts on C^{}, probe is C^{}",
            observable.dim(),
            model.env.dim
        )));
    }
    model.kraus = model.blocks.iter().map(|u| outcome_kraus(u, &observable, model.env)).collect();
    model.observable = Some(observable);
    Ok(model)
}

fn single_constants(observable: &Observable, allow_diagonal: bool) -> Result<Option<DerivedConstants>> {
    match derive_constants(observable, ConstantsModel::Single) {
        Ok(c) => Ok(Some(c)),
        Err(Error::Assumption { name: "non_diagonal_observable", .. }) if allow_diagonal => Ok(None),
        Err(e) => Err(e),
    }
}

fn outcome_kraus(u: &BlockUnitary, observable: &Observable, env: EnvironmentState) -> Vec<Vec<ComplexMatrix>> {
    // Column blocks U_{a0} in probe index a.
    let cols = probe_kraus(&u.matrix, env);
    observable
        .outcomes()
        .iter()
        .map(|space| {
            space
                .basis
                .iter()
                .map(|v| {
                    let mut m = ComplexMatrix::zeros(u.sys_dim, u.sys_dim);
                    for (a, ua) in cols.iter().enumerate() {
                        m.axpy(v[a].conj(), ua);
                    }
                    m
                })
                .collect()
        })
        .collect()
}

impl DiscreteModel {
    /// Index into `blocks` of the unitary acting on step k → k + 1.
    /// Alternating: U⁻ when k + 1 is odd, U⁺ when it is even.
    pub fn unitary_index(&self, k: usize) -> usize {
        match self.kind {
            ModelKind::Alternating if k % 2 == 0 => 1,
            _ => 0,
        }
    }

    pub fn outcome_count(&self) -> usize {
        self.observable.as_ref().map_or(0, |o| o.outcomes().len())
    }

    /// Unnormalized post-measurement states ρ^j of step k.
    pub fn candidates(&self, state: &ComplexMatrix, k: usize) -> Vec<ComplexMatrix> {
        self.kraus[self.unitary_index(k)]
            .iter()
            .map(|ops| {
                let mut out = ComplexMatrix::zeros(2, 2);
                for m in ops {
                    out += &m.sandwich(state);
                }
                out
            })
            .collect()
    }

    /// Normalized outcome variables when outcome `nu` occurs under `probs`.
    /// Two outcomes: X = (1{ν = 1} − q)/√(pq). Four outcomes: one entry per
    /// i = 1..3, X⁽ⁱ⁾ = (1{ν = i} − qᵢ)/√(qᵢ(1 − qᵢ)).
    pub fn outcome_variables(&self, probs: &[f64], nu: usize) -> SmallVec<[f64; 3]> {
        let ind = |i: usize| if nu == i { 1.0 } else { 0.0 };
        if probs.len() == 2 {
            let (p, q) = (probs[0], probs[1]);
            smallvec::smallvec![(ind(1) - q) / (p * q).sqrt()]
        } else {
            (1..probs.len()).map(|i| (ind(i) - probs[i]) / (probs[i] * (1.0 - probs[i])).sqrt()).collect()
        }
    }

    /// One step of the chain from `state` at index k, consuming exactly
    /// one uniform from `rng`.
    pub fn step(&self, state: &DensityOperator, k: usize, rng: &mut RngStream) -> Result<StepResult> {
        if !self.kind.is_stochastic() {
            return Err(Error::Config("memory_swap is deterministic; use evolve_memory_swap".into()));
        }
        let cands = self.candidates(state.matrix(), k);
        let weights: SmallVec<[f64; 4]> = cands.iter().map(|c| c.trace().re.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        if total <= DEGENERATE_TOL {
            return Err(Error::Degenerate(format!("all outcome probabilities vanish at step {k}")));
        }
        let probs: SmallVec<[f64; 4]> = weights.iter().map(|w| w / total).collect();
        let u = rng.uniform();
        let certain = probs.iter().position(|&p| p >= 1.0 - DEGENERATE_TOL);
        let outcome = match certain {
            Some(j) => j,
            None => sample_inverse_cdf(&probs, u),
        };
        let x = match certain {
            Some(_) => smallvec::smallvec![0.0; if probs.len() == 2 { 1 } else { probs.len() - 1 }],
            None => self.outcome_variables(&probs, outcome),
        };
        let mut next = cands[outcome].scale_re(1.0 / weights[outcome]);
        if self.kind == ModelKind::MemoryReset && self.p_reset < 1.0 {
            next = next.scale_re(self.p_reset);
            next.axpy_re(1.0 - self.p_reset, self.initial.matrix());
        }
        next.symmetrize();
        Ok(StepResult { next_state: DensityOperator::new_unchecked(next), outcome, probs, x })
    }
}

fn sample_inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p <= DEGENERATE_TOL {
            continue;
        }
        last = j;
        acc += p;
        if u < acc {
            return j;
        }
    }
    last
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub kind: ModelKind,
    pub n: usize,
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
    /// outcomes[k] produced states[k + 1]; empty for `memory_swap`.
    pub outcomes: Vec<usize>,
    pub x_path: Vec<Vec<f64>>,
    pub seed: u64,
    pub stream_index: u64,
    pub model_digest: String,
}

impl TrajectoryRecord {
    /// Column names of the CSV form.
    pub fn csv_header() -> Vec<&'static str> {
        vec![
            "k", "t", "outcome", "x", "rho00_re", "rho00_im", "rho01_re", "rho01_im", "rho10_re", "rho10_im", "rho11_re",
            "rho11_im",
        ]
    }

    /// One row per grid point. Row 0 has empty outcome and x; several
    /// outcome variables are joined with `;`.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let mut row = vec![k.to_string(), self.times[k].to_string()];
                match k.checked_sub(1).and_then(|j| self.outcomes.get(j).map(|o| (o, &self.x_path[j]))) {
                    Some((o, x)) => {
                        row.push(o.to_string());
                        row.push(x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"));
                    }
                    None => row.extend([String::new(), String::new()]),
                }
                for z in s.matrix().as_slice() {
                    row.push(z.re.to_string());
                    row.push(z.im.to_string());
                }
                row
            })
            .collect()
    }
}

/// Run `steps` steps from ρ₀, calling `observe(k, state, step)` for every
/// grid state k = 0..=steps; `step` is the update that produced it.
pub fn run_chain<F>(model: &DiscreteModel, steps: usize, rng: &mut RngStream, mut observe: F) -> Result<()>
where
    F: FnMut(usize, &DensityOperator, Option<&StepResult>),
{
    let mut state = model.initial.clone();
    observe(0, &state, None);
    for k in 0..steps {
        let r = model.step(&state, k, rng)?;
        observe(k + 1, &r.next_state, Some(&r));
        state = r.next_state.clone();
    }
    Ok(())
}

/// n steps on the grid k/n, k = 0..=n.
pub fn simulate(model: &DiscreteModel, seed: u64, stream_index: u64) -> Result<TrajectoryRecord> {
    simulate_steps(model, model.n, seed, stream_index)
}

/// `steps` steps on the grid k/n, so the horizon is steps/n. The swap
/// chain is defined on [0, 1] only.
pub fn simulate_steps(model: &DiscreteModel, steps: usize, seed: u64, stream_index: u64) -> Result<TrajectoryRecord> {
    let n = model.n;
    let times = (0..=steps).map(|k| k as f64 / n as f64).collect();
    let mut record = TrajectoryRecord {
        kind: model.kind,
        n,
        times,
        states: Vec::with_capacity(steps + 1),
        outcomes: Vec::new(),
        x_path: Vec::new(),
        seed,
        stream_index,
        model_digest: model.digest.clone(),
    };
    if model.kind == ModelKind::MemorySwap {
        if steps != n {
            return Err(Error::Config("memory_swap runs on [0, 1] only".into()));
        }
        record.states = evolve_memory_swap(model)?.into_iter().map(DensityOperator::new_unchecked).collect();
        return Ok(record);
    }
    let mut rng = RngStream::new(seed, stream_index);
    run_chain(model, steps, &mut rng, |_, s, r| {
        record.states.push(s.clone());
        if let Some(r) = r {
            record.outcomes.push(r.outcome);
            record.x_path.push(r.x.to_vec());
        }
    })?;
    Ok(record)
}

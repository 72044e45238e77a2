//! Serializable description of a discrete model.
//!
//! Matrices are given either by name or explicitly as rows of `[re, im]`
//! pairs. Omitted fields fall back to the benchmark setup: H₀ = σz,
//! C = lowering, σx measured on the probe, ρ₀ = |+⟩⟨+|.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::Convention;
use crate::continuous::swap_operator;
use crate::error::{Error, Result};
use crate::linalg::consts::{lowering, sigma_x, sigma_y, sigma_z};
use crate::linalg::{ComplexMatrix, DensityOperator, DensityTolerances, Observable, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Single,
    Alternating,
    Noise,
    MemoryReset,
    MemorySwap,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] =
        [ModelKind::Single, ModelKind::Alternating, ModelKind::Noise, ModelKind::MemoryReset, ModelKind::MemorySwap];

    pub fn is_stochastic(self) -> bool {
        self != ModelKind::MemorySwap
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Single => "single",
            ModelKind::Alternating => "alternating",
            ModelKind::Noise => "noise",
            ModelKind::MemoryReset => "memory_reset",
            ModelKind::MemorySwap => "memory_swap",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    /// One of `zero`, `identity`, `sigma_x`, `sigma_y`, `sigma_z`,
    /// `lowering`, `raising`, `swap`.
    Named(String),
    Explicit(ComplexMatrix),
}

impl MatrixSpec {
    pub fn named(s: &str) -> Self {
        MatrixSpec::Named(s.to_string())
    }

    pub fn resolve(&self) -> Result<ComplexMatrix> {
        match self {
            MatrixSpec::Explicit(m) => Ok(m.clone()),
            MatrixSpec::Named(s) => Ok(match s.as_str() {
                "zero" => ComplexMatrix::zeros(2, 2),
                "identity" => ComplexMatrix::identity(2),
                "sigma_x" => sigma_x(),
                "sigma_y" => sigma_y(),
                "sigma_z" => sigma_z(),
                "lowering" => lowering(),
                "raising" => lowering().adjoint(),
                "swap" => swap_operator(),
                other => return Err(Error::Config(format!("unknown matrix preset `{other}`"))),
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    /// `pauli_x` or `dft4`.
    Named(String),
    Explicit(ComplexMatrix),
}

impl ObservableSpec {
    pub fn resolve(&self) -> Result<Observable> {
        match self {
            ObservableSpec::Named(s) => match s.as_str() {
                "pauli_x" => Ok(Observable::pauli_x()),
                "dft4" => Ok(Observable::dft4()),
                "pauli_z" => Observable::new(sigma_z()),
                other => Err(Error::Config(format!("unknown observable preset `{other}`"))),
            },
            ObservableSpec::Explicit(m) => Observable::new(m.clone()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    /// `ket0`, `ket1`, `plus` or `mixed`.
    Named(String),
    Explicit(ComplexMatrix),
}

impl StateSpec {
    pub fn resolve(&self) -> Result<DensityOperator> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re: f64| C64::new(re, 0.0);
        match self {
            StateSpec::Named(s) => match s.as_str() {
                "ket0" => DensityOperator::pure(&[c(1.0), c(0.0)]),
                "ket1" => DensityOperator::pure(&[c(0.0), c(1.0)]),
                "plus" => DensityOperator::pure(&[c(h), c(h)]),
                "mixed" => Ok(DensityOperator::maximally_mixed(2)),
                other => Err(Error::Config(format!("unknown state preset `{other}`"))),
            },
            StateSpec::Explicit(m) => DensityOperator::with_tolerances(m.clone(), &DensityTolerances::uniform(1e-10)),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Steps per unit time.
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_plus: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_minus: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<[MatrixSpec; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Γ of the memory kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_mem: Option<f64>,
    /// Interaction on C² ⊗ C² for `memory_swap`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default = "default_rho0")]
    pub rho0: StateSpec,
    #[serde(default)]
    pub convention: Convention,
    /// Run the single kind with an observable that is diagonal in the
    /// probe basis, which has no diffusive limit.
    #[serde(default)]
    pub allow_diagonal: bool,
}

fn default_rho0() -> StateSpec {
    StateSpec::Named("plus".into())
}

pub const DEFAULT_EPS: f64 = 0.1;
pub const DEFAULT_GAMMA_MEM: f64 = 1.0;

impl ModelConfig {
    /// Benchmark defaults for `kind` at `n` steps per unit time.
    pub fn new(kind: ModelKind, n: usize) -> Self {
        Self {
            kind,
            n,
            h0: None,
            c: None,
            c_plus: None,
            c_minus: None,
            kraus: None,
            eps: None,
            gamma_mem: None,
            hamiltonian: None,
            observable: None,
            rho0: default_rho0(),
            convention: Convention::Standard,
            allow_diagonal: false,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn h0_matrix(&self) -> Result<ComplexMatrix> {
        let m = resolve_or(&self.h0, "sigma_z")?;
        check_2x2("h0", &m)?;
        if m.hermiticity_error() > 1e-12 {
            return Err(Error::NotHermitian(m.hermiticity_error()));
        }
        Ok(m)
    }

    pub fn c_matrix(&self) -> Result<ComplexMatrix> {
        let m = resolve_or(&self.c, "lowering")?;
        check_2x2("c", &m)?;
        Ok(m)
    }

    pub fn c_pm(&self) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let p = resolve_or(&self.c_plus, "lowering")?;
        let m = resolve_or(&self.c_minus, "raising")?;
        check_2x2("c_plus", &p)?;
        check_2x2("c_minus", &m)?;
        Ok((p, m))
    }

    /// Default K_a = σ_a/√3, so that G = Σ K†K = I.
    pub fn kraus_matrices(&self) -> Result<[ComplexMatrix; 3]> {
        let k = match &self.kraus {
            Some(specs) => [specs[0].resolve()?, specs[1].resolve()?, specs[2].resolve()?],
            None => {
                let s = 1.0 / 3f64.sqrt();
                [sigma_x().scale_re(s), sigma_y().scale_re(s), sigma_z().scale_re(s)]
            }
        };
        for m in &k {
            check_2x2("kraus", m)?;
        }
        Ok(k)
    }

    pub fn eps_value(&self) -> Result<f64> {
        let e = self.eps.unwrap_or(DEFAULT_EPS);
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::Config(format!("eps must lie in [0, 1], got {e}")));
        }
        Ok(e)
    }

    pub fn gamma_mem_value(&self) -> Result<f64> {
        let g = self.gamma_mem.unwrap_or(DEFAULT_GAMMA_MEM);
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::Config(format!("memory rate must be finite and nonnegative, got {g}")));
        }
        Ok(g)
    }

    pub fn hamiltonian_matrix(&self) -> Result<ComplexMatrix> {
        let h = resolve_or(&self.hamiltonian, "swap")?;
        if h.rows() != 4 || h.cols() != 4 {
            return Err(Error::Dimension("memory Hamiltonian must be 4x4".into()));
        }
        if h.hermiticity_error() > 1e-12 {
            return Err(Error::NotHermitian(h.hermiticity_error()));
        }
        Ok(h)
    }

    pub fn observable_value(&self) -> Result<Observable> {
        match &self.observable {
            Some(o) => o.resolve(),
            None if self.kind == ModelKind::Noise => Ok(Observable::dft4()),
            None => Ok(Observable::pauli_x()),
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("model config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn resolve_or(spec: &Option<MatrixSpec>, default: &str) -> Result<ComplexMatrix> {
    match spec {
        Some(s) => s.resolve(),
        None => MatrixSpec::named(default).resolve(),
    }
}

fn check_2x2(name: &str, m: &ComplexMatrix) -> Result<()> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::Dimension(format!("{name} must be 2x2, got {}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

//! Constants fixed by the measured observable.
//!
//! Outcome j refers to the j-th eigenspace in decreasing eigenvalue order;
//! 𝔭^{(j)}_{kl} are the entries of its projector in the probe basis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, psd_sqrt, ComplexMatrix, Observable, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsModel {
    Single,
    Noise,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleConstants {
    pub p00: f64,
    pub p01: C64,
    pub q00: f64,
    pub q01: C64,
    /// √(𝔮₀₀/𝔭₀₀).
    pub alpha: f64,
    /// 𝔮₀₁/α − α𝔭₀₁; the effective jump in the diffusion is γC.
    pub gamma: C64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NoiseConstants {
    /// 𝔭₀₀^{(i)} for the four outcomes.
    pub p00: [f64; 4],
    /// gamma_ai[i][a] = γ_{a+1}^{(i+1)} = 𝔭₀ₐ^{(i)}/𝔭₀₀^{(i)} − 𝔭₀ₐ^{(0)}/𝔭₀₀^{(0)}.
    pub gamma_ai: [[C64; 3]; 3],
    /// β_i = √(𝔭₀₀^{(i)}(1 − 𝔭₀₀^{(i)})), i = 1..3.
    pub beta: [f64; 3],
    /// b_ij = √(𝔭₀₀^{(i)}𝔭₀₀^{(j)} / ((1 − 𝔭₀₀^{(i)})(1 − 𝔭₀₀^{(j)}))).
    pub b: [[f64; 3]; 3],
    /// Covariance: 1 on the diagonal, −b_ij off it.
    pub b_matrix: ComplexMatrix,
    pub b_sqrt: ComplexMatrix,
    pub b_eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DerivedConstants {
    Single(SingleConstants),
    Noise(NoiseConstants),
}

impl DerivedConstants {
    pub fn single(&self) -> Option<&SingleConstants> {
        match self {
            DerivedConstants::Single(s) => Some(s),
            _ => None,
        }
    }

    pub fn noise(&self) -> Option<&NoiseConstants> {
        match self {
            DerivedConstants::Noise(s) => Some(s),
            _ => None,
        }
    }
}

const ASSUMPTION_TOL: f64 = 1e-10;

pub fn derive_constants(a: &Observable, model: ConstantsModel) -> Result<DerivedConstants> {
    let outcomes = a.outcomes();
    match model {
        ConstantsModel::Single => {
            if a.dim() != 2 || outcomes.len() != 2 {
                return Err(Error::Assumption {
                    name: "two_outcome_probe",
                    detail: format!("need a 2x2 observable with two distinct eigenvalues, got dim {} with {} eigenvalues", a.dim(), outcomes.len()),
                });
            }
            let p = &outcomes[0].projector;
            let q = &outcomes[1].projector;
            let p00 = p[(0, 0)].re;
            if p00 * (1.0 - p00) <= ASSUMPTION_TOL {
                return Err(Error::Assumption {
                    name: "non_diagonal_observable",
                    detail: format!("observable is diagonal in the probe basis (p00 = {p00:.3e})"),
                });
            }
            let q00 = q[(0, 0)].re;
            let alpha = (q00 / p00).sqrt();
            let gamma = q[(0, 1)] / alpha - p[(0, 1)] * alpha;
            Ok(DerivedConstants::Single(SingleConstants {
                p00,
                p01: p[(0, 1)],
                q00,
                q01: q[(0, 1)],
                alpha,
                gamma,
            }))
        }
        ConstantsModel::Noise => {
            if a.dim() != 4 || outcomes.len() != 4 {
                return Err(Error::Assumption {
                    name: "four_outcome_probe",
                    detail: format!("need a 4x4 observable with four distinct eigenvalues, got dim {} with {} eigenvalues", a.dim(), outcomes.len()),
                });
            }
            let mut p00 = [0.0; 4];
            for (i, o) in outcomes.iter().enumerate() {
                p00[i] = o.projector[(0, 0)].re;
                if p00[i] * (1.0 - p00[i]) <= ASSUMPTION_TOL {
                    return Err(Error::Assumption {
                        name: "nondegenerate_outcome_weights",
                        detail: format!("outcome {i} has p00 = {:.3e}", p00[i]),
                    });
                }
            }
            let ratio = |i: usize, a: usize| outcomes[i].projector[(0, a)] / p00[i];
            let mut gamma_ai = [[C64::new(0.0, 0.0); 3]; 3];
            for (i, row) in gamma_ai.iter_mut().enumerate() {
                for (a, g) in row.iter_mut().enumerate() {
                    *g = ratio(i + 1, a + 1) - ratio(0, a + 1);
                }
            }
            let beta = [1, 2, 3].map(|i| (p00[i] * (1.0 - p00[i])).sqrt());
            let mut b = [[0.0; 3]; 3];
            let mut bm = ComplexMatrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    let (pi, pj) = (p00[i + 1], p00[j + 1]);
                    b[i][j] = (pi * pj / ((1.0 - pi) * (1.0 - pj))).sqrt();
                    bm[(i, j)] = C64::new(if i == j { 1.0 } else { -b[i][j] }, 0.0);
                }
            }
            let eig = hermitian_eigen(&bm);
            if eig.values[0] < -1e-10 {
                return Err(Error::Covariance(eig.values[0]));
            }
            let b_sqrt = psd_sqrt(&bm)?;
            Ok(DerivedConstants::Noise(NoiseConstants {
                p00,
                gamma_ai,
                beta,
                b,
                b_matrix: bm,
                b_sqrt,
                b_eigenvalues: eig.values,
            }))
        }
    }
}

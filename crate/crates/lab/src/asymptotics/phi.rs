//! The integral maps
//!
//!   φ_X(Y) = ∫₀¹ e^{−sX} Y e^{sX} ds,
//!   ψ_X(Y) = ∫₀¹ ∫₀ˢ e^{−sX} Y e^{(s−r)X} Y e^{rX} dr ds,
//!
//! which give the first two coefficients of
//! exp(X + εY + ε²Z) = e^X [I + εφ_X(Y) + ε²(φ_X(Z) + ψ_X(Y))] + O(ε³).

use serde::Serialize;

use super::quadrature::CompositeRule;
use crate::error::{Error, Result};
use crate::harness::stats::{loglog_fit, LineFit};
use crate::linalg::{hermitian_eigen, matrix_exp, ComplexMatrix, HermitianEigen, C64, I, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiMethod {
    /// Eigenbasis formula; needs x = iD with D Hermitian.
    ClosedForm,
    Quadrature,
}

/// (e^{iδ} − 1)/(iδ), with the removable singularity at 0 filled in.
pub(crate) fn gamma_coeff(delta: f64) -> C64 {
    if delta.abs() < 1e-5 {
        ONE + I * (delta / 2.0) - delta * delta / 6.0
    } else {
        (C64::from_polar(1.0, delta) - ONE) / (I * delta)
    }
}

fn skew_hermitian_generator(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x.is_square() {
        return Err(Error::Dimension("phi needs a square generator".into()));
    }
    let d = x.scale(-I);
    let herm = d.hermiticity_error();
    if herm > 1e-12 * x.max_abs().max(1.0) {
        return Err(Error::Assumption {
            name: "skew_hermitian_generator",
            detail: format!("closed form needs x = iD with D Hermitian (deviation {herm:.3e})"),
        });
    }
    Ok(d)
}

/// V (γ ⊙ V†YV) V†, with γ_kl = gamma_coeff(λ_l − λ_k); the map φ_{iD}.
fn phi_in_eigenbasis(eig: &HermitianEigen, y: &ComplexMatrix, inverse: bool) -> Result<ComplexMatrix> {
    let v = &eig.vectors;
    let mut t = v.adjoint().matmul(y).matmul(v);
    let n = eig.values.len();
    for k in 0..n {
        for l in 0..n {
            let g = gamma_coeff(eig.values[l] - eig.values[k]);
            if inverse {
                if g.norm() <= 1e-8 {
                    return Err(Error::Resonance(eig.values[k], eig.values[l]));
                }
                t[(k, l)] /= g;
            } else {
                t[(k, l)] *= g;
            }
        }
    }
    Ok(v.matmul(&t).matmul(&v.adjoint()))
}

pub fn phi_op(x: &ComplexMatrix, y: &ComplexMatrix, method: PhiMethod) -> Result<ComplexMatrix> {
    match method {
        PhiMethod::ClosedForm => {
            let d = skew_hermitian_generator(x)?;
            phi_in_eigenbasis(&hermitian_eigen(&d), y, false)
        }
        PhiMethod::Quadrature => {
            if !x.is_square() || x.rows() != y.rows() || !y.is_square() {
                return Err(Error::Dimension("phi needs square matrices of equal size".into()));
            }
            Ok(phi_quadrature(x, y))
        }
    }
}

fn phi_quadrature(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    let rule = CompositeRule::new(0.0, 1.0, 4, 16);
    let mut acc = ComplexMatrix::zeros(y.rows(), y.cols());
    for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
        let left = matrix_exp(&x.scale_re(-s));
        let right = matrix_exp(&x.scale_re(s));
        acc.axpy_re(w, &left.matmul(y).matmul(&right));
    }
    acc
}

/// Nested rule: 64 outer nodes on [0, 1], 32 inner nodes on [0, s].
pub fn psi_op(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x.is_square() || x.rows() != y.rows() || !y.is_square() {
        return Err(Error::Dimension("psi needs square matrices of equal size".into()));
    }
    let outer = CompositeRule::new(0.0, 1.0, 4, 16);
    let inner_unit = CompositeRule::new(0.0, 1.0, 2, 16);
    let mut acc = ComplexMatrix::zeros(y.rows(), y.cols());
    for (&s, &ws) in outer.nodes.iter().zip(&outer.weights) {
        let left = matrix_exp(&x.scale_re(-s)).matmul(y);
        let mut inner = ComplexMatrix::zeros(y.rows(), y.cols());
        for (&u, &wu) in inner_unit.nodes.iter().zip(&inner_unit.weights) {
            let r = s * u;
            let mid = matrix_exp(&x.scale_re(s - r));
            let right = matrix_exp(&x.scale_re(r));
            inner.axpy_re(wu * s, &mid.matmul(y).matmul(&right));
        }
        acc.axpy_re(ws, &left.matmul(&inner));
    }
    Ok(acc)
}

/// Solve φ_{iD}(Z) = y for Z.
pub fn phi_inv(d: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    let herm = d.hermiticity_error();
    if herm > 1e-10 {
        return Err(Error::NotHermitian(herm));
    }
    phi_in_eigenbasis(&hermitian_eigen(d), y, true)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionFit {
    pub eps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Absent when every residual is at rounding level.
    pub fit: Option<LineFit>,
}

/// Residual of the second-order expansion of exp(X + εY + ε²Z) over a sweep.
pub fn expansion_check(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    z: &ComplexMatrix,
    eps_list: &[f64],
) -> Result<ExpansionFit> {
    if eps_list.len() < 4 || eps_list.iter().any(|&e| !(e > 0.0 && e <= 0.5)) {
        return Err(Error::Config("expansion_check needs at least 4 values of eps in (0, 0.5]".into()));
    }
    let ex = matrix_exp(x);
    let phi_y = phi_op(x, y, PhiMethod::Quadrature)?;
    let phi_z = phi_op(x, z, PhiMethod::Quadrature)?;
    let psi_y = psi_op(x, y)?;
    let second = &phi_z + &psi_y;
    let n = x.rows();
    let mut residuals = Vec::with_capacity(eps_list.len());
    for &e in eps_list {
        let mut arg = x.clone();
        arg.axpy_re(e, y);
        arg.axpy_re(e * e, z);
        let exact = matrix_exp(&arg);
        let mut bracket = ComplexMatrix::identity(n);
        bracket.axpy_re(e, &phi_y);
        bracket.axpy_re(e * e, &second);
        residuals.push(exact.dist(&ex.matmul(&bracket)));
    }
    let floor = 1e-13 * ex.frobenius_norm().max(1.0);
    let fit = if residuals.iter().all(|&r| r <= floor) { None } else { loglog_fit(eps_list, &residuals) };
    Ok(ExpansionFit { eps: eps_list.to_vec(), residuals, fit })
}

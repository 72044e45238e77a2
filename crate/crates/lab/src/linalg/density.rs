use serde::Serialize;

use super::decomp::hermitian_eigen;
use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Tolerances for the three density invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityTolerances {
    pub hermitian: f64,
    pub trace: f64,
    /// Smallest eigenvalue must be at least `-psd`.
    pub psd: f64,
}

impl Default for DensityTolerances {
    fn default() -> Self {
        Self { hermitian: 1e-12, trace: 1e-12, psd: 1e-10 }
    }
}

impl DensityTolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { hermitian: tol, trace: tol, psd: tol }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub invariant: &'static str,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_density(m: &ComplexMatrix, tol: &DensityTolerances) -> ValidationReport {
    if !m.is_square() {
        return ValidationReport {
            hermiticity_error: f64::INFINITY,
            trace_error: f64::INFINITY,
            min_eigenvalue: f64::NEG_INFINITY,
            violations: vec![Violation { invariant: "square", magnitude: f64::INFINITY }],
        };
    }
    let herm = m.hermiticity_error();
    let tr = m.trace();
    let trace_error = (tr - C64::new(1.0, 0.0)).norm();
    let min_eig = hermitian_eigen(m).values[0];
    let mut violations = Vec::new();
    if !(herm <= tol.hermitian) {
        violations.push(Violation { invariant: "hermitian", magnitude: herm });
    }
    if !(trace_error <= tol.trace) {
        violations.push(Violation { invariant: "unit_trace", magnitude: trace_error });
    }
    if !(min_eig >= -tol.psd) {
        violations.push(Violation { invariant: "positive_semidefinite", magnitude: -min_eig });
    }
    ValidationReport { hermiticity_error: herm, trace_error, min_eigenvalue: min_eig, violations }
}

/// Hermitian, PSD, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityOperator(ComplexMatrix);

impl DensityOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(m, &DensityTolerances::default())
    }

    pub fn with_tolerances(m: ComplexMatrix, tol: &DensityTolerances) -> Result<Self> {
        let report = validate_density(&m, tol);
        if report.passed() {
            Ok(Self(m))
        } else {
            let msg: Vec<String> =
                report.violations.iter().map(|v| format!("{} ({:.3e})", v.invariant, v.magnitude)).collect();
            Err(Error::InvalidDensity(msg.join(", ")))
        }
    }

    /// Wrap without checking; for states produced by maps that preserve
    /// the invariants by construction.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn pure(v: &[C64]) -> Result<Self> {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let w: Vec<C64> = v.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&w, &w))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale_re(1.0 / d as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

/// Clip negative eigenvalues and renormalize the trace.
pub fn psd_repair(m: &ComplexMatrix) -> Result<DensityOperator> {
    let herm = m.hermiticity_error();
    if herm > 1e-8 {
        return Err(Error::NotHermitian(herm));
    }
    let eig = hermitian_eigen(m);
    let total: f64 = eig.values.iter().map(|l| l.max(0.0)).sum();
    if total <= 1e-12 {
        return Err(Error::InvalidDensity(format!("trace after clipping is {total:.3e}")));
    }
    if eig.values[0] >= 0.0 && (m.trace().re - 1.0).abs() <= 1e-15 {
        return Ok(DensityOperator(m.hermitian_part()));
    }
    let mut out = eig.apply(|l| C64::new(l.max(0.0) / total, 0.0));
    out.symmetrize();
    Ok(DensityOperator(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::consts::*;
    use crate::linalg::testutil::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let half = ComplexMatrix::identity(2).scale_re(0.5);
        assert!(validate_density(&half, &DensityTolerances::default()).passed());

        let r = validate_density(&sigma_x(), &DensityTolerances::default());
        let names: Vec<_> = r.violations.iter().map(|v| v.invariant).collect();
        assert_eq!(names, vec!["unit_trace", "positive_semidefinite"]);

        let mut g = rng(7);
        for _ in 0..20 {
            let v = random_unitary(&mut g, 2);
            let m = v.matmul(&ComplexMatrix::diag_real(&[0.7, 0.3])).matmul(&v.adjoint());
            assert!(validate_density(&m, &DensityTolerances::default()).passed());
        }
    }

    #[test]
    fn repair_examples() {
        let rho = random_density(&mut rng(8), 2);
        let fixed = psd_repair(rho.matrix()).unwrap();
        assert!(fixed.matrix().approx_eq(rho.matrix(), 1e-15));

        let bad = ComplexMatrix::diag_real(&[1.1, -0.1]);
        let fixed = psd_repair(&bad).unwrap();
        assert!(fixed.matrix().approx_eq(&ComplexMatrix::diag_real(&[1.0, 0.0]), 1e-15));

        assert!(psd_repair(&ComplexMatrix::diag_real(&[-1.0, -0.5])).is_err());
    }

    proptest! {
        #[test]
        fn repaired_states_validate(seed in 0u64..10_000, size in 0.0f64..0.5) {
            let mut g = rng(seed);
            let rho = random_density(&mut g, 2);
            let noisy = rho.matrix() + &random_hermitian(&mut g, 2, size);
            prop_assume!(*hermitian_eigen(&noisy).values.last().unwrap() > 1e-6);
            let fixed = psd_repair(&noisy).unwrap();
            prop_assert!(validate_density(fixed.matrix(), &DensityTolerances::uniform(1e-10)).passed());
        }
    }
}

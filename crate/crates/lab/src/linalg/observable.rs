use serde::Serialize;

use super::decomp::hermitian_eigen;
use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// One eigenspace: the eigenvalue, its projector and an orthonormal basis.
#[derive(Clone, Debug, Serialize)]
pub struct Eigenspace {
    pub value: f64,
    pub projector: ComplexMatrix,
    #[serde(skip)]
    pub basis: Vec<Vec<C64>>,
}

/// Hermitian matrix with its spectral decomposition, eigenvalues ascending.
#[derive(Clone, Debug, Serialize)]
pub struct Observable {
    pub matrix: ComplexMatrix,
    pub spectrum: Vec<Eigenspace>,
}

impl Observable {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        hermitian_spectral(&m, DEFAULT_DEGENERACY_TOL)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Eigenspaces ordered by decreasing eigenvalue. Measurement outcome j
    /// of the trajectory models refers to position j in this list.
    pub fn outcomes(&self) -> Vec<&Eigenspace> {
        self.spectrum.iter().rev().collect()
    }

    pub fn pauli_x() -> Self {
        Self::new(super::consts::sigma_x()).expect("σx is Hermitian")
    }

    /// Σ_j j f_j f_j† with f_j the discrete Fourier basis of C⁴.
    pub fn dft4() -> Self {
        let mut m = ComplexMatrix::zeros(4, 4);
        for j in 0..4 {
            let f: Vec<C64> = (0..4)
                .map(|a| C64::from_polar(0.5, 2.0 * std::f64::consts::PI * (j * a) as f64 / 4.0))
                .collect();
            m.axpy_re(j as f64, &ComplexMatrix::outer(&f, &f));
        }
        m.symmetrize();
        Self::new(m).expect("DFT observable is Hermitian")
    }
}

pub fn hermitian_spectral(m: &ComplexMatrix, degeneracy_tol: f64) -> Result<Observable> {
    if !m.is_square() {
        return Err(Error::Dimension("observable must be square".into()));
    }
    let herm = m.hermiticity_error();
    if herm > 1e-10 {
        return Err(Error::NotHermitian(herm));
    }
    let eig = hermitian_eigen(m);
    let n = m.rows();
    let mut spectrum: Vec<Eigenspace> = Vec::new();
    let mut k = 0;
    while k < n {
        let start = eig.values[k];
        let mut group = vec![k];
        k += 1;
        while k < n && eig.values[k] - start <= degeneracy_tol {
            group.push(k);
            k += 1;
        }
        let value = group.iter().map(|&i| eig.values[i]).sum::<f64>() / group.len() as f64;
        let basis: Vec<Vec<C64>> = group.iter().map(|&i| eig.vector(i)).collect();
        let mut projector = ComplexMatrix::zeros(n, n);
        for v in &basis {
            projector += &ComplexMatrix::outer(v, v);
        }
        spectrum.push(Eigenspace { value, projector, basis });
    }
    Ok(Observable { matrix: m.clone(), spectrum })
}

/// The probe state β = e_i e_i†.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EnvironmentState {
    pub index: usize,
    pub dim: usize,
}

impl EnvironmentState {
    pub fn ground(dim: usize) -> Self {
        Self { index: 0, dim }
    }

    pub fn beta(&self) -> ComplexMatrix {
        ComplexMatrix::unit(self.dim, self.index, self.index)
    }
}

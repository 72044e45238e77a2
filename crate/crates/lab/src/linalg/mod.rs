//! Dense complex linear algebra for dimensions up to 8.

mod decomp;
mod density;
mod matrix;
mod observable;
#[cfg(test)]
pub(crate) mod testutil;

pub use decomp::{
    exp_i_hermitian, hermitian_eigen, matrix_exp, nearest_unitary, psd_sqrt, unitary_eigen, HermitianEigen,
};
pub use density::{psd_repair, validate_density, DensityOperator, DensityTolerances, ValidationReport, Violation};
pub use matrix::{consts, partial_trace_env, tensor_product, ComplexMatrix, C64, I, ONE, ZERO};
pub use observable::{hermitian_spectral, Eigenspace, EnvironmentState, Observable, DEFAULT_DEGENERACY_TOL};

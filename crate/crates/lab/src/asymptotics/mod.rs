//! Small-step asymptotics: the φ/ψ integral maps, reconstruction of a
//! generator from the expansion of its unitary, dilation unitaries built
//! from block expansions, and the constants tied to the observable.

mod constants;
mod dilation;
mod generator;
mod phi;
pub mod quadrature;

pub use constants::{derive_constants, ConstantsModel, DerivedConstants, NoiseConstants, SingleConstants};
pub use dilation::{
    build_dilation_unitary, build_noise_unitary, noise_column_residual, noise_first_column, BlockUnitary, Convention,
    NoiseColumnResidual,
};
pub use generator::{reconstruct_generator, richardson_coefficients, roundtrip, GeneratorTriple, RICHARDSON_LEVELS};
pub use phi::{expansion_check, phi_inv, phi_op, psi_op, ExpansionFit, PhiMethod};

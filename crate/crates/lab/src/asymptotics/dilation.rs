//! Unitaries on system ⊗ probe built from their small-step block expansions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{exp_i_hermitian, nearest_unitary, ComplexMatrix, C64, I, ONE};

/// Dagger placement of the jump operator.
///
/// `Standard`: U₀₀ ≈ I − (iH + C†C/2)/n, U₁₀ ≈ C/√n, gain term CρC†.
/// `Adjoint`: the same with C replaced by C† throughout, i.e. CC† in U₀₀ and
/// the anticommutator, gain C†ρC. The two agree for normal C.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Standard,
    Adjoint,
}

impl Convention {
    /// The operator that plays the role of C in the standard formulas.
    pub fn jump(self, c: &ComplexMatrix) -> ComplexMatrix {
        match self {
            Convention::Standard => c.clone(),
            Convention::Adjoint => c.adjoint(),
        }
    }
}

/// Unitary on C^{sys} ⊗ C^{env} (system index major) with its blocks
/// U_ij = (I ⊗ e_i†) U (I ⊗ e_j), so U = Σ U_ij ⊗ e_i e_j†.
#[derive(Clone, Debug, Serialize)]
pub struct BlockUnitary {
    pub matrix: ComplexMatrix,
    pub sys_dim: usize,
    pub env_dim: usize,
    pub n: usize,
    #[serde(skip)]
    blocks: Vec<ComplexMatrix>,
}

impl BlockUnitary {
    pub fn new(matrix: ComplexMatrix, sys_dim: usize, env_dim: usize, n: usize) -> Self {
        let mut blocks = Vec::with_capacity(env_dim * env_dim);
        for i in 0..env_dim {
            for j in 0..env_dim {
                let mut b = ComplexMatrix::zeros(sys_dim, sys_dim);
                for s in 0..sys_dim {
                    for t in 0..sys_dim {
                        b[(s, t)] = matrix[(s * env_dim + i, t * env_dim + j)];
                    }
                }
                blocks.push(b);
            }
        }
        Self { matrix, sys_dim, env_dim, n, blocks }
    }

    pub fn block(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.blocks[i * self.env_dim + j]
    }

    /// ‖U†U − I‖_F.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.rows();
        self.matrix.adjoint().matmul(&self.matrix).dist(&ComplexMatrix::identity(d))
    }

    /// Σ U_ij ⊗ e_i e_j†.
    pub fn reassemble(&self) -> ComplexMatrix {
        let d = self.sys_dim * self.env_dim;
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..self.env_dim {
            for j in 0..self.env_dim {
                m += &self.block(i, j).kron(&ComplexMatrix::unit(self.env_dim, i, j));
            }
        }
        m
    }

    /// E₀[U(ρ⊗β)U†] with β = e₀e₀†, i.e. Σ_a U_a0 ρ U_a0†.
    pub fn reduced_map(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.sys_dim, self.sys_dim);
        for a in 0..self.env_dim {
            out += &self.block(a, 0).sandwich(rho);
        }
        out
    }
}

/// U(n) = exp(−(i/n) H₀⊗I + (1/√n)(C⊗e₁e₀† − C†⊗e₀e₁†)) on C²⊗C².
pub fn build_dilation_unitary(
    h0: &ComplexMatrix,
    c: &ComplexMatrix,
    n: usize,
    convention: Convention,
) -> Result<BlockUnitary> {
    check_system_operator(h0, "h0")?;
    check_system_operator(c, "c")?;
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let herm = h0.hermiticity_error();
    if herm > 1e-10 {
        return Err(Error::NotHermitian(herm));
    }
    let j = convention.jump(c);
    let nf = n as f64;
    // Hermitian K with U = exp(−iK).
    let mut k = h0.kron(&ComplexMatrix::identity(2)).scale_re(1.0 / nf);
    let coupling = &j.kron(&ComplexMatrix::unit(2, 1, 0)) - &j.adjoint().kron(&ComplexMatrix::unit(2, 0, 1));
    k.axpy(I * (1.0 / nf.sqrt()), &coupling);
    k.symmetrize();
    Ok(BlockUnitary::new(exp_i_hermitian(&k, 1.0), 2, 2, n))
}

fn check_system_operator(m: &ComplexMatrix, name: &str) -> Result<()> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::Dimension(format!("{name} must be 2x2, got {}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

/// The prescribed first block column of the noise unitary as an 8×2 matrix:
/// ((1 + (1−ε)/2n) I, √(ε/n) K₁, √(ε/n) K₂, √(ε/n) K₃).
pub fn noise_first_column(kraus: &[ComplexMatrix; 3], eps: f64, n: usize) -> ComplexMatrix {
    let nf = n as f64;
    let mut v = ComplexMatrix::zeros(8, 2);
    let lead = 1.0 + (1.0 - eps) / (2.0 * nf);
    let amp = (eps / nf).sqrt();
    for s in 0..2 {
        v[(s * 4, s)] = C64::new(lead, 0.0);
        for (a, k) in kraus.iter().enumerate() {
            for t in 0..2 {
                v[(s * 4 + a + 1, t)] = k[(s, t)] * amp;
            }
        }
    }
    v
}

fn first_column_of(u: &BlockUnitary) -> ComplexMatrix {
    let mut col = ComplexMatrix::zeros(8, 2);
    for r in 0..8 {
        for t in 0..2 {
            col[(r, t)] = u.matrix[(r, t * 4)];
        }
    }
    col
}

/// Distances of the realized first block column from the prescribed one.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NoiseColumnResidual {
    /// ‖U_col − V‖: the prescribed column is not an isometry (V†V ≈ (1 + 1/n) I),
    /// so this is of order 1/n and cannot be removed.
    pub raw: f64,
    /// ‖U_col − V(I − S₁/2n)‖ with V†V = I + S₁/n + O(n⁻²): the deviation
    /// left after the unavoidable first-order normalization.
    pub normalized: f64,
}

pub fn noise_column_residual(kraus: &[ComplexMatrix; 3], eps: f64, u: &BlockUnitary) -> NoiseColumnResidual {
    let n = u.n as f64;
    let v = noise_first_column(kraus, eps, u.n);
    let col = first_column_of(u);
    let mut s1 = ComplexMatrix::identity(2).scale_re(1.0 - eps);
    for k in kraus {
        s1.axpy_re(eps, &k.adjoint().matmul(k));
    }
    let mut corr = ComplexMatrix::identity(2);
    corr.axpy_re(-0.5 / n, &s1);
    NoiseColumnResidual { raw: col.dist(&v), normalized: col.dist(&v.matmul(&corr)) }
}

/// Complete the prescribed column to an 8×8 matrix by Gram–Schmidt and take
/// the polar factor. The realized column is V (V†V)^{-1/2}, the isometry
/// closest to V.
pub fn build_noise_unitary(kraus: &[ComplexMatrix; 3], eps: f64, n: usize) -> Result<BlockUnitary> {
    for (i, k) in kraus.iter().enumerate() {
        check_system_operator(k, &format!("kraus[{i}]"))?;
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Config(format!("eps must lie in [0, 1], got {eps}")));
    }
    if n < 4 {
        return Err(Error::Config(format!("noise unitary needs n >= 4, got {n}")));
    }
    let v = noise_first_column(kraus, eps, n);
    let mut candidate = ComplexMatrix::zeros(8, 8);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for t in 0..2 {
        let col = v.column(t);
        candidate.set_column(t * 4, &col);
        if let Some(q) = orthonormalize(&col, &basis, 1e-12) {
            basis.push(q);
        }
    }
    let free: Vec<usize> = (0..8).filter(|c| c % 4 != 0).collect();
    let mut next = free.iter();
    for e in 0..8 {
        if basis.len() == 8 {
            break;
        }
        let mut unit = vec![C64::new(0.0, 0.0); 8];
        unit[e] = ONE;
        if let Some(q) = orthonormalize(&unit, &basis, 0.1) {
            candidate.set_column(*next.next().expect("six free columns"), &q);
            basis.push(q);
        }
    }
    let u = BlockUnitary::new(nearest_unitary(&candidate)?, 2, 4, n);
    let res = noise_column_residual(kraus, eps, &u);
    let bound = 5.0 / (n as f64).powf(1.5);
    if !(res.normalized <= bound) {
        return Err(Error::Construction { residual: res.normalized, bound });
    }
    Ok(u)
}

/// Project out `basis` twice (classical GS with reorthogonalization).
fn orthonormalize(v: &[C64], basis: &[Vec<C64>], min_norm: f64) -> Option<Vec<C64>> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let dot: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            w.iter_mut().zip(q).for_each(|(x, a)| *x -= dot * a);
        }
    }
    let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let ref_norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= min_norm * ref_norm {
        return None;
    }
    Some(w.into_iter().map(|z| z / norm).collect())
}

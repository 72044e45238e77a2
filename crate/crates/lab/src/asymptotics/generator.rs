//! Recover H(n) = nD + √n E + F from the expansion
//! U(n) = U⁽⁰⁾ + U⁽¹⁾/√n + U⁽²⁾/n + O(n^{-3/2}) of U(n) = exp(iH(n)/n).

use serde::Serialize;

use super::phi::{phi_inv, psi_op};
use crate::error::{Error, Result};
use crate::linalg::{exp_i_hermitian, unitary_eigen, ComplexMatrix, C64, I};

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorTriple {
    pub d: ComplexMatrix,
    pub e: ComplexMatrix,
    pub f: ComplexMatrix,
}

impl GeneratorTriple {
    /// exp(i(nD + √n E + F)/n).
    pub fn forward(&self, n: f64) -> ComplexMatrix {
        let mut h = self.d.clone();
        h.axpy_re(1.0 / n.sqrt(), &self.e);
        h.axpy_re(1.0 / n, &self.f);
        exp_i_hermitian(&h, -1.0)
    }
}

/// Principal logarithm angles of a unitary, with 2π-coincident angles
/// snapped onto the first of the pair.
fn log_angles(u0: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let (vals, vecs) = unitary_eigen(u0);
    let mut theta: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
    let two_pi = 2.0 * std::f64::consts::PI;
    for k in 0..theta.len() {
        for l in (k + 1)..theta.len() {
            let q = (theta[k] - theta[l]) / two_pi;
            let m = q.round();
            if m != 0.0 && (q - m).abs() * two_pi <= 1e-8 {
                theta[l] = theta[k];
            }
        }
    }
    (theta, vecs)
}

pub fn reconstruct_generator(u0: &ComplexMatrix, u1: &ComplexMatrix, u2: &ComplexMatrix) -> Result<GeneratorTriple> {
    let n = u0.rows();
    let defect = u0.adjoint().matmul(u0).dist(&ComplexMatrix::identity(n));
    if defect > 1e-8 {
        return Err(Error::Assumption { name: "unitary_leading_term", detail: format!("‖U†U − I‖ = {defect:.3e}") });
    }
    let (theta, v) = log_angles(u0);
    let diag: Vec<C64> = theta.iter().map(|&t| C64::new(t, 0.0)).collect();
    let mut d = v.matmul(&ComplexMatrix::diag(&diag)).matmul(&v.adjoint());
    d.symmetrize();

    let u0d = u0.adjoint();
    let e = phi_inv(&d, &u0d.matmul(u1))?.scale(-I);
    let psi_e = psi_op(&d.scale(I), &e)?;
    let f = phi_inv(&d, &(&u0d.matmul(u2) + &psi_e))?.scale(-I);
    // Inputs that are not an exact expansion (for instance u2 = 0 with
    // E ≠ 0) give an anti-Hermitian remainder; only the Hermitian part is
    // a generator.
    Ok(GeneratorTriple { d, e: e.hermitian_part(), f: f.hermitian_part() })
}

/// Discretization levels of the fit: seven points spread evenly in log n
/// over 10²..10⁴.
pub const RICHARDSON_LEVELS: [f64; 7] = [100.0, 215.0, 464.0, 1000.0, 2154.0, 4642.0, 10000.0];

/// Fit U(n) = Σ_k c_k n^{-k/2} through the given levels (degree = levels − 1)
/// and return c₀, c₁, c₂.
pub fn richardson_coefficients(levels: &[f64], samples: &[ComplexMatrix]) -> Result<[ComplexMatrix; 3]> {
    let m = levels.len();
    if m < 3 || samples.len() != m {
        return Err(Error::Config("need at least three levels and one sample per level".into()));
    }
    let hmax = levels.iter().map(|n| 1.0 / n.sqrt()).fold(0.0, f64::max);
    // Vandermonde in the scaled variable h/hmax for conditioning.
    let mut a = vec![vec![0.0; m]; m];
    for (i, n) in levels.iter().enumerate() {
        let x = 1.0 / n.sqrt() / hmax;
        for (k, entry) in a[i].iter_mut().enumerate() {
            *entry = x.powi(k as i32);
        }
    }
    let inv = invert_small(&a)?;
    let (r, c) = (samples[0].rows(), samples[0].cols());
    let coeff = |k: usize| {
        let mut out = ComplexMatrix::zeros(r, c);
        for (i, s) in samples.iter().enumerate() {
            out.axpy_re(inv[k][i], s);
        }
        out.scale_re(hmax.powi(-(k as i32)))
    };
    Ok([coeff(0), coeff(1), coeff(2)])
}

/// Gauss–Jordan inverse with partial pivoting for tiny dense systems.
fn invert_small(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[piv][col].abs() < 1e-14 {
            return Err(Error::Config("singular fitting system".into()));
        }
        m.swap(col, piv);
        let p = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= p);
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    m[i].iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Forward map at the fit levels, coefficient extraction, reconstruction.
pub fn roundtrip(truth: &GeneratorTriple) -> Result<GeneratorTriple> {
    let samples: Vec<ComplexMatrix> = RICHARDSON_LEVELS.iter().map(|&n| truth.forward(n)).collect();
    let [u0, u1, u2] = richardson_coefficients(&RICHARDSON_LEVELS, &samples)?;
    reconstruct_generator(&u0, &u1, &u2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;

    #[test]
    fn identity_leading_term() {
        let e0 = random_hermitian(&mut rng(1), 2, 1.0);
        let z = ComplexMatrix::zeros(2, 2);
        let g = reconstruct_generator(&ComplexMatrix::identity(2), &e0.scale(I), &z).unwrap();
        assert!(g.d.max_abs() < 1e-14);
        assert!(g.e.approx_eq(&e0, 1e-13));
        // With u2 = (iE₀)²/2 the expansion is exact and F vanishes.
        let u2 = e0.matmul(&e0).scale_re(-0.5);
        let g = reconstruct_generator(&ComplexMatrix::identity(2), &e0.scale(I), &u2).unwrap();
        assert!(g.f.max_abs() < 1e-13);
    }

    #[test]
    fn richardson_recovers_polynomial() {
        let c: Vec<ComplexMatrix> = (0..5).map(|k| random_matrix(&mut rng(k), 2, 1.0)).collect();
        let samples: Vec<ComplexMatrix> = RICHARDSON_LEVELS
            .iter()
            .map(|&n| {
                let h = 1.0 / f64::sqrt(n);
                let mut s = ComplexMatrix::zeros(2, 2);
                for (k, ck) in c.iter().enumerate() {
                    s.axpy_re(h.powi(k as i32), ck);
                }
                s
            })
            .collect();
        let [a, b, d] = richardson_coefficients(&RICHARDSON_LEVELS, &samples).unwrap();
        assert!(a.approx_eq(&c[0], 1e-12) && b.approx_eq(&c[1], 1e-10) && d.approx_eq(&c[2], 1e-8));
    }

    #[test]
    fn roundtrip_recovers_triple() {
        let mut g = rng(2);
        for _ in 0..5 {
            let truth = GeneratorTriple {
                d: random_hermitian(&mut g, 2, 0.5),
                e: random_hermitian(&mut g, 2, 0.5),
                f: random_hermitian(&mut g, 2, 0.5),
            };
            let got = roundtrip(&truth).unwrap();
            assert!(got.d.approx_eq(&truth.d, 1e-4));
            assert!(got.e.approx_eq(&truth.e, 1e-4));
            assert!(got.f.approx_eq(&truth.f, 1e-4), "d {} e {} f {}", got.d.dist(&truth.d), got.e.dist(&truth.e), got.f.dist(&truth.f));
        }
    }

    #[test]
    fn resonant_leading_term_is_rejected() {
        let pi = std::f64::consts::PI;
        let d = ComplexMatrix::diag_real(&[-pi + 0.5, pi + 0.5]);
        // e^{iD} has a double eigenvalue; the branch rule collapses it and
        // the Hadamard division sees no resonance. Feed an explicit 2π gap
        // to phi_inv instead.
        let u0 = exp_i_hermitian(&d, -1.0);
        let g = reconstruct_generator(&u0, &ComplexMatrix::zeros(2, 2), &ComplexMatrix::zeros(2, 2)).unwrap();
        assert!(g.d.approx_eq(&ComplexMatrix::diag_real(&[-pi + 0.5, -pi + 0.5]), 1e-10));
        assert!(matches!(phi_inv(&d, &ComplexMatrix::identity(2)), Err(Error::Resonance(..))));
    }
}

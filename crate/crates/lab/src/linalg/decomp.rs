//! Cyclic Jacobi eigensolver and the matrix functions built on it.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix: ascending values, eigenvectors as
/// the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// V f(Λ) V†.
    pub fn apply<F: Fn(f64) -> C64>(&self, f: F) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let fk = f(self.values[k]);
            for i in 0..n {
                let a = v[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 100;

/// Jacobi diagonalization of a Hermitian matrix. Only the Hermitian part of
/// the input is used; callers check hermiticity when it matters.
pub fn hermitian_eigen(m: &ComplexMatrix) -> HermitianEigen {
    assert!(m.is_square(), "eigendecomposition needs a square matrix");
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g <= 1e-300 {
                    continue;
                }
                // Rotate the phase away, then a real symmetric Jacobi step.
                let ph = apq / g;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let phc = ph.conj();
                // A <- A R on columns p, q.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * phc * s;
                    a[(i, q)] = aip * s + aiq * phc * c;
                }
                // A <- R† A on rows p, q.
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * ph * s;
                    a[(q, j)] = apj * s + aqj * ph * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * phc * s;
                    v[(i, q)] = vip * s + viq * phc * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, k)] = v[(r, i)];
        }
    }
    HermitianEigen { values, vectors }
}

/// Eigenvalue phases and eigenvectors of a unitary (or any normal) matrix.
/// The two Hermitian parts commute, so a generic real combination of them
/// shares the eigenbasis.
pub fn unitary_eigen(u: &ComplexMatrix) -> (Vec<C64>, ComplexMatrix) {
    let n = u.rows();
    let herm = (u + &u.adjoint()).scale_re(0.5);
    let anti = (u - &u.adjoint()).scale(C64::new(0.0, -0.5));
    let mix = &herm + &anti.scale_re(std::f64::consts::SQRT_2 / std::f64::consts::PI);
    let eig = hermitian_eigen(&mix);
    let vecs = eig.vectors;
    let uv = u.matmul(&vecs);
    let vals = (0..n)
        .map(|k| (0..n).map(|i| vecs[(i, k)].conj() * uv[(i, k)]).sum::<C64>())
        .collect();
    (vals, vecs)
}

/// Scaling and squaring around a degree-18 Taylor core.
pub fn matrix_exp(m: &ComplexMatrix) -> ComplexMatrix {
    assert!(m.is_square(), "matrix_exp needs a square matrix");
    let n = m.rows();
    let norm = m.norm_one();
    let mut s = 0u32;
    if norm > 0.25 {
        s = (norm / 0.25).log2().ceil() as u32;
    }
    let a = m.scale_re(0.5f64.powi(s as i32));
    // Horner form of Σ_{k≤18} A^k/k!.
    let mut r = ComplexMatrix::identity(n);
    for k in (1..=18).rev() {
        r = a.matmul(&r).scale_re(1.0 / k as f64);
        for i in 0..n {
            r[(i, i)] += ONE;
        }
    }
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

/// exp(-iK) for Hermitian K via its eigenbasis; unitary to rounding.
pub fn exp_i_hermitian(k: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let eig = hermitian_eigen(k);
    eig.apply(|l| C64::from_polar(1.0, -t * l))
}

/// Polar factor U of M = U P.
pub fn nearest_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("polar decomposition needs a square matrix".into()));
    }
    let gram = m.adjoint().matmul(m);
    let eig = hermitian_eigen(&gram);
    let smin = eig.values[0].max(0.0).sqrt();
    let smax = eig.values[eig.values.len() - 1].max(0.0).sqrt();
    if smin <= 1e-10 * smax.max(1.0) {
        return Err(Error::RankDeficient(smin));
    }
    let inv_sqrt = eig.apply(|l| C64::new(1.0 / l.sqrt(), 0.0));
    let mut u = m.matmul(&inv_sqrt);
    // Two Newton–Schulz sweeps mop up the rounding left by the eigen route.
    let n = u.rows();
    for _ in 0..2 {
        let mut t = u.adjoint().matmul(&u).scale_re(-1.0);
        for i in 0..n {
            t[(i, i)] += C64::new(3.0, 0.0);
        }
        u = u.matmul(&t).scale_re(0.5);
    }
    Ok(u)
}

/// Principal square root of a PSD matrix; dust down to -1e-6 is clipped.
pub fn psd_sqrt(b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let herm = b.hermiticity_error();
    if herm > 1e-10 * b.max_abs().max(1.0) {
        return Err(Error::NotHermitian(herm));
    }
    let eig = hermitian_eigen(b);
    if eig.values[0] < -1e-6 {
        return Err(Error::NotPsd(eig.values[0]));
    }
    Ok(eig.apply(|l| C64::new(l.max(0.0).sqrt(), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::consts::*;
    use crate::linalg::testutil::*;
    use std::f64::consts::PI;

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        let mut r = rng(1);
        for n in [2, 3, 4, 8] {
            for _ in 0..20 {
                let h = random_hermitian(&mut r, n, 2.0);
                let e = hermitian_eigen(&h);
                let back = e.apply(|l| C64::new(l, 0.0));
                assert!(back.approx_eq(&h, 1e-12), "n = {n}");
                let vv = e.vectors.adjoint().matmul(&e.vectors);
                assert!(vv.approx_eq(&ComplexMatrix::identity(n), 1e-13));
                assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn jacobi_pauli_x() {
        let e = hermitian_eigen(&sigma_x());
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exp_of_zero_and_pauli_rotation() {
        assert_eq!(matrix_exp(&ComplexMatrix::zeros(3, 3)), ComplexMatrix::identity(3));
        let m = sigma_x().scale(C64::new(0.0, PI));
        let e = matrix_exp(&m);
        assert!(e.approx_eq(&ComplexMatrix::identity(2).scale_re(-1.0), 1e-14));
    }

    #[test]
    fn exp_inverse_and_adjoint_identities() {
        let mut r = rng(2);
        for _ in 0..50 {
            let a = random_matrix(&mut r, 4, 2.0 / 4.0);
            let e = matrix_exp(&a);
            let ei = matrix_exp(&a.scale_re(-1.0));
            assert!(e.matmul(&ei).approx_eq(&ComplexMatrix::identity(4), 1e-12));
            assert!(matrix_exp(&a.adjoint()).approx_eq(&e.adjoint(), 1e-12));
        }
    }

    #[test]
    fn exp_large_norm_against_eigen_route() {
        let mut r = rng(3);
        for _ in 0..10 {
            let h = random_hermitian(&mut r, 4, 1.0);
            let h = h.scale_re(40.0 / h.frobenius_norm());
            let via_taylor = matrix_exp(&h.scale(C64::new(0.0, -1.0)));
            let via_eigen = exp_i_hermitian(&h, 1.0);
            assert!(via_taylor.approx_eq(&via_eigen, 1e-11));
        }
    }

    #[test]
    fn polar_factor_cases() {
        let mut r = rng(4);
        let v = random_unitary(&mut r, 3);
        assert!(nearest_unitary(&v).unwrap().approx_eq(&v, 1e-12));
        let d = ComplexMatrix::diag_real(&[2.0, 1.0]);
        assert!(nearest_unitary(&d).unwrap().approx_eq(&ComplexMatrix::identity(2), 1e-14));
        let sing = ComplexMatrix::diag_real(&[1.0, 0.0]);
        assert!(matches!(nearest_unitary(&sing), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn polar_factor_is_closest_among_samples() {
        let mut r = rng(5);
        for _ in 0..10 {
            let m = random_matrix(&mut r, 3, 1.0);
            let u = nearest_unitary(&m).unwrap();
            let uu = u.adjoint().matmul(&u);
            assert!(uu.approx_eq(&ComplexMatrix::identity(3), 1e-12));
            let best = m.dist(&u);
            for _ in 0..200 {
                let w = random_unitary(&mut r, 3);
                assert!(m.dist(&w) >= best - 1e-12);
            }
            // also never beaten by small perturbations of the optimum
            for _ in 0..50 {
                let k = random_hermitian(&mut r, 3, 0.05);
                let w = u.matmul(&exp_i_hermitian(&k, 1.0));
                assert!(m.dist(&w) >= best - 1e-12);
            }
            let uu2 = nearest_unitary(&u).unwrap();
            assert!(uu2.approx_eq(&u, 1e-12));
        }
    }

    #[test]
    fn psd_sqrt_cases() {
        assert!(psd_sqrt(&ComplexMatrix::identity(3)).unwrap().approx_eq(&ComplexMatrix::identity(3), 1e-14));
        let b = ComplexMatrix::from_real_rows(&[
            [1.0, -1.0 / 3.0, -1.0 / 3.0],
            [-1.0 / 3.0, 1.0, -1.0 / 3.0],
            [-1.0 / 3.0, -1.0 / 3.0, 1.0],
        ]);
        let e = hermitian_eigen(&b);
        for (got, want) in e.values.iter().zip([1.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let s = psd_sqrt(&b).unwrap();
        let es = hermitian_eigen(&s);
        for (got, want) in es.values.iter().zip([(1.0f64 / 3.0).sqrt(), (4.0f64 / 3.0).sqrt(), (4.0f64 / 3.0).sqrt()]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(s.matmul(&s).approx_eq(&b, 1e-14));
        let bad = ComplexMatrix::diag_real(&[1.0, -1e-3]);
        assert!(matches!(psd_sqrt(&bad), Err(Error::NotPsd(_))));
        let dust = ComplexMatrix::diag_real(&[1.0, -1e-11]);
        assert!(psd_sqrt(&dust).is_ok());
    }

    #[test]
    fn unitary_eigen_recovers_phases() {
        let mut r = rng(6);
        for _ in 0..20 {
            let u = random_unitary(&mut r, 4);
            let (vals, vecs) = unitary_eigen(&u);
            let back = vecs.matmul(&ComplexMatrix::diag(&vals)).matmul(&vecs.adjoint());
            assert!(back.approx_eq(&u, 1e-12));
            assert!(vals.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }
}

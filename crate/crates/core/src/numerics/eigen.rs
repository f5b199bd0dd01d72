//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! The matrices in this crate are at most 16x16, where Jacobi is accurate to
//! working precision and produces an eigenvector basis that is unitary by
//! construction.

use num_complex::Complex64 as C64;

use super::matrix::{inner, ComplexMatrix};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
/// Eigenvalues closer than this (μeV for Hamiltonians) form one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let lambda = ComplexMatrix::diagonal(
            &self.eigenvalues.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>(),
        );
        &(v * &lambda) * &v.dagger()
    }
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let herm_err = m.hermiticity_error();
    if herm_err > HERMITIAN_TOL {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (relative deviation {herm_err:.3e})"
        )));
    }

    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.norm_fro();
    let threshold = f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged("Jacobi eigenvalue sweeps".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut columns: Vec<Vec<C64>> = order.iter().map(|&k| v.column(k)).collect();

    orthonormalize_clusters(&eigenvalues, &mut columns);

    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| columns[k][i]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// One Jacobi rotation annihilating `a[p, q]`, applied as `A ← J† A J`, `V ← V J`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // Columns of J: e_p -> c e_p - s conj(phase) e_q, e_q -> s phase e_p + c e_q.
    let jpp = C64::new(c, 0.0);
    let jqp = -phase.conj() * s;
    let jpq = phase * s;
    let jqq = C64::new(c, 0.0);

    let n = a.rows();
    // A J
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * jpp + aiq * jqp;
        a[(i, q)] = aip * jpq + aiq * jqq;
    }
    // J† (A J)
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = jpp.conj() * apj + jqp.conj() * aqj;
        a[(q, j)] = jpq.conj() * apj + jqq.conj() * aqj;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * jpp + viq * jqp;
        v[(i, q)] = vip * jpq + viq * jqq;
    }
}

/// Modified Gram-Schmidt inside each cluster of (near-)degenerate eigenvalues.
fn orthonormalize_clusters(eigenvalues: &[f64], columns: &mut [Vec<C64>]) {
    let mut start = 0;
    while start < eigenvalues.len() {
        let mut end = start + 1;
        while end < eigenvalues.len() && eigenvalues[end] - eigenvalues[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        for k in start..end {
            for j in start..k {
                let (done, rest) = columns.split_at_mut(k);
                let proj = inner(&done[j], &rest[0]);
                for (x, y) in rest[0].iter_mut().zip(&done[j]) {
                    *x -= proj * y;
                }
            }
            let norm = columns[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for x in columns[k].iter_mut() {
                *x /= norm;
            }
        }
        start = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::vec_norm;
    use proptest::prelude::*;

    fn real(n: usize, data: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(n, n, data).unwrap()
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = hermitian_eigen(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted_ascending() {
        let e = hermitian_eigen(&real(3, &[0.0, 0.0, 0.0, 0.0, 1000.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0, 0.0, 1000.0]);
    }

    #[test]
    fn resonant_driven_block_has_dark_zero_mode() {
        // det(λ - M) = λ (λ² - δλ - 2c²): exactly one root at 0 with kernel (1, 0, -1)/√2.
        let (c, delta) = (37.5, 1000.0);
        let m = real(3, &[0.0, c, 0.0, c, delta, c, 0.0, c, 0.0]);
        let e = hermitian_eigen(&m).unwrap();
        let k = e.eigenvalues.iter().position(|x| x.abs() < 1e-9).expect("zero eigenvalue");
        let v = e.vector(k);
        let expected = [1.0 / 2f64.sqrt(), 0.0, -1.0 / 2f64.sqrt()];
        let overlap: C64 = v.iter().zip(expected).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        let others: Vec<f64> = e.eigenvalues.iter().copied().filter(|x| x.abs() > 1e-9).collect();
        let disc = (delta * delta / 4.0 + 2.0 * c * c).sqrt();
        assert!((others[0] - (delta / 2.0 - disc)).abs() < 1e-9);
        assert!((others[1] - (delta / 2.0 + disc)).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(hermitian_eigen(&ComplexMatrix::zeros(2, 3)), Err(Error::InvalidInput(_))));
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = C64::new(0.0, 1.0);
        assert!(matches!(hermitian_eigen(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn degenerate_cluster_is_orthonormal() {
        let mut m = ComplexMatrix::identity(4).scale_real(2.0);
        m[(3, 3)] = C64::new(5.0, 0.0);
        m[(0, 1)] = C64::new(0.0, 1e-13);
        m[(1, 0)] = C64::new(0.0, -1e-13);
        let e = hermitian_eigen(&m).unwrap();
        let gram = &e.eigenvectors.dagger() * &e.eigenvectors;
        assert!((&gram - &ComplexMatrix::identity(4)).max_abs() < 1e-12);
    }

    fn hermitian_strategy() -> impl Strategy<Value = ComplexMatrix> {
        (1usize..=16).prop_flat_map(|n| {
            proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n * n).prop_map(move |raw| {
                let m = ComplexMatrix::from_fn(n, n, |i, j| C64::new(raw[i * n + j].0, raw[i * n + j].1));
                m.hermitian_part()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reconstructs_random_hermitian(m in hermitian_strategy()) {
            let e = hermitian_eigen(&m).unwrap();
            let norm = m.norm_fro().max(1e-300);
            prop_assert!((&e.reconstruct() - &m).norm_fro() <= 1e-10 * norm);
            let n = m.rows();
            let gram = &e.eigenvectors.dagger() * &e.eigenvectors;
            prop_assert!((&gram - &ComplexMatrix::identity(n)).max_abs() < 1e-10);
            for k in 0..n {
                let v = e.vector(k);
                let mv = m.matvec(&v);
                let resid: Vec<C64> = mv.iter().zip(&v).map(|(a, b)| a - b * e.eigenvalues[k]).collect();
                prop_assert!(vec_norm(&resid) <= 1e-10 * norm);
            }
            prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

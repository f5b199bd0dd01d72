use num_complex::Complex64 as C64;

use super::matrix::{vec_norm, ComplexMatrix};
use crate::error::{Error, Result};

/// Systems whose 1-norm condition estimate exceeds this are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// LU factorization with partial pivoting, `P A = L U`, packed in one matrix.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    lu: ComplexMatrix,
    pivots: Vec<usize>,
}

impl LuFactorization {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput(format!("LU needs a square matrix, got {}x{}", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut pivots: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            if p != k {
                pivots.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self { lu, pivots })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.rows();
        let mut x: Vec<C64> = self.pivots.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.lu.rows();
        let mut inv = ComplexMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// `‖A‖₁ ‖A⁻¹‖₁`, computed from an explicit inverse (the matrices here are tiny).
pub fn condition_estimate(a: &ComplexMatrix) -> Result<f64> {
    let lu = LuFactorization::new(a)?;
    let cond = a.norm_1() * lu.inverse().norm_1();
    Ok(if cond.is_finite() { cond } else { f64::INFINITY })
}

/// Solves `A x = b`, refusing systems with condition estimate above [`MAX_CONDITION`].
/// One step of iterative refinement is applied.
pub fn solve_linear(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!("solve needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if b.len() != a.rows() {
        return Err(Error::InvalidInput(format!("right-hand side has {} entries, expected {}", b.len(), a.rows())));
    }
    let lu = LuFactorization::new(a)?;
    let condition = a.norm_1() * lu.inverse().norm_1();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition });
    }
    let mut x = lu.solve(b);
    let ax = a.matvec(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    if vec_norm(&r) > 0.0 {
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &ComplexMatrix, x: &[C64], b: &[C64]) -> f64 {
        let ax = a.matvec(x);
        vec_norm(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>())
    }

    fn random_well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        // Diagonally dominant: condition bounded independent of the draw.
        let mut a = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        for i in 0..n {
            a[(i, i)] += C64::new(2.0 * n as f64, 0.0);
        }
        a
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0), C64::new(-3.0, 4.0)];
        let x = solve_linear(&ComplexMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn recovers_constructed_solution_16x16() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = random_well_conditioned(&mut rng, 16);
        let x_true: Vec<C64> = (0..16).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let b = a.matvec(&x_true);
        let x = solve_linear(&a, &b).unwrap();
        assert!(residual(&a, &x, &b) <= 1e-10 * vec_norm(&b));
        assert!(x.iter().zip(&x_true).all(|(p, q)| (p - q).norm() < 1e-12));
    }

    #[test]
    fn residual_bound_on_many_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=16);
            let a = random_well_conditioned(&mut rng, n);
            let b: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
            let x = solve_linear(&a, &b).unwrap();
            assert!(residual(&a, &x, &b) <= 1e-10 * vec_norm(&b));
        }
    }

    #[test]
    fn rank_deficient_is_singular() {
        let a = ComplexMatrix::from_real_rows(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]).unwrap();
        let err = solve_linear(&a, &[C64::new(1.0, 0.0); 3]).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn ill_conditioned_reports_condition() {
        let a = ComplexMatrix::from_real_rows(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]).unwrap();
        match solve_linear(&a, &[C64::new(1.0, 0.0); 2]) {
            Err(Error::Singular { condition }) => assert!(condition > MAX_CONDITION),
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}

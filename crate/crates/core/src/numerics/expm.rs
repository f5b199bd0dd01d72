use super::matrix::ComplexMatrix;
use super::ode::compose_offsets;
use crate::error::{Error, Result};

/// Norm the scaled matrix is brought below before summing the series.
const SCALED_NORM: f64 = 0.5;
const MAX_TERMS: usize = 40;

/// `exp(M)` by scaling and squaring around a truncated Taylor series.
///
/// The series is summed on `M / 2^s` with `‖M / 2^s‖₁ ≤ 1/2` until the next term
/// falls below `1e-18` relative to the partial sum, which bounds the truncation
/// error far below `1e-12`.
pub fn matrix_exponential(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(&ComplexMatrix::identity(m.rows()) + &exponential_offset(m)?)
}

/// `exp(M) − I`. Squaring acts on the offset, `(I + E)² = I + (2E + E²)`, so
/// round-off stays proportional to the offset.
pub fn exponential_offset(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!("exponential needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    if !m.all_finite() {
        return Err(Error::Numerical("non-finite entry in matrix exponential argument".into()));
    }
    let norm = m.norm_1();
    let squarings = if norm > SCALED_NORM { (norm / SCALED_NORM).log2().ceil() as u32 } else { 0 };
    let a = m.scale_real(0.5f64.powi(squarings as i32));

    let n = m.rows();
    let mut sum = ComplexMatrix::zeros(n, n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = (&term * &a).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.norm_1() <= 1e-18 * (1.0 + sum.norm_1()) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = compose_offsets(&sum, &sum);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    #[test]
    fn zero_gives_identity() {
        let e = matrix_exponential(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, ComplexMatrix::identity(3));
    }

    #[test]
    fn diagonal_exponentiates_entrywise() {
        let (a, b) = (C64::new(-1.5, 0.3), C64::new(2.0, -4.0));
        let e = matrix_exponential(&ComplexMatrix::diagonal(&[a, b])).unwrap();
        assert!((e[(0, 0)] - a.exp()).norm() < 1e-12 * a.exp().norm());
        assert!((e[(1, 1)] - b.exp()).norm() < 1e-12 * b.exp().norm());
        assert_eq!(e[(0, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn nilpotent_series_terminates() {
        let m = ComplexMatrix::from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let e = matrix_exponential(&m).unwrap();
        let expected = ComplexMatrix::from_real_rows(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((&e - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn large_norm_rotation() {
        // exp of i*θ*σ_x with θ = 1000 is cos θ I + i sin θ σ_x.
        let theta = 1000.0;
        let m = ComplexMatrix::from_rows(2, 2, vec![C64::new(0.0, 0.0), C64::new(0.0, theta), C64::new(0.0, theta), C64::new(0.0, 0.0)]).unwrap();
        let e = matrix_exponential(&m).unwrap();
        assert!((e[(0, 0)] - C64::new(theta.cos(), 0.0)).norm() < 1e-11);
        assert!((e[(0, 1)] - C64::new(0.0, theta.sin())).norm() < 1e-11);
    }

    #[test]
    fn rejects_non_square() {
        assert!(matrix_exponential(&ComplexMatrix::zeros(2, 3)).is_err());
    }
}

//! Dense complex matrix helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    assert_eq!(data.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| cx(data[i * cols + j], 0.0))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn diagonal(values: &[Complex64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { Complex64::zero() })
}

/// The standard symplectic form `[[0, I], [-I, 0]]` of size `2m`.
pub fn symplectic_form(size: usize) -> ComplexMatrix {
    assert!(size.is_multiple_of(2), "symplectic form needs even size");
    let m = size / 2;
    ComplexMatrix::from_fn(size, size, |i, j| {
        if i < m && j == i + m {
            Complex64::one()
        } else if i >= m && j + m == i {
            -Complex64::one()
        } else {
            Complex64::zero()
        }
    })
}

/// `f64::max` that propagates NaN, so a poisoned entry fails every
/// tolerance check instead of vanishing from the maximum.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, nan_max)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, nan_max)
}

/// `max |M - M^t|` (complex bilinear transpose, no conjugation).
pub fn symmetry_violation(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.transpose())
}

/// `max |S S^t - I|`.
pub fn orthogonality_violation(s: &ComplexMatrix) -> f64 {
    max_abs_diff(&(s * s.transpose()), &identity(s.nrows()))
}

pub fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.transpose()).scale(0.5)
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().copied().sum()
}

pub fn require_square(m: &ComplexMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `relative * largest`.
pub fn numerical_rank(m: &ComplexMatrix, relative: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > relative * top).count(),
        _ => 0,
    }
}

/// 2-norm condition number; infinite for singular or non-square input.
pub fn condition_number(m: &ComplexMatrix) -> f64 {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sv = singular_values(m);
    let smallest = *sv.last().unwrap();
    if smallest == 0.0 {
        f64::INFINITY
    } else {
        sv[0] / smallest
    }
}

pub fn determinant(m: &ComplexMatrix) -> Complex64 {
    if m.nrows() == 0 {
        return Complex64::one();
    }
    m.clone().lu().determinant()
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(m, "matrix")?;
    m.clone().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })
}

/// Solves `A x = b` by LU; fails on exact singularity only.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.clone().lu().solve(b).ok_or(Error::Singular { condition: f64::INFINITY })
}

/// Least-squares solution through the SVD with a relative rank cutoff.
/// Returns the solution and the numerical rank used.
pub fn least_squares(a: &ComplexMatrix, b: &ComplexMatrix, relative: f64) -> (ComplexMatrix, usize) {
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, nan_max);
    let eps = relative * top;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let x = svd.solve(b, eps.max(f64::MIN_POSITIVE)).unwrap_or_else(|_| ComplexMatrix::zeros(a.ncols(), b.ncols()));
    (x, rank)
}

/// Eigenvalues through the complex Schur form.
pub fn eigenvalues(m: &ComplexMatrix) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let (_, t) = m.clone().schur().unpack();
    t.diagonal().iter().copied().collect()
}

/// Greedy multiset matching distance between two spectra.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut remaining: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (idx, d) =
            remaining.iter().enumerate().map(|(i, y)| (i, (x - y).norm())).min_by(|p, q| p.1.total_cmp(&q.1)).unwrap();
        worst = worst.max(d);
        remaining.swap_remove(idx);
    }
    worst
}

/// Positive integer powers `[M, M^2, ..., M^k]` by repeated multiplication.
pub fn powers(m: &ComplexMatrix, k: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(k);
    if k == 0 {
        return out;
    }
    out.push(m.clone());
    for _ in 1..k {
        let next = out.last().unwrap() * m;
        out.push(next);
    }
    out
}

/// Row-major flattening used by serialization and vectorized rank tests.
pub fn vectorize(m: &ComplexMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symplectic_form_shape() {
        let j = symplectic_form(2);
        assert_eq!(j, real_matrix(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let j4 = symplectic_form(4);
        assert_eq!(&j4 * &j4, -identity(4));
    }

    #[test]
    fn rank_and_condition() {
        let m = real_matrix(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(numerical_rank(&m, 1e-8), 1);
        assert!(condition_number(&m) > 1e12);
        assert!((condition_number(&identity(3)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| if j >= i { cx((i + j + 1) as f64, 0.5) } else { cx(0.0, 0.0) });
        let ev = eigenvalues(&m);
        let expected: Vec<Complex64> = (0..3).map(|i| cx((2 * i + 1) as f64, 0.5)).collect();
        assert!(spectrum_distance(&ev, &expected) < 1e-10);
    }
}

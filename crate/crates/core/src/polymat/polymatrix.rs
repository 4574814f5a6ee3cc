use num_complex::Complex64;
use num_traits::{One, Zero};

use super::matrix::{determinant, require_square, ComplexMatrix};
use super::poly::Poly;
use crate::error::{Error, Result};

/// Largest size accepted by [`poly_matrix_det`]; the subset expansion is
/// exponential in the column count.
pub const MAX_POLY_DET_SIZE: usize = 12;

/// Matrix of univariate polynomials, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Poly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        PolyMatrix { rows, cols, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        PolyMatrix::from_fn(rows, cols, |_, _| Poly::zero())
    }

    pub fn from_constant(m: &ComplexMatrix) -> Self {
        PolyMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Poly::constant(m[(i, j)]))
    }

    /// `diag(p_0, ..., p_{n-1})`
    pub fn diagonal(polys: &[Poly]) -> Self {
        let n = polys.len();
        PolyMatrix::from_fn(n, n, |i, j| if i == j { polys[i].clone() } else { Poly::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Poly) {
        self.entries[i * self.cols + j] = p;
    }

    /// Largest entry degree (0 for an all-zero matrix).
    pub fn degree_bound(&self) -> usize {
        self.entries.iter().filter_map(Poly::degree).max().unwrap_or(0)
    }

    pub fn row_degree_bounds(&self) -> Vec<usize> {
        (0..self.rows).map(|i| (0..self.cols).filter_map(|j| self.get(i, j).degree()).max().unwrap_or(0)).collect()
    }

    pub fn eval(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(s))
    }

    pub fn hcat(&self, right: &PolyMatrix) -> Result<PolyMatrix> {
        if self.rows != right.rows {
            return Err(Error::Dimension(format!("cannot concatenate {} rows with {} rows", self.rows, right.rows)));
        }
        Ok(PolyMatrix::from_fn(self.rows, self.cols + right.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                right.get(i, j - self.cols).clone()
            }
        }))
    }

    pub fn vcat(&self, below: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != below.cols {
            return Err(Error::Dimension(format!("cannot stack {} columns on {} columns", self.cols, below.cols)));
        }
        Ok(PolyMatrix::from_fn(self.rows + below.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j).clone()
            } else {
                below.get(i - self.rows, j).clone()
            }
        }))
    }

    pub fn select_columns(&self, cols: &[usize]) -> PolyMatrix {
        PolyMatrix::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]).clone())
    }
}

/// Determinants of every `k x k` submatrix formed by the first `k` rows and a
/// column subset, for all `k` up to `rows`. Indexed by column bitmask.
///
/// Each entry expands along its last row into entries with one fewer column,
/// so only additions and multiplications occur: no division, no pivoting.
fn leading_row_minors(m: &PolyMatrix) -> Vec<Poly> {
    let cols = m.cols();
    let mut table = vec![Poly::zero(); 1 << cols];
    table[0] = Poly::one();
    for mask in 1usize..(1 << cols) {
        let k = mask.count_ones() as usize;
        if k > m.rows() {
            continue;
        }
        let row = k - 1;
        let mut acc = Poly::zero();
        let mut position = 0;
        for j in 0..cols {
            if mask & (1 << j) == 0 {
                continue;
            }
            let entry = m.get(row, j);
            if !entry.is_zero() {
                let minor = &table[mask & !(1 << j)];
                if !minor.is_zero() {
                    let term = entry * minor;
                    // (-1)^(row + position) with row = k - 1
                    acc = if (row + position).is_multiple_of(2) { &acc + &term } else { &acc - &term };
                }
            }
            position += 1;
        }
        table[mask] = acc;
    }
    table
}

/// Determinant of a square polynomial matrix by exact cofactor expansion.
pub fn poly_matrix_det(m: &PolyMatrix) -> Result<Poly> {
    if m.rows() != m.cols() {
        return Err(Error::Dimension(format!("determinant needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    if m.rows() > MAX_POLY_DET_SIZE {
        return Err(Error::Scale(format!(
            "polynomial determinant limited to size {MAX_POLY_DET_SIZE}, got {}",
            m.rows()
        )));
    }
    if m.rows() == 0 {
        return Ok(Poly::one());
    }
    let table = leading_row_minors(m);
    Ok(table[(1 << m.cols()) - 1].clone())
}

/// Characteristic polynomial `det(sI - A)`, monic of degree `size(A)`.
///
/// Reduces to upper Hessenberg form by a unitary similarity, then runs the
/// standard Hessenberg determinant recurrence.
pub fn charpoly(a: &ComplexMatrix) -> Result<Poly> {
    let n = require_square(a, "charpoly input")?;
    if n == 0 {
        return Ok(Poly::one());
    }
    let h = a.clone().hessenberg().unpack_h();
    // p[k] = charpoly of the leading k x k block
    let mut p: Vec<Vec<Complex64>> = Vec::with_capacity(n + 1);
    p.push(vec![Complex64::one()]);
    for k in 1..=n {
        let hk = k - 1;
        let prev = &p[k - 1];
        let mut next = vec![Complex64::zero(); k + 1];
        for (d, &c) in prev.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= h[(hk, hk)] * c;
        }
        let mut sub_product = Complex64::one();
        for i in (0..hk).rev() {
            sub_product *= h[(i + 1, i)];
            let factor = sub_product * h[(i, hk)];
            if factor == Complex64::zero() {
                continue;
            }
            for (d, &c) in p[i].iter().enumerate() {
                next[d] -= factor * c;
            }
        }
        p.push(next);
    }
    let mut coeffs = p.pop().unwrap();
    coeffs[n] = Complex64::one();
    Ok(Poly::from_raw(coeffs))
}

/// All ascending `k`-tuples drawn from `0..m`, in lexicographic order.
pub fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..m).combinations(k).collect()
}

/// Position of an ascending tuple in [`combinations`] order.
pub fn combination_index(m: usize, tuple: &[usize]) -> Option<usize> {
    combinations(m, tuple.len()).iter().position(|t| t == tuple)
}

/// Maximal minors of a constant `k x cols` matrix, lexicographic in the
/// ascending column tuple.
pub fn full_size_minors(m: &ComplexMatrix, k: usize) -> Result<Vec<Complex64>> {
    check_minor_shape(m.nrows(), m.ncols(), k)?;
    Ok(combinations(m.ncols(), k)
        .into_iter()
        .map(|cols| {
            let sub = ComplexMatrix::from_fn(k, k, |i, j| m[(i, cols[j])]);
            determinant(&sub)
        })
        .collect())
}

/// Maximal minors of a polynomial `k x cols` matrix in the same order.
pub fn full_size_poly_minors(m: &PolyMatrix, k: usize) -> Result<Vec<Poly>> {
    check_minor_shape(m.rows(), m.cols(), k)?;
    if m.cols() > 2 * MAX_POLY_DET_SIZE {
        return Err(Error::Scale(format!("too many columns for minor expansion: {}", m.cols())));
    }
    let table = leading_row_minors(m);
    Ok(combinations(m.cols(), k)
        .into_iter()
        .map(|cols| table[cols.iter().fold(0usize, |acc, &c| acc | (1 << c))].clone())
        .collect())
}

fn check_minor_shape(rows: usize, cols: usize, k: usize) -> Result<()> {
    if k != rows || cols < k {
        return Err(Error::Dimension(format!(
            "maximal minors of order {k} need {k} rows and at least {k} columns, got {rows}x{cols}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::matrix::{cx, identity, real_matrix};

    fn s() -> Poly {
        Poly::from_real(&[0.0, 1.0])
    }

    #[test]
    fn det_rotation_like() {
        let one = Poly::one();
        let m = PolyMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => s(),
            (0, 1) => one.clone(),
            _ => -&one,
        });
        assert_eq!(poly_matrix_det(&m).unwrap(), Poly::from_real(&[1.0, 0.0, 1.0]));
    }

    #[test]
    fn det_diagonal_powers() {
        let m = PolyMatrix::diagonal(&[s(), &s() * &s(), &(&s() * &s()) * &s()]);
        assert_eq!(poly_matrix_det(&m).unwrap(), Poly::monomial(cx(1.0, 0.0), 6));
    }

    #[test]
    fn det_rejects_rectangular() {
        assert!(matches!(poly_matrix_det(&PolyMatrix::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn charpoly_small_cases() {
        assert_eq!(charpoly(&ComplexMatrix::zeros(2, 2)).unwrap(), Poly::from_real(&[0.0, 0.0, 1.0]).clone());
        let p = charpoly(&real_matrix(2, 2, &[1.0, 0.0, 0.0, 2.0])).unwrap();
        assert!(p.max_coeff_diff(&Poly::from_real(&[2.0, -3.0, 1.0])) < 1e-14);
        assert!(charpoly(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn minors_of_identity_block() {
        let m = ComplexMatrix::from_fn(2, 4, |i, j| if i == j { cx(1.0, 0.0) } else { cx(0.0, 0.0) });
        let minors = full_size_minors(&m, 2).unwrap();
        assert_eq!(minors.len(), 6);
        assert_eq!(minors[0], cx(1.0, 0.0));
        assert!(minors[1..].iter().all(|c| c.norm() == 0.0));
        assert!(full_size_minors(&m, 3).is_err());
    }

    #[test]
    fn minors_of_symmetric_gain_block() {
        let (a, b, c) = (cx(2.0, 1.0), cx(-1.0, 0.5), cx(0.3, 0.0));
        let f = ComplexMatrix::from_row_slice(2, 2, &[a, b, b, c]);
        let mut m = ComplexMatrix::zeros(2, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&f);
        m.view_mut((0, 2), (2, 2)).copy_from(&identity(2));
        let minors = full_size_minors(&m, 2).unwrap();
        assert!((minors[0] - (a * c - b * b)).norm() < 1e-14);
        assert!((minors[5] - cx(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn combination_order_is_lexicographic() {
        assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combination_index(4, &[1, 3]), Some(4));
    }
}

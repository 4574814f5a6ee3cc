//! Complex symmetric and Hamiltonian realizations.
//!
//! A symmetric realization has `A = A^t` and output map `B^t`; a Hamiltonian
//! realization has `AJ = (AJ)^t` and `C^t = JB` for the standard symplectic
//! form `J`. Minimal realizations of a symmetric transfer function are related
//! by a unique similarity, which is symmetric when it maps a realization to its
//! transpose; factoring it as `X X^t` yields the symmetric realization.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::polymat::{
    identity, inverse, least_squares, max_abs, max_abs_diff, nan_max, numerical_rank, singular_values, solve,
    symmetrize, symmetry_violation, symplectic_form, ComplexMatrix,
};

/// Tolerance for the structural identities of stored systems.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Relative singular-value cutoff used for every rank decision here.
pub const RANK_RELATIVE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
}

impl StateSpace {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix) -> Result<Self> {
        let delta = a.nrows();
        if delta == 0 || a.ncols() != delta {
            return Err(Error::Dimension(format!("A must be square and nonempty, got {}x{}", a.nrows(), a.ncols())));
        }
        let n = b.ncols();
        if n == 0 || b.nrows() != delta || c.nrows() != n || c.ncols() != delta {
            return Err(Error::Dimension(format!(
                "inconsistent realization: A {delta}x{delta}, B {}x{}, C {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(StateSpace { a, b, c })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// `(A^t, C^t, B^t)`, again a realization of `G(s)^t`.
    pub fn dual(&self) -> StateSpace {
        StateSpace { a: self.a.transpose(), b: self.c.transpose(), c: self.b.transpose() }
    }

    /// `T A T^-1, T B, C T^-1`
    pub fn transform(&self, t: &ComplexMatrix) -> Result<StateSpace> {
        let t_inv = inverse(t)?;
        Ok(StateSpace { a: t * &self.a * &t_inv, b: t * &self.b, c: &self.c * &t_inv })
    }

    pub fn markov_parameters(&self, count: usize) -> Vec<ComplexMatrix> {
        markov_parameters(&self.a, &self.b, &self.c, count)
    }

    /// `G(s) = C (sI - A)^-1 B`
    pub fn transfer_at(&self, s: Complex64) -> Result<ComplexMatrix> {
        transfer_at(&self.a, &self.b, &self.c, s)
    }
}

/// `C A^k B` for `k = 0..count`.
pub fn markov_parameters(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix, count: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(count);
    let mut ak_b = b.clone();
    for _ in 0..count {
        out.push(c * &ak_b);
        ak_b = a * &ak_b;
    }
    out
}

pub fn transfer_at(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix, s: Complex64) -> Result<ComplexMatrix> {
    let resolvent = identity(a.nrows()) * s - a;
    Ok(c * solve(&resolvent, b)?)
}

/// Largest relative deviation between two Markov sequences.
pub fn markov_distance(lhs: &[ComplexMatrix], rhs: &[ComplexMatrix]) -> f64 {
    lhs.iter().zip(rhs).map(|(x, y)| max_abs_diff(x, y) / max_abs(y).max(1.0)).fold(0.0, nan_max)
}

/// `x' = A x + B u, y = B^t x` with `A = A^t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSystem {
    a: ComplexMatrix,
    b: ComplexMatrix,
}

impl SymmetricSystem {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        StateSpace::new(a.clone(), b.clone(), b.transpose())?;
        let violation = symmetry_violation(&a);
        if violation >= STRUCTURE_TOL {
            return Err(Error::Asymmetric { violation });
        }
        Ok(SymmetricSystem { a, b })
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn c(&self) -> ComplexMatrix {
        self.b.transpose()
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn to_state_space(&self) -> StateSpace {
        StateSpace { a: self.a.clone(), b: self.b.clone(), c: self.c() }
    }
}

/// `x' = A x + B u, y = C x` with `AJ = (AJ)^t` and `C^t = JB`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSystem {
    a: ComplexMatrix,
    b: ComplexMatrix,
    c: ComplexMatrix,
}

impl HamiltonianSystem {
    /// Validated constructor.
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix) -> Result<Self> {
        let sys = HamiltonianSystem::new_unchecked(a, b, c)?;
        let report = validate_hamiltonian(&sys);
        if !report.passes {
            return Err(Error::Precondition(format!("not a Hamiltonian realization: {report:?}")));
        }
        Ok(sys)
    }

    /// Checks dimensions only; use [`validate_hamiltonian`] for the structure.
    pub fn new_unchecked(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix) -> Result<Self> {
        StateSpace::new(a.clone(), b.clone(), c.clone())?;
        Ok(HamiltonianSystem { a, b, c })
    }

    /// Output map determined by `C = (JB)^t`.
    pub fn from_input_map(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        if !a.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!("Hamiltonian state dimension must be even, got {}", a.nrows())));
        }
        let c = (symplectic_form(a.nrows()) * &b).transpose();
        HamiltonianSystem::new(a, b, c)
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn to_state_space(&self) -> StateSpace {
        StateSpace { a: self.a.clone(), b: self.b.clone(), c: self.c.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianReport {
    pub even_dimension: bool,
    /// `max |AJ - (AJ)^t|`
    pub aj_violation: f64,
    /// `max |C^t - JB|`
    pub output_violation: f64,
    pub passes: bool,
}

pub fn validate_hamiltonian(sys: &HamiltonianSystem) -> HamiltonianReport {
    let delta = sys.state_dim();
    let even_dimension = delta.is_multiple_of(2);
    if !even_dimension {
        return HamiltonianReport {
            even_dimension,
            aj_violation: f64::INFINITY,
            output_violation: f64::INFINITY,
            passes: false,
        };
    }
    let j = symplectic_form(delta);
    let aj_violation = symmetry_violation(&(&sys.a * &j));
    let output_violation = max_abs_diff(&sys.c.transpose(), &(&j * &sys.b));
    HamiltonianReport {
        even_dimension,
        aj_violation,
        output_violation,
        passes: aj_violation < STRUCTURE_TOL && output_violation < STRUCTURE_TOL,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimalityReport {
    pub minimal: bool,
    pub controllability_rank: usize,
    pub observability_rank: usize,
    pub state_dim: usize,
}

pub fn controllability_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let delta = a.nrows();
    let n = b.ncols();
    let mut out = ComplexMatrix::zeros(delta, delta * n);
    let mut block = b.clone();
    for k in 0..delta {
        out.view_mut((0, k * n), (delta, n)).copy_from(&block);
        block = a * &block;
    }
    out
}

pub fn observability_matrix(a: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    controllability_matrix(&a.transpose(), &c.transpose()).transpose()
}

/// Kalman rank test on controllability and observability matrices.
pub fn is_minimal(sys: &StateSpace) -> MinimalityReport {
    let controllability_rank = numerical_rank(&controllability_matrix(&sys.a, &sys.b), RANK_RELATIVE);
    let observability_rank = numerical_rank(&observability_matrix(&sys.a, &sys.c), RANK_RELATIVE);
    let state_dim = sys.state_dim();
    MinimalityReport {
        minimal: controllability_rank == state_dim && observability_rank == state_dim,
        controllability_rank,
        observability_rank,
        state_dim,
    }
}

/// Residual tolerance accepted for an intertwiner.
pub const INTERTWINER_TOL: f64 = 1e-8;

/// The unique `S` with `(A2, B2, C2) = (S A1 S^-1, S B1, C1 S^-1)`.
///
/// Solves the linear system `S A1 = A2 S, S B1 = B2, C1 = C2 S` in the
/// entries of `S` by least squares.
pub fn solve_intertwiner(sys1: &StateSpace, sys2: &StateSpace) -> Result<ComplexMatrix> {
    let delta = sys1.state_dim();
    let n = sys1.input_dim();
    if sys2.state_dim() != delta || sys2.input_dim() != n || sys1.c.nrows() != sys2.c.nrows() {
        return Err(Error::Dimension("systems must share state and input dimensions".into()));
    }
    let outputs = sys1.c.nrows();
    let unknowns = delta * delta;
    let equations = delta * delta + delta * n + outputs * delta;
    let mut m = ComplexMatrix::zeros(equations, unknowns);
    let mut rhs = ComplexMatrix::zeros(equations, 1);
    let idx = |p: usize, q: usize| p * delta + q;
    let mut row = 0;
    // S A1 - A2 S = 0
    for i in 0..delta {
        for j in 0..delta {
            for q in 0..delta {
                m[(row, idx(i, q))] += sys1.a[(q, j)];
            }
            for p in 0..delta {
                m[(row, idx(p, j))] -= sys2.a[(i, p)];
            }
            row += 1;
        }
    }
    // S B1 = B2
    for i in 0..delta {
        for j in 0..n {
            for q in 0..delta {
                m[(row, idx(i, q))] += sys1.b[(q, j)];
            }
            rhs[(row, 0)] = sys2.b[(i, j)];
            row += 1;
        }
    }
    // C2 S = C1
    for i in 0..outputs {
        for j in 0..delta {
            for p in 0..delta {
                m[(row, idx(p, j))] += sys2.c[(i, p)];
            }
            rhs[(row, 0)] = sys1.c[(i, j)];
            row += 1;
        }
    }

    let (x, rank) = least_squares(&m, &rhs, RANK_RELATIVE);
    if rank < unknowns {
        return Err(Error::NonUnique { rank, unknowns });
    }
    let s = ComplexMatrix::from_fn(delta, delta, |p, q| x[(idx(p, q), 0)]);

    let residual = max_abs(&(&s * &sys1.a - &sys2.a * &s))
        .max(max_abs(&(&s * &sys1.b - &sys2.b)))
        .max(max_abs(&(&sys2.c * &s - &sys1.c)));
    let scale = [&sys1.a, &sys1.b, &sys1.c, &sys2.a, &sys2.b, &sys2.c].iter().map(|x| max_abs(x)).fold(1.0, f64::max)
        * max_abs(&s).max(1.0);
    let relative = residual / scale;
    if relative >= INTERTWINER_TOL {
        return Err(Error::NoIntertwiner { residual: relative });
    }
    Ok(s)
}

/// Condition number above which [`factor_symmetric`] refuses its input.
pub const FACTOR_MAX_CONDITION: f64 = 1e8;

/// Bunch-Kaufman pivot threshold `(1 + sqrt 17) / 8`.
const PIVOT_ALPHA: f64 = 0.640_388_203_202_208;

/// Writes a complex symmetric invertible `S` as `X X^t`.
///
/// Symmetric (bilinear) LDL^t with 1x1 and 2x2 pivots, followed by square
/// roots of the block-diagonal factor. Square roots use the principal branch.
pub fn factor_symmetric(s: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = s.nrows();
    if n == 0 || s.ncols() != n {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", s.nrows(), s.ncols())));
    }
    let scale = max_abs(s);
    let violation = symmetry_violation(s);
    if violation > STRUCTURE_TOL * scale.max(1.0) {
        return Err(Error::Asymmetric { violation });
    }
    let sv = singular_values(s);
    let condition = if *sv.last().unwrap() == 0.0 { f64::INFINITY } else { sv[0] / sv.last().unwrap() };
    if condition >= FACTOR_MAX_CONDITION {
        return Err(Error::Singular { condition });
    }

    let mut w = symmetrize(s);
    let mut l = identity(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut blocks: Vec<(usize, usize)> = Vec::new();

    let swap =
        |w: &mut ComplexMatrix, l: &mut ComplexMatrix, perm: &mut Vec<usize>, k: usize, r: usize, done: usize| {
            if k == r {
                return;
            }
            w.swap_rows(k, r);
            w.swap_columns(k, r);
            perm.swap(k, r);
            for c in 0..done {
                let tmp = l[(k, c)];
                l[(k, c)] = l[(r, c)];
                l[(r, c)] = tmp;
            }
        };

    let mut k = 0;
    while k < n {
        let (r, diag_max) =
            (k..n).map(|i| (i, w[(i, i)].norm())).max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0))).unwrap();
        let mut off_max = 0.0;
        let mut off_at = (k, k);
        for i in k..n {
            for j in (i + 1)..n {
                if w[(i, j)].norm() > off_max {
                    off_max = w[(i, j)].norm();
                    off_at = (i, j);
                }
            }
        }

        if diag_max > 0.0 && (diag_max >= PIVOT_ALPHA * off_max || k + 1 == n) {
            swap(&mut w, &mut l, &mut perm, k, r, k);
            let d = w[(k, k)];
            if d == Complex64::zero() {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            for i in (k + 1)..n {
                l[(i, k)] = w[(i, k)] / d;
            }
            for i in (k + 1)..n {
                for j in (k + 1)..n {
                    let update = l[(i, k)] * d * l[(j, k)];
                    w[(i, j)] -= update;
                }
            }
            blocks.push((k, 1));
            k += 1;
        } else {
            if off_max == 0.0 {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            let (p, q) = off_at;
            swap(&mut w, &mut l, &mut perm, k, p, k);
            swap(&mut w, &mut l, &mut perm, k + 1, q, k);
            let e = w.view((k, k), (2, 2)).into_owned();
            let e_inv = inverse(&e)?;
            for i in (k + 2)..n {
                let row = w.view((i, k), (1, 2)).into_owned();
                let li = &row * &e_inv;
                l[(i, k)] = li[(0, 0)];
                l[(i, k + 1)] = li[(0, 1)];
            }
            for i in (k + 2)..n {
                for j in (k + 2)..n {
                    let li = ComplexMatrix::from_row_slice(1, 2, &[l[(i, k)], l[(i, k + 1)]]);
                    let wj = ComplexMatrix::from_row_slice(2, 1, &[w[(k, j)], w[(k + 1, j)]]);
                    let update = (&li * &wj)[(0, 0)];
                    w[(i, j)] -= update;
                }
            }
            blocks.push((k, 2));
            k += 2;
        }
    }

    let mut y = ComplexMatrix::zeros(n, n);
    for &(start, size) in &blocks {
        if size == 1 {
            y[(start, start)] = principal_sqrt(w[(start, start)]);
        } else {
            let e = w.view((start, start), (2, 2)).into_owned();
            y.view_mut((start, start), (2, 2)).copy_from(&factor_two_by_two(&e));
        }
    }

    let ly = &l * &y;
    let mut x = ComplexMatrix::zeros(n, n);
    for (i, &target) in perm.iter().enumerate() {
        x.row_mut(target).copy_from(&ly.row(i));
    }

    let residual = max_abs_diff(&(&x * x.transpose()), s);
    if residual >= 1e-8 * scale {
        return Err(Error::ConstructionFailed(format!("symmetric factorization residual {residual:.3e}")));
    }
    Ok(x)
}

/// Principal square root, ties on the branch cut broken toward positive real part.
fn principal_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.re < 0.0 || (r.re == 0.0 && r.im < 0.0) {
        -r
    } else {
        r
    }
}

/// `Y` with `Y Y^t = E` for an invertible symmetric 2x2 block whose diagonal is
/// small against its off-diagonal. Conjugating by the Hadamard reflection moves
/// the off-diagonal weight onto the diagonal, where a 1x1 pivot applies.
fn factor_two_by_two(e: &ComplexMatrix) -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = ComplexMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    );
    let mut g = &hadamard * e * &hadamard;
    let swapped = g[(1, 1)].norm() > g[(0, 0)].norm();
    if swapped {
        g.swap_rows(0, 1);
        g.swap_columns(0, 1);
    }
    let d1 = g[(0, 0)];
    let l = g[(1, 0)] / d1;
    let d2 = g[(1, 1)] - l * l * d1;
    let mut y = ComplexMatrix::from_row_slice(
        2,
        2,
        &[principal_sqrt(d1), Complex64::zero(), l * principal_sqrt(d1), principal_sqrt(d2)],
    );
    if swapped {
        y.swap_rows(0, 1);
    }
    &hadamard * y
}

/// Horizon `2 delta - 1` over which Markov parameters are compared.
pub fn markov_horizon(delta: usize) -> usize {
    2 * delta
}

pub const MARKOV_SYMMETRY_TOL: f64 = 1e-8;

/// Converts a minimal realization of a symmetric transfer function into a
/// complex symmetric realization with the same Markov parameters.
pub fn symmetrize_realization(sys: &StateSpace) -> Result<SymmetricSystem> {
    let report = is_minimal(sys);
    if !report.minimal {
        return Err(Error::NotMinimal {
            controllability: report.controllability_rank,
            observability: report.observability_rank,
            state_dim: report.state_dim,
        });
    }
    let horizon = markov_horizon(sys.state_dim());
    let markov = sys.markov_parameters(horizon);
    let violation = markov.iter().map(|m| symmetry_violation(m) / max_abs(m).max(1.0)).fold(0.0, nan_max);
    if violation >= MARKOV_SYMMETRY_TOL {
        return Err(Error::NotSymmetricTransfer { violation });
    }

    // (A^t, C^t, B^t) = (S A S^-1, S B, C S^-1) with S = S^t
    let s = symmetrize(&solve_intertwiner(sys, &sys.dual())?);
    // S = X X^t; the change of basis T = X^t makes T A T^-1 symmetric.
    let x = factor_symmetric(&s)?;
    let transformed = sys.transform(&x.transpose())?;
    let a = symmetrize(&transformed.a);
    let out = SymmetricSystem::new(a, transformed.b)?;

    let check = out.to_state_space().markov_parameters(horizon);
    let drift = markov_distance(&check, &markov);
    if drift >= 1e-6 {
        return Err(Error::ConstructionFailed(format!("Markov parameters drifted by {drift:.3e}")));
    }
    Ok(out)
}

/// Hamiltonian realization of `G(s^2)` from a symmetric realization of `G`:
/// states `(x, x')` with `x'' = A x + B u`, `y = B^t x`.
pub fn hamiltonian_from_symmetric(sys: &SymmetricSystem) -> HamiltonianSystem {
    let d = sys.state_dim();
    let n = sys.input_dim();
    let mut a = ComplexMatrix::zeros(2 * d, 2 * d);
    a.view_mut((0, d), (d, d)).copy_from(&identity(d));
    a.view_mut((d, 0), (d, d)).copy_from(sys.a());
    let mut b = ComplexMatrix::zeros(2 * d, n);
    b.view_mut((d, 0), (d, n)).copy_from(sys.b());
    let mut c = ComplexMatrix::zeros(n, 2 * d);
    c.view_mut((0, 0), (n, d)).copy_from(&sys.b().transpose());
    HamiltonianSystem { a, b, c }
}

/// The block construction `A = S^t D S` with `S = diag(S1, S1)`,
/// `D = [[0, D1], [D1, 0]]`, `B = [0; B1]`, `C = [B1^t, 0]`, for an orthogonal
/// `S1` and diagonal `D1`.
pub fn block_hamiltonian(s1: &ComplexMatrix, d1: &[Complex64], b1: &ComplexMatrix) -> Result<HamiltonianSystem> {
    let half = d1.len();
    if s1.nrows() != half || s1.ncols() != half || b1.nrows() != half {
        return Err(Error::Dimension("block Hamiltonian pieces must share the half dimension".into()));
    }
    let n = b1.ncols();
    let mut s = ComplexMatrix::zeros(2 * half, 2 * half);
    s.view_mut((0, 0), (half, half)).copy_from(s1);
    s.view_mut((half, half), (half, half)).copy_from(s1);
    let mut d = ComplexMatrix::zeros(2 * half, 2 * half);
    for (i, &v) in d1.iter().enumerate() {
        d[(i, half + i)] = v;
        d[(half + i, i)] = v;
    }
    let a = s.transpose() * d * &s;
    let mut b = ComplexMatrix::zeros(2 * half, n);
    b.view_mut((half, 0), (half, n)).copy_from(b1);
    let mut c = ComplexMatrix::zeros(n, 2 * half);
    c.view_mut((0, 0), (n, half)).copy_from(&b1.transpose());
    HamiltonianSystem::new(a, b, c)
}

/// Complex Givens rotation acting on coordinates `(i, j)`; orthogonal for any
/// complex angle since `cos^2 + sin^2 = 1`.
pub fn givens(size: usize, i: usize, j: usize, angle: Complex64) -> ComplexMatrix {
    let mut g = identity(size);
    let (c, s) = (angle.cos(), angle.sin());
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = -s;
    g[(j, i)] = s;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::{charpoly, cx, diagonal, orthogonality_violation, real_matrix};
    use crate::rng::{complex_normal_matrix, complex_symmetric_matrix, phase_rng};

    #[test]
    fn scalar_integrator_is_minimal() {
        let sys =
            StateSpace::new(real_matrix(1, 1, &[0.0]), real_matrix(1, 1, &[1.0]), real_matrix(1, 1, &[1.0])).unwrap();
        assert!(is_minimal(&sys).minimal);
    }

    #[test]
    fn repeated_eigenvalue_single_input_is_not_minimal() {
        let sys = StateSpace::new(identity(2), real_matrix(2, 1, &[1.0, 1.0]), real_matrix(1, 2, &[1.0, 1.0])).unwrap();
        let report = is_minimal(&sys);
        assert!(!report.minimal);
        assert_eq!(report.controllability_rank, 1);
    }

    #[test]
    fn dimension_errors() {
        assert!(StateSpace::new(identity(2), identity(3), identity(2)).is_err());
        assert!(matches!(
            SymmetricSystem::new(real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]), identity(2)),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn intertwiner_of_identical_systems_is_identity() {
        let mut rng = phase_rng(1, "test");
        let a = complex_symmetric_matrix(&mut rng, 3);
        let b = complex_normal_matrix(&mut rng, 3, 2);
        let sys = SymmetricSystem::new(a, b).unwrap().to_state_space();
        let s = solve_intertwiner(&sys, &sys).unwrap();
        assert!(max_abs_diff(&s, &identity(3)) < 1e-8);
    }

    #[test]
    fn intertwiner_rejects_non_minimal() {
        let sys = StateSpace::new(identity(2), real_matrix(2, 1, &[1.0, 1.0]), real_matrix(1, 2, &[1.0, 1.0])).unwrap();
        assert!(matches!(solve_intertwiner(&sys, &sys), Err(Error::NonUnique { .. })));
    }

    #[test]
    fn intertwiner_rejects_unrelated_systems() {
        let mut rng = phase_rng(2, "test");
        let s1 = StateSpace::new(
            complex_normal_matrix(&mut rng, 2, 2),
            complex_normal_matrix(&mut rng, 2, 1),
            complex_normal_matrix(&mut rng, 1, 2),
        )
        .unwrap();
        let s2 = StateSpace::new(
            complex_normal_matrix(&mut rng, 2, 2),
            complex_normal_matrix(&mut rng, 2, 1),
            complex_normal_matrix(&mut rng, 1, 2),
        )
        .unwrap();
        assert!(matches!(solve_intertwiner(&s1, &s2), Err(Error::NoIntertwiner { .. })));
    }

    #[test]
    fn factor_identity_and_diagonal() {
        let x = factor_symmetric(&identity(3)).unwrap();
        assert!(max_abs_diff(&(&x * x.transpose()), &identity(3)) < 1e-14);
        let s = diagonal(&[cx(4.0, 0.0), cx(9.0, 0.0)]);
        let x = factor_symmetric(&s).unwrap();
        assert!(max_abs_diff(&(&x * x.transpose()), &s) < 1e-14);
    }

    #[test]
    fn factor_zero_diagonal_needs_two_by_two_pivot() {
        let s = real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let x = factor_symmetric(&s).unwrap();
        assert!(max_abs_diff(&(&x * x.transpose()), &s) < 1e-14);
        let s4 = real_matrix(4, 4, &[0., 2., 0., 0., 2., 0., 0., 0., 0., 0., 0., -1., 0., 0., -1., 0.]);
        let x = factor_symmetric(&s4).unwrap();
        assert!(max_abs_diff(&(&x * x.transpose()), &s4) < 1e-13);
    }

    #[test]
    fn factor_errors() {
        assert!(matches!(factor_symmetric(&real_matrix(2, 2, &[1.0, 2.0, 0.0, 1.0])), Err(Error::Asymmetric { .. })));
        assert!(matches!(factor_symmetric(&real_matrix(2, 2, &[1.0, 1.0, 1.0, 1.0])), Err(Error::Singular { .. })));
    }

    #[test]
    fn hamiltonian_examples() {
        let b = real_matrix(2, 1, &[0.0, 1.0]);
        let swap = HamiltonianSystem::from_input_map(real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]), b.clone()).unwrap();
        assert!(validate_hamiltonian(&swap).passes);
        let c = (symplectic_form(2) * &b).transpose();
        let bad = HamiltonianSystem::new_unchecked(identity(2), b, c).unwrap();
        let report = validate_hamiltonian(&bad);
        assert!(!report.passes);
        assert!((report.aj_violation - 2.0).abs() < 1e-15);
    }

    #[test]
    fn block_hamiltonian_is_valid_and_even() {
        let mut rng = phase_rng(3, "test");
        let s1 = givens(3, 0, 1, cx(0.4, 0.2)) * givens(3, 1, 2, cx(-1.1, 0.3));
        assert!(orthogonality_violation(&s1) < 1e-14);
        let d1 = [cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0)];
        let b1 = complex_normal_matrix(&mut rng, 3, 2);
        let sys = block_hamiltonian(&s1, &d1, &b1).unwrap();
        assert!(validate_hamiltonian(&sys).passes);
        assert!(charpoly(sys.a()).unwrap().odd_relative() < 1e-9);
    }

    #[test]
    fn squared_symmetric_system_is_hamiltonian() {
        let mut rng = phase_rng(4, "test");
        let sym =
            SymmetricSystem::new(complex_symmetric_matrix(&mut rng, 3), complex_normal_matrix(&mut rng, 3, 2)).unwrap();
        let ham = hamiltonian_from_symmetric(&sym);
        assert!(validate_hamiltonian(&ham).passes);
        let s = cx(0.7, 0.3);
        let g = sym.to_state_space().transfer_at(s * s).unwrap();
        let h = ham.to_state_space().transfer_at(s).unwrap();
        assert!(max_abs_diff(&g, &h) < 1e-10);
    }
}

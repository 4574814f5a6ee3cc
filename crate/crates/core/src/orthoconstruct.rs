//! Orthogonal conjugations and the diagonal projection.
//!
//! For symmetric `L`, `theta_L(S) = diag(S L S^-1)` on the complex orthogonal
//! group has derivative `X -> diag(XL - LX)` on skew-symmetric `X`, landing in
//! the trace-zero hyperplane. It is onto exactly when the off-diagonal pattern
//! graph of `L` is connected. This module makes that statement executable,
//! repairs disconnected graphs with plane rotations, and builds an orthogonal
//! `S` for which the diagonal projection is a bijection on `S L S^-1`.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::polymat::{
    identity, least_squares, max_abs, nan_max, numerical_rank, singular_values, symmetry_violation, trace, vectorize,
    ComplexMatrix,
};
use crate::realization::givens;

/// Relative threshold for an off-diagonal entry to count as a graph edge.
pub const EDGE_RELATIVE: f64 = 1e-10;
/// Relative singular-value cutoff for rank and independence decisions.
pub const RANK_RELATIVE: f64 = 1e-8;
pub const DEFAULT_REPAIR_ANGLE: f64 = std::f64::consts::FRAC_PI_4;
pub const LINE_SEARCH_START: f64 = 0.1;
pub const LINE_SEARCH_HALVINGS: usize = 60;

/// `(a_11, ..., a_nn)`
pub fn diag_projection(a: &ComplexMatrix) -> Vec<Complex64> {
    a.diagonal().iter().copied().collect()
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Off-diagonal pattern graph: edge `(i, j)` iff `|L_ij| > threshold`, `i != j`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGraph {
    adjacency: Vec<Vec<bool>>,
}

impl MatrixGraph {
    pub fn new(l: &ComplexMatrix, threshold: f64) -> Self {
        let n = l.nrows();
        let adjacency = (0..n)
            .map(|i| (0..n).map(|j| i != j && (l[(i, j)].norm() > threshold || l[(j, i)].norm() > threshold)).collect())
            .collect();
        MatrixGraph { adjacency }
    }

    /// Graph with the default edge threshold `1e-10 * max |L|`.
    pub fn of(l: &ComplexMatrix) -> Self {
        MatrixGraph::new(l, EDGE_RELATIVE * max_abs(l))
    }

    pub fn vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    /// Connected components, each ascending, ordered by size (descending) and
    /// then by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices();
        let mut dsu = DisjointSet::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[i][j] {
                    dsu.union(i, j);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for v in 0..n {
            let root = dsu.find(v);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(v);
        }
        groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        groups
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

pub fn graph_connected(l: &ComplexMatrix, threshold: f64) -> bool {
    MatrixGraph::new(l, threshold).is_connected()
}

fn require_symmetric(l: &ComplexMatrix) -> Result<()> {
    if l.nrows() != l.ncols() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", l.nrows(), l.ncols())));
    }
    let violation = symmetry_violation(l);
    if violation > 1e-10 * max_abs(l).max(1.0) {
        return Err(Error::Asymmetric { violation });
    }
    Ok(())
}

/// Canonical skew basis `E_ab - E_ba`, `a < b` lexicographic.
pub fn skew_basis_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            out.push((a, b));
        }
    }
    out
}

fn skew_unit(n: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut x = ComplexMatrix::zeros(n, n);
    x[(a, b)] = Complex64::new(1.0, 0.0);
    x[(b, a)] = Complex64::new(-1.0, 0.0);
    x
}

/// Matrix of `X -> diag(XL - LX)` from the skew basis into the trace-zero
/// hyperplane, in its first `n - 1` coordinates.
pub fn theta_jacobian(l: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_symmetric(l)?;
    let n = l.nrows();
    let pairs = skew_basis_pairs(n);
    let mut jac = ComplexMatrix::zeros(n.saturating_sub(1), pairs.len());
    for (col, &(a, b)) in pairs.iter().enumerate() {
        let x = skew_unit(n, a, b);
        let image = diag_projection(&(&x * l - l * &x));
        let sum: Complex64 = image.iter().sum();
        debug_assert!(sum.norm() <= 1e-12 * max_abs(l).max(1.0));
        for r in 0..n.saturating_sub(1) {
            jac[(r, col)] = image[r];
        }
    }
    Ok(jac)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurjectivityReport {
    pub connected: bool,
    pub jacobian_rank: usize,
    pub consistent: bool,
}

/// Evaluates both sides of "the Jacobian is onto iff the graph is connected".
pub fn surjectivity_iff_connected_check(l: &ComplexMatrix) -> Result<SurjectivityReport> {
    let jac = theta_jacobian(l)?;
    let n = l.nrows();
    let connected = MatrixGraph::of(l).is_connected();
    let jacobian_rank = numerical_rank(&jac, RANK_RELATIVE);
    let surjective = jacobian_rank == n.saturating_sub(1);
    Ok(SurjectivityReport { connected, jacobian_rank, consistent: connected == surjective })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityRepair {
    /// Orthogonal, product of plane rotations by the repair angle.
    pub s: ComplexMatrix,
    /// `S L S^t`
    pub lhat: ComplexMatrix,
    /// Size of the largest component before each rotation and at the end.
    pub largest_component: Vec<usize>,
}

/// Conjugates a zero-diagonal symmetric `L` by plane rotations until its graph
/// is connected, keeping the diagonal zero.
///
/// Each rotation mixes the last vertex of the largest component with the first
/// vertex of the next component. Both have zero diagonal and no mutual edge, so
/// the diagonal stays zero while the rotated vertex inherits the edges of the
/// largest component.
pub fn connectivity_repair(l: &ComplexMatrix, angle: f64) -> Result<ConnectivityRepair> {
    require_symmetric(l)?;
    let n = l.nrows();
    let scale = max_abs(l);
    if scale == 0.0 {
        return Err(Error::Degenerate("connectivity repair needs a nonzero matrix".into()));
    }
    let diag = diag_projection(l).iter().map(|c| c.norm()).fold(0.0, nan_max);
    if diag > 1e-10 * scale.max(1.0) {
        return Err(Error::Precondition(format!("diagonal must vanish, found {diag:.3e}")));
    }
    if !(angle > 0.0 && angle < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Precondition(format!("repair angle must lie in (0, pi/2), got {angle}")));
    }

    let threshold = EDGE_RELATIVE * scale;
    let mut s = identity(n);
    let mut lhat = l.clone();
    let mut largest_component = Vec::new();
    loop {
        let comps = MatrixGraph::new(&lhat, threshold).components();
        largest_component.push(comps[0].len());
        if comps.len() == 1 {
            break;
        }
        let u = *comps[0].last().unwrap();
        let v = comps[1][0];
        let g = givens(n, u, v, Complex64::new(angle, 0.0));
        lhat = &g * &lhat * g.transpose();
        for i in 0..n {
            lhat[(i, i)] = Complex64::zero();
        }
        s = &g * &s;
        if largest_component.len() > n {
            return Err(Error::ConstructionFailed("connectivity repair did not converge".into()));
        }
    }
    Ok(ConnectivityRepair { s, lhat, largest_component })
}

/// A `delta`-dimensional space of `delta x delta` complex symmetric matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrixSpace {
    basis: Vec<ComplexMatrix>,
}

impl SymmetricMatrixSpace {
    pub fn new(basis: Vec<ComplexMatrix>) -> Result<Self> {
        let delta = basis.len();
        if delta == 0 {
            return Err(Error::Dimension("empty basis".into()));
        }
        for m in &basis {
            if m.nrows() != delta || m.ncols() != delta {
                return Err(Error::Dimension(format!(
                    "basis of {delta} elements needs {delta}x{delta} matrices, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            require_symmetric(m)?;
        }
        let stacked = ComplexMatrix::from_fn(delta, delta * delta, |i, j| vectorize(&basis[i])[j]);
        let rank = numerical_rank(&stacked, RANK_RELATIVE);
        if rank < delta {
            return Err(Error::RankDeficient { rank, expected: delta });
        }
        Ok(SymmetricMatrixSpace { basis })
    }

    /// `{B F B^t : F symmetric}`, spanned by the images of the symmetric basis.
    pub fn feedback_space(b: &ComplexMatrix) -> Result<Self> {
        let basis = crate::spectral::symmetric_basis(b.ncols()).iter().map(|e| b * e * b.transpose()).collect();
        SymmetricMatrixSpace::new(basis)
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalBijection {
    /// Orthogonal conjugation.
    pub s: ComplexMatrix,
    /// `S L_i S^t` for the input basis.
    pub transformed_basis: Vec<ComplexMatrix>,
    /// Row `i` is `diag(S L_i S^t)`.
    pub diag_matrix: ComplexMatrix,
    pub condition: f64,
    /// Extension steps that needed a rotation.
    pub rotations: usize,
}

fn projection_rows(ms: &[ComplexMatrix]) -> ComplexMatrix {
    let n = ms.first().map_or(0, |m| m.nrows());
    ComplexMatrix::from_fn(ms.len(), n, |i, j| ms[i][(j, j)])
}

fn rows_independent(rows: &ComplexMatrix) -> bool {
    if rows.nrows() == 0 {
        return true;
    }
    let sv = singular_values(rows);
    if sv.len() < rows.nrows() || sv[0] == 0.0 {
        return false;
    }
    sv[rows.nrows() - 1] > RANK_RELATIVE * sv[0]
}

fn conjugate_all(s: &ComplexMatrix, ms: &mut [ComplexMatrix]) {
    let st = s.transpose();
    for m in ms.iter_mut() {
        *m = s * &*m * &st;
    }
}

/// Coefficients expressing `target` in the row span of `rows` (least squares).
fn span_coefficients(rows: &ComplexMatrix, target: &[Complex64]) -> ComplexMatrix {
    let a = rows.transpose();
    let b = ComplexMatrix::from_fn(target.len(), 1, |i, _| target[i]);
    least_squares(&a, &b, RANK_RELATIVE).0
}

fn residual_outside_span(rows: &ComplexMatrix, v: &[Complex64]) -> f64 {
    if rows.nrows() == 0 {
        return v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    }
    let coeffs = span_coefficients(rows, v);
    let fitted = rows.transpose() * coeffs;
    v.iter().enumerate().map(|(i, c)| (c - fitted[(i, 0)]).norm_sqr()).sum::<f64>().sqrt()
}

/// Finds an orthogonal `S` such that `L -> diag(S L S^-1)` maps the space
/// bijectively onto `C^delta`.
///
/// 1. Re-basis so only the first element has nonzero trace.
/// 2. Greedily collect elements with independent diagonals; subtract
///    combinations so the others have zero diagonal.
/// 3. While short of `delta`, make the graph of the next zero-diagonal element
///    connected, then rotate along the canonical skew direction whose
///    commutator diagonal sticks out of the current span the most, shrinking
///    the angle until independence holds.
pub fn make_diag_projection_bijective(space: &SymmetricMatrixSpace) -> Result<DiagonalBijection> {
    let delta = space.dim();
    let traces: Vec<Complex64> = space.basis().iter().map(trace).collect();
    let (lead, lead_trace) = traces
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(b.0.cmp(&a.0)))
        .map(|(i, t)| (i, *t))
        .unwrap();
    if lead_trace.norm() <= 1e-8 {
        return Err(Error::Precondition("space consists of trace-zero matrices".into()));
    }

    let mut m: Vec<ComplexMatrix> = Vec::with_capacity(delta);
    m.push(space.basis()[lead].clone());
    for (i, k) in space.basis().iter().enumerate() {
        if i != lead {
            m.push(k - &space.basis()[lead] * (traces[i] / lead_trace));
        }
    }

    let mut s = identity(delta);
    let mut independent = 1usize;
    let mut rotations = 0usize;
    loop {
        // greedy extension
        let mut j = independent;
        while j < delta {
            let mut candidate: Vec<ComplexMatrix> = m[..independent].to_vec();
            candidate.push(m[j].clone());
            if rows_independent(&projection_rows(&candidate)) {
                m.swap(independent, j);
                independent += 1;
            }
            j += 1;
        }
        // zero out the remaining diagonals
        let rows = projection_rows(&m[..independent]);
        for j in independent..delta {
            let coeffs = span_coefficients(&rows, &diag_projection(&m[j]));
            let mut reduced = m[j].clone();
            for i in 0..independent {
                reduced -= &m[i] * coeffs[(i, 0)];
            }
            for d in 0..delta {
                reduced[(d, d)] = Complex64::zero();
            }
            m[j] = reduced;
        }
        if independent == delta {
            break;
        }

        let repair = repair_preserving(&m, independent)?;
        conjugate_all(&repair, &mut m);
        s = &repair * &s;

        let next = &m[independent];
        let rows = projection_rows(&m[..independent]);
        let (best, score) = skew_basis_pairs(delta)
            .into_iter()
            .map(|(a, b)| {
                let x = skew_unit(delta, a, b);
                let image = diag_projection(&(&x * next - next * &x));
                ((a, b), residual_outside_span(&rows, &image))
            })
            .max_by(|p, q| p.1.total_cmp(&q.1))
            .ok_or_else(|| Error::ConstructionFailed("no skew directions for a 1x1 space".into()))?;
        if score <= RANK_RELATIVE * max_abs(next).max(f64::MIN_POSITIVE) {
            return Err(Error::ConstructionFailed(format!("no skew direction leaves the span at step {independent}")));
        }

        let mut step = LINE_SEARCH_START;
        let mut accepted = None;
        for _ in 0..=LINE_SEARCH_HALVINGS {
            // exp(eps (E_ab - E_ba)) is the plane rotation by -eps in givens' convention
            let r = givens(delta, best.0, best.1, Complex64::new(-step, 0.0));
            let mut trial: Vec<ComplexMatrix> = m[..=independent].to_vec();
            conjugate_all(&r, &mut trial);
            if rows_independent(&projection_rows(&trial)) {
                accepted = Some(r);
                break;
            }
            step *= 0.5;
        }
        let r = accepted.ok_or_else(|| {
            Error::ConstructionFailed(format!(
                "line search exhausted {LINE_SEARCH_HALVINGS} halvings at step {independent} (direction {best:?})"
            ))
        })?;
        conjugate_all(&r, &mut m);
        s = &r * &s;
        independent += 1;
        rotations += 1;
    }

    let st = s.transpose();
    let transformed_basis: Vec<ComplexMatrix> = space.basis().iter().map(|k| &s * k * &st).collect();
    let diag_matrix = projection_rows(&transformed_basis);
    let sv = singular_values(&diag_matrix);
    let smallest = *sv.last().unwrap();
    if smallest <= RANK_RELATIVE * sv[0] {
        return Err(Error::ConstructionFailed("final diagonal projection is singular".into()));
    }
    Ok(DiagonalBijection { s, transformed_basis, diag_matrix, condition: sv[0] / smallest, rotations })
}

/// Connectivity repair of `m[k]` at the largest angle (from pi/4, halving)
/// that keeps the first `k` diagonals independent.
fn repair_preserving(m: &[ComplexMatrix], k: usize) -> Result<ComplexMatrix> {
    let mut angle = DEFAULT_REPAIR_ANGLE;
    for _ in 0..=LINE_SEARCH_HALVINGS {
        let repair = connectivity_repair(&m[k], angle)?;
        if repair.largest_component.len() == 1 {
            return Ok(repair.s);
        }
        let mut trial: Vec<ComplexMatrix> = m[..k].to_vec();
        conjugate_all(&repair.s, &mut trial);
        if rows_independent(&projection_rows(&trial)) {
            return Ok(repair.s);
        }
        angle *= 0.5;
    }
    Err(Error::ConstructionFailed(format!("connectivity repair broke independence at step {k}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::{cx, diagonal, orthogonality_violation, real_matrix};

    #[test]
    fn diag_projection_reads_diagonal() {
        assert_eq!(diag_projection(&identity(3)), vec![cx(1.0, 0.0); 3]);
        let off = real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(diag_projection(&off).iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn diagonal_l_gives_zero_jacobian() {
        let l = diagonal(&[cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0)]);
        assert_eq!(max_abs(&theta_jacobian(&l).unwrap()), 0.0);
    }

    #[test]
    fn swap_matrix_jacobian() {
        let l = real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let jac = theta_jacobian(&l).unwrap();
        // X = E_12 - E_21: diag(XL - LX) = (2, -2)
        assert_eq!(jac, real_matrix(1, 1, &[2.0]));
        let report = surjectivity_iff_connected_check(&l).unwrap();
        assert_eq!(report, SurjectivityReport { connected: true, jacobian_rank: 1, consistent: true });
        let report = surjectivity_iff_connected_check(&diagonal(&[cx(1.0, 0.0), cx(2.0, 0.0)])).unwrap();
        assert_eq!(report, SurjectivityReport { connected: false, jacobian_rank: 0, consistent: true });
    }

    #[test]
    fn graph_connectivity_examples() {
        let block = real_matrix(4, 4, &[0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 2., 0., 0., 2., 0.]);
        assert!(!graph_connected(&block, 1e-12));
        let tri = real_matrix(3, 3, &[1., 1., 0., 1., 1., 1., 0., 1., 1.]);
        assert!(graph_connected(&tri, 1e-12));
        let comps = MatrixGraph::of(&block).components();
        assert_eq!(comps, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn repair_of_connected_input_is_identity() {
        let l = real_matrix(3, 3, &[0., 1., 0., 1., 0., 2., 0., 2., 0.]);
        let out = connectivity_repair(&l, DEFAULT_REPAIR_ANGLE).unwrap();
        assert_eq!(out.s, identity(3));
        assert_eq!(out.lhat, l);
    }

    #[test]
    fn repair_two_swap_blocks() {
        let l = real_matrix(4, 4, &[0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.]);
        let out = connectivity_repair(&l, DEFAULT_REPAIR_ANGLE).unwrap();
        assert!(MatrixGraph::of(&out.lhat).is_connected());
        assert!(diag_projection(&out.lhat).iter().all(|c| c.norm() < 1e-12));
        assert!(orthogonality_violation(&out.s) < 1e-14);
        assert_eq!(out.largest_component, vec![2, 4]);
    }

    #[test]
    fn repair_errors() {
        assert!(matches!(connectivity_repair(&ComplexMatrix::zeros(3, 3), 0.5), Err(Error::Degenerate(_))));
        assert!(matches!(connectivity_repair(&identity(2), 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn diagonal_units_need_no_rotation() {
        let basis: Vec<ComplexMatrix> = (0..3)
            .map(|i| {
                let mut e = ComplexMatrix::zeros(3, 3);
                e[(i, i)] = cx(1.0, 0.0);
                e
            })
            .collect();
        let out = make_diag_projection_bijective(&SymmetricMatrixSpace::new(basis).unwrap()).unwrap();
        assert_eq!(out.s, identity(3));
        assert_eq!(out.diag_matrix, identity(3));
        assert_eq!(out.rotations, 0);
    }

    #[test]
    fn trace_zero_space_is_rejected() {
        let basis = vec![real_matrix(2, 2, &[0., 1., 1., 0.]), real_matrix(2, 2, &[1., 0., 0., -1.])];
        let space = SymmetricMatrixSpace::new(basis).unwrap();
        assert!(matches!(make_diag_projection_bijective(&space), Err(Error::Precondition(_))));
    }

    #[test]
    fn dependent_basis_is_rejected() {
        let basis = vec![identity(2), identity(2) * cx(2.0, 0.0)];
        assert!(matches!(SymmetricMatrixSpace::new(basis), Err(Error::RankDeficient { rank: 1, expected: 2 })));
    }

    #[test]
    fn rotation_needed_for_identity_plus_offdiagonal() {
        // span{I, E_12 + E_21}: diagonals (1,1) and (0,0) start dependent
        let basis = vec![identity(2), real_matrix(2, 2, &[0., 1., 1., 0.])];
        let out = make_diag_projection_bijective(&SymmetricMatrixSpace::new(basis).unwrap()).unwrap();
        assert_eq!(out.rotations, 1);
        assert!(orthogonality_violation(&out.s) < 1e-14);
        assert!(out.condition.is_finite());
    }
}

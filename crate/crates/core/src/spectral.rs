//! Closed-loop characteristic polynomials and the trace-power maps.
//!
//! Output feedback `u = F y + v` with symmetric `F` closes the loop to
//! `A + B F B^t` (symmetric realizations) or `A + B F C` (Hamiltonian ones).
//! Newton's identities turn the power sums `trace(M^k)` into characteristic
//! polynomial coefficients, so matching power sums is equivalent to matching
//! the closed-loop polynomial.

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::polymat::{
    max_abs, numerical_rank, poly_matrix_det, powers, symmetry_violation, trace, ComplexMatrix, Poly, PolyMatrix,
};
use crate::realization::{HamiltonianSystem, SymmetricSystem};

/// Symmetry tolerance for gains supplied as full matrices.
pub const GAIN_SYMMETRY_TOL: f64 = 1e-12;

/// A complex symmetric `n x n` feedback gain.
///
/// Parameterized by its `n(n+1)/2` free entries: diagonal entries first, then
/// the strict upper triangle in lexicographic `(i, j)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricGain {
    f: ComplexMatrix,
}

impl SymmetricGain {
    pub fn new(f: ComplexMatrix) -> Result<Self> {
        if f.nrows() != f.ncols() {
            return Err(Error::Dimension(format!("gain must be square, got {}x{}", f.nrows(), f.ncols())));
        }
        let violation = symmetry_violation(&f);
        if violation >= GAIN_SYMMETRY_TOL * max_abs(&f).max(1.0) {
            return Err(Error::Asymmetric { violation });
        }
        Ok(SymmetricGain { f: (&f + f.transpose()).scale(0.5) })
    }

    /// Averages `F` and `F^t`, whatever the asymmetry.
    pub fn symmetrized(f: &ComplexMatrix) -> Self {
        SymmetricGain { f: (f + f.transpose()).scale(0.5) }
    }

    pub fn zero(n: usize) -> Self {
        SymmetricGain { f: ComplexMatrix::zeros(n, n) }
    }

    pub fn from_params(n: usize, params: &[Complex64]) -> Result<Self> {
        if params.len() != symmetric_dim(n) {
            return Err(Error::Dimension(format!(
                "expected {} gain parameters for n = {n}, got {}",
                symmetric_dim(n),
                params.len()
            )));
        }
        let mut f = ComplexMatrix::zeros(n, n);
        for (k, (i, j)) in symmetric_index_pairs(n).into_iter().enumerate() {
            f[(i, j)] = params[k];
            f[(j, i)] = params[k];
        }
        Ok(SymmetricGain { f })
    }

    pub fn params(&self) -> Vec<Complex64> {
        symmetric_index_pairs(self.size()).into_iter().map(|(i, j)| self.f[(i, j)]).collect()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.f
    }

    pub fn size(&self) -> usize {
        self.f.nrows()
    }
}

/// `n(n+1)/2`
pub fn symmetric_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Parameter positions: `(0,0), ..., (n-1,n-1)`, then `(i,j)` with `i < j`.
pub fn symmetric_index_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// `E_ii` and `E_ij + E_ji` in parameter order.
pub fn symmetric_basis(n: usize) -> Vec<ComplexMatrix> {
    symmetric_index_pairs(n)
        .into_iter()
        .map(|(i, j)| {
            let mut e = ComplexMatrix::zeros(n, n);
            e[(i, j)] = Complex64::one();
            e[(j, i)] = Complex64::one();
            e
        })
        .collect()
}

/// `(trace M, trace M^2, ..., trace M^len)`
#[derive(Clone, Debug, PartialEq)]
pub struct TracePowerVector(pub Vec<Complex64>);

impl TracePowerVector {
    pub fn of_matrix(m: &ComplexMatrix, count: usize) -> Self {
        TracePowerVector(powers(m, count).iter().map(trace).collect())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A realization closed by symmetric output feedback.
pub trait FeedbackSystem {
    fn a(&self) -> &ComplexMatrix;
    fn b(&self) -> &ComplexMatrix;
    fn output_map(&self) -> ComplexMatrix;

    fn state_dim(&self) -> usize {
        self.a().nrows()
    }

    fn input_dim(&self) -> usize {
        self.b().ncols()
    }
}

impl FeedbackSystem for SymmetricSystem {
    fn a(&self) -> &ComplexMatrix {
        SymmetricSystem::a(self)
    }
    fn b(&self) -> &ComplexMatrix {
        SymmetricSystem::b(self)
    }
    fn output_map(&self) -> ComplexMatrix {
        self.c()
    }
}

impl FeedbackSystem for HamiltonianSystem {
    fn a(&self) -> &ComplexMatrix {
        HamiltonianSystem::a(self)
    }
    fn b(&self) -> &ComplexMatrix {
        HamiltonianSystem::b(self)
    }
    fn output_map(&self) -> ComplexMatrix {
        self.c().clone()
    }
}

/// `A + B F C` (with `C = B^t` for symmetric realizations).
pub fn closed_loop_matrix<S: FeedbackSystem + ?Sized>(sys: &S, gain: &SymmetricGain) -> Result<ComplexMatrix> {
    if gain.size() != sys.input_dim() {
        return Err(Error::Dimension(format!(
            "gain is {}x{} but the system has {} inputs",
            gain.size(),
            gain.size(),
            sys.input_dim()
        )));
    }
    Ok(sys.a() + sys.b() * gain.matrix() * sys.output_map())
}

/// Monic polynomial from power sums via Newton's identities.
pub fn newton_coeffs(t: &TracePowerVector) -> Poly {
    let delta = t.len();
    // e[k] is the coefficient of s^(delta - k)
    let mut e = vec![Complex64::one()];
    for k in 1..=delta {
        let acc: Complex64 = e.iter().enumerate().map(|(i, ei)| ei * t.0[k - i - 1]).sum();
        e.push(-acc / k as f64);
    }
    e.reverse();
    Poly::from_raw(e)
}

/// Power sums `p_1..p_count` of the roots of a monic polynomial (inverse of
/// [`newton_coeffs`]).
pub fn power_sums(monic: &Poly, count: usize) -> TracePowerVector {
    let delta = monic.degree().unwrap_or(0);
    let e = |k: usize| -> Complex64 {
        if k > delta {
            Complex64::zero()
        } else {
            monic.coeff(delta - k)
        }
    };
    let mut p: Vec<Complex64> = Vec::with_capacity(count);
    for k in 1..=count {
        let mut acc = e(k) * k as f64;
        for i in 1..k {
            acc += e(i) * p[k - i - 1];
        }
        p.push(-acc);
    }
    TracePowerVector(p)
}

/// `(trace (A + B F B^t)^k)_{k = 1..delta}`
pub fn phi_map(sys: &SymmetricSystem, gain: &SymmetricGain) -> Result<TracePowerVector> {
    let m = closed_loop_matrix(sys, gain)?;
    Ok(TracePowerVector::of_matrix(&m, sys.state_dim()))
}

/// Relative odd-trace magnitude tolerated before discarding.
pub const ODD_TRACE_WARN: f64 = 1e-9;
/// Relative odd-trace magnitude treated as broken Hamiltonian structure.
pub const ODD_TRACE_FAIL: f64 = 1e-6;

/// `(trace (A + B F C)^(2k))_{k = 1..delta/2}`; odd power sums must vanish.
pub fn psi_map(sys: &HamiltonianSystem, gain: &SymmetricGain) -> Result<Vec<Complex64>> {
    let delta = sys.state_dim();
    if !delta.is_multiple_of(2) {
        return Err(Error::Dimension(format!("Hamiltonian state dimension must be even, got {delta}")));
    }
    let m = closed_loop_matrix(sys, gain)?;
    let all = TracePowerVector::of_matrix(&m, delta);
    let scale = all.0.iter().map(|c| c.norm()).fold(1.0, f64::max);
    for (idx, t) in all.0.iter().enumerate().step_by(2) {
        let relative = t.norm() / scale;
        if relative > ODD_TRACE_FAIL {
            return Err(Error::StructureBroken { power: idx + 1, magnitude: relative });
        }
    }
    Ok(all.0.iter().skip(1).step_by(2).copied().collect())
}

/// Reconstructs the full power-sum vector from its even entries.
pub fn even_to_full_traces(even: &[Complex64]) -> TracePowerVector {
    let mut full = Vec::with_capacity(2 * even.len());
    for &t in even {
        full.push(Complex64::zero());
        full.push(t);
    }
    TracePowerVector(full)
}

/// Jacobian of `phi` at `F = 0`: column `j` is
/// `(k trace(A^(k-1) B E_j B^t))_k` for the `j`-th symmetric basis element.
pub fn jacobian_phi_at_zero(sys: &SymmetricSystem) -> ComplexMatrix {
    trace_jacobian_at_zero(sys.a(), sys.b(), &sys.c(), (1..=sys.state_dim()).collect())
}

/// Jacobian of `psi` at `F = 0` with weights `2, 4, ..., delta`.
pub fn jacobian_psi_at_zero(sys: &HamiltonianSystem) -> Result<ComplexMatrix> {
    let delta = sys.state_dim();
    if !delta.is_multiple_of(2) {
        return Err(Error::Dimension(format!("Hamiltonian state dimension must be even, got {delta}")));
    }
    Ok(trace_jacobian_at_zero(sys.a(), sys.b(), sys.c(), (1..=delta / 2).map(|k| 2 * k).collect()))
}

fn trace_jacobian_at_zero(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    orders: Vec<usize>,
) -> ComplexMatrix {
    let n = b.ncols();
    let pairs = symmetric_index_pairs(n);
    let max_order = orders.iter().copied().max().unwrap_or(0);
    let mut a_pow = vec![crate::polymat::identity(a.nrows())];
    a_pow.extend(powers(a, max_order.saturating_sub(1)));
    let mut jac = ComplexMatrix::zeros(orders.len(), pairs.len());
    for (row, &k) in orders.iter().enumerate() {
        // trace(A^(k-1) B E C) = sum_pq (C A^(k-1) B)_qp E_pq
        let core = c * &a_pow[k - 1] * b;
        for (col, &(i, j)) in pairs.iter().enumerate() {
            let value = if i == j { core[(i, i)] } else { core[(i, j)] + core[(j, i)] };
            jac[(row, col)] = value * k as f64;
        }
    }
    jac
}

/// A polynomial reported with its normalization state: monic when the leading
/// coefficient is large enough, raw otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedPoly {
    pub poly: Poly,
    pub monic: bool,
}

pub const MONIC_MIN_LEADING: f64 = 1e-10;

impl NormalizedPoly {
    pub fn from_poly(p: Poly) -> Self {
        match p.to_monic(MONIC_MIN_LEADING) {
            Some(m) => NormalizedPoly { poly: m, monic: true },
            None => NormalizedPoly { poly: p, monic: false },
        }
    }
}

/// `det [[D(s), N(s)], [F1, F2]]`
pub fn closed_loop_charpoly_tf(
    d: &PolyMatrix,
    n: &PolyMatrix,
    f1: &ComplexMatrix,
    f2: &ComplexMatrix,
) -> Result<NormalizedPoly> {
    Ok(NormalizedPoly::from_poly(closed_loop_det_raw(d, n, f1, f2)?))
}

pub(crate) fn closed_loop_det_raw(
    d: &PolyMatrix,
    n: &PolyMatrix,
    f1: &ComplexMatrix,
    f2: &ComplexMatrix,
) -> Result<Poly> {
    let size = d.rows();
    if d.cols() != size || n.rows() != size || n.cols() != size {
        return Err(Error::Dimension("D and N must be square of the same size".into()));
    }
    if f1.nrows() != size || f1.ncols() != size || f2.nrows() != size || f2.ncols() != size {
        return Err(Error::Dimension(format!("F1 and F2 must be {size}x{size}")));
    }
    let mut f = ComplexMatrix::zeros(size, 2 * size);
    f.view_mut((0, 0), (size, size)).copy_from(f1);
    f.view_mut((0, size), (size, size)).copy_from(f2);
    if numerical_rank(&f, 1e-8) < size {
        return Err(Error::InvalidPoint("[F1 F2] is rank deficient".into()));
    }
    let top = d.hcat(n)?;
    let bottom = PolyMatrix::from_constant(&f);
    poly_matrix_det(&top.vcat(&bottom)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::{charpoly, cx, identity, real_matrix};
    use crate::rng::{complex_normal_matrix, complex_symmetric_matrix, phase_rng};

    fn scalar_integrator() -> SymmetricSystem {
        SymmetricSystem::new(real_matrix(1, 1, &[0.0]), real_matrix(1, 1, &[1.0])).unwrap()
    }

    #[test]
    fn gain_parameter_layout() {
        let p = [cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0), cx(4.0, 0.0), cx(5.0, 0.0), cx(6.0, 0.0)];
        let g = SymmetricGain::from_params(3, &p).unwrap();
        assert_eq!(g.matrix()[(0, 1)], cx(4.0, 0.0));
        assert_eq!(g.matrix()[(2, 1)], cx(6.0, 0.0));
        assert_eq!(g.params(), p.to_vec());
        assert!(SymmetricGain::new(real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn closed_loop_small_cases() {
        let sys = scalar_integrator();
        let f = SymmetricGain::from_params(1, &[cx(2.5, -1.0)]).unwrap();
        assert_eq!(closed_loop_matrix(&sys, &f).unwrap()[(0, 0)], cx(2.5, -1.0));
        assert_eq!(closed_loop_matrix(&sys, &SymmetricGain::zero(1)).unwrap(), *sys.a());
        assert!(closed_loop_matrix(&sys, &SymmetricGain::zero(2)).is_err());
        assert_eq!(phi_map(&sys, &f).unwrap().0, vec![cx(2.5, -1.0)]);
    }

    #[test]
    fn newton_small_cases() {
        let p = newton_coeffs(&TracePowerVector(vec![cx(2.0, 0.0), cx(2.0, 0.0)]));
        assert_eq!(p, Poly::from_real(&[1.0, -2.0, 1.0]));
        let p = newton_coeffs(&TracePowerVector(vec![cx(3.0, 0.0), cx(5.0, 0.0)]));
        assert_eq!(p, Poly::from_real(&[2.0, -3.0, 1.0]));
        let back = power_sums(&p, 2);
        assert_eq!(back.0, vec![cx(3.0, 0.0), cx(5.0, 0.0)]);
    }

    #[test]
    fn psi_of_swap_matrix() {
        let sys =
            HamiltonianSystem::from_input_map(real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]), real_matrix(2, 1, &[0.0, 1.0]))
                .unwrap();
        assert_eq!(psi_map(&sys, &SymmetricGain::zero(1)).unwrap(), vec![cx(2.0, 0.0)]);
        let nil =
            HamiltonianSystem::from_input_map(real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]), real_matrix(2, 1, &[0.0, 1.0]))
                .unwrap();
        assert!(psi_map(&nil, &SymmetricGain::zero(1)).unwrap().iter().all(|t| t.norm() == 0.0));
    }

    #[test]
    fn psi_rejects_broken_structure() {
        let b = real_matrix(2, 1, &[0.0, 1.0]);
        let c = real_matrix(1, 2, &[1.0, 0.0]);
        let sys = HamiltonianSystem::new_unchecked(identity(2), b, c).unwrap();
        assert!(matches!(psi_map(&sys, &SymmetricGain::zero(1)), Err(Error::StructureBroken { power: 1, .. })));
    }

    #[test]
    fn jacobian_trivial_cases() {
        let jac = jacobian_phi_at_zero(&scalar_integrator());
        assert_eq!(jac, real_matrix(1, 1, &[1.0]));
        let mut rng = phase_rng(5, "test");
        let b = complex_normal_matrix(&mut rng, 4, 2);
        let c = (crate::polymat::symplectic_form(4) * &b).transpose();
        let sys = HamiltonianSystem::new(ComplexMatrix::zeros(4, 4), b, c).unwrap();
        let jac = jacobian_psi_at_zero(&sys).unwrap();
        assert_eq!(jac.shape(), (2, 3));
        assert!(max_abs(&jac) == 0.0);
    }

    #[test]
    fn closed_loop_symmetry_preserved() {
        let mut rng = phase_rng(6, "test");
        let sys =
            SymmetricSystem::new(complex_symmetric_matrix(&mut rng, 4), complex_normal_matrix(&mut rng, 4, 2)).unwrap();
        let f = SymmetricGain::symmetrized(&complex_normal_matrix(&mut rng, 2, 2));
        let m = closed_loop_matrix(&sys, &f).unwrap();
        assert!(symmetry_violation(&m) < 1e-12);
    }

    #[test]
    fn transfer_determinant_with_identity_f2_is_det_d() {
        let s = Poly::from_real(&[0.0, 1.0]);
        let d = PolyMatrix::diagonal(&[s.clone(), &s * &s]);
        let n = PolyMatrix::from_constant(&identity(2));
        let p = closed_loop_charpoly_tf(&d, &n, &ComplexMatrix::zeros(2, 2), &identity(2)).unwrap();
        assert!(p.monic);
        assert_eq!(p.poly, Poly::monomial(cx(1.0, 0.0), 3));
        let err = closed_loop_charpoly_tf(&d, &n, &ComplexMatrix::zeros(2, 2), &ComplexMatrix::zeros(2, 2));
        assert!(matches!(err, Err(Error::InvalidPoint(_))));
    }

    #[test]
    fn charpoly_agrees_with_newton_on_a_fixed_case() {
        let a = real_matrix(3, 3, &[1.0, 2.0, 0.0, 2.0, -1.0, 1.0, 0.0, 1.0, 3.0]);
        let via_traces = newton_coeffs(&TracePowerVector::of_matrix(&a, 3));
        assert!(via_traces.relative_error(&charpoly(&a).unwrap()) < 1e-13);
    }
}

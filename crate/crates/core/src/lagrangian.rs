//! The Lagrangian Grassmannian side of symmetric output feedback.
//!
//! A symmetric gain `F` is the point `rowsp [F I]` of the Lagrangian
//! Grassmannian `LG(n)`; general points are `rowsp [F1 F2]` with `F1 F2^t`
//! symmetric. Expanding `det [[D(s), N(s)], [F1, F2]]` along the bottom rows
//! writes the closed-loop polynomial as `sum_I f_I p_I(s)` with Plücker
//! coordinates `f_I` and polynomial cofactors `p_I`. That linear form is the
//! characteristic map; its base locus on `LG(n)` decides nondegeneracy, and the
//! degree of `LG(n)` is the generic number of solutions.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;

use crate::cellproof::refute_cell;
use crate::error::{Error, Result};
use crate::polymat::{
    argmax_abs, combinations, condition_number, full_size_minors, full_size_poly_minors, identity, inverse,
    least_squares, max_abs, nan_max, numerical_rank, symmetry_violation, ComplexMatrix, Poly, PolyMatrix,
};
use crate::realization::StateSpace;
use crate::rng::{complex_normal_matrix, phase_rng};
use crate::spectral::SymmetricGain;

/// Tolerance on `F1 F2^t - F2 F1^t`.
pub const LAGRANGIAN_TOL: f64 = 1e-9;
/// Above this condition number of `F2` the point is treated as at infinity.
pub const CHART_MAX_CONDITION: f64 = 1e8;
pub const MAX_COFACTOR_SIZE: usize = 4;
pub const MAX_DEGREE_N: usize = 20;
pub const ODD_PART_TOL: f64 = 1e-8;

fn block_row(f1: &ComplexMatrix, f2: &ComplexMatrix) -> ComplexMatrix {
    let n = f1.nrows();
    let mut w = ComplexMatrix::zeros(n, 2 * n);
    w.view_mut((0, 0), (n, n)).copy_from(f1);
    w.view_mut((0, n), (n, n)).copy_from(f2);
    w
}

/// Divides by the coordinate of largest magnitude (lowest index on ties).
pub fn normalize_plucker(coords: &[Complex64]) -> Vec<Complex64> {
    match argmax_abs(coords) {
        Some(idx) => {
            let pivot = coords[idx];
            let mut out: Vec<Complex64> = coords.iter().map(|c| c / pivot).collect();
            out[idx] = Complex64::one();
            out
        }
        None => coords.to_vec(),
    }
}

/// `F1 F2^t - F2 F1^t`, max magnitude.
pub fn lagrangian_violation(f1: &ComplexMatrix, f2: &ComplexMatrix) -> f64 {
    let p = f1 * f2.transpose();
    max_abs(&(&p - p.transpose()))
}

/// A point `rowsp [F1 F2]` of the Lagrangian Grassmannian.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianPoint {
    f1: ComplexMatrix,
    f2: ComplexMatrix,
    plucker: Vec<Complex64>,
}

impl LagrangianPoint {
    pub fn new(f1: ComplexMatrix, f2: ComplexMatrix) -> Result<Self> {
        let n = f1.nrows();
        if f1.ncols() != n || f2.nrows() != n || f2.ncols() != n {
            return Err(Error::Dimension(format!(
                "F1 and F2 must both be n x n, got {}x{} and {}x{}",
                f1.nrows(),
                f1.ncols(),
                f2.nrows(),
                f2.ncols()
            )));
        }
        let w = block_row(&f1, &f2);
        if numerical_rank(&w, 1e-8) < n {
            return Err(Error::InvalidPoint("[F1 F2] does not have full row rank".into()));
        }
        let scale = max_abs(&w).powi(2).max(1.0);
        let violation = lagrangian_violation(&f1, &f2);
        if violation >= LAGRANGIAN_TOL * scale {
            return Err(Error::InvalidPoint(format!("F1 F2^t is not symmetric (violation {violation:.3e})")));
        }
        let plucker = normalize_plucker(&full_size_minors(&w, n)?);
        Ok(LagrangianPoint { f1, f2, plucker })
    }

    pub fn f1(&self) -> &ComplexMatrix {
        &self.f1
    }

    pub fn f2(&self) -> &ComplexMatrix {
        &self.f2
    }

    pub fn size(&self) -> usize {
        self.f1.nrows()
    }

    /// Normalized Plücker coordinates, lexicographic in the column tuple.
    pub fn plucker(&self) -> &[Complex64] {
        &self.plucker
    }

    /// Unnormalized maximal minors of `[F1 F2]`.
    pub fn raw_plucker(&self) -> Vec<Complex64> {
        full_size_minors(&block_row(&self.f1, &self.f2), self.size()).expect("shape checked at construction")
    }

    /// Point with the same row space, `[M F1  M F2]`.
    pub fn left_multiply(&self, m: &ComplexMatrix) -> Result<Self> {
        LagrangianPoint::new(m * &self.f1, m * &self.f2)
    }
}

/// `rowsp [F I]`
pub fn lagrangian_from_gain(gain: &SymmetricGain) -> LagrangianPoint {
    let n = gain.size();
    LagrangianPoint::new(gain.matrix().clone(), identity(n)).expect("[F I] is Lagrangian for symmetric F")
}

#[derive(Clone, Debug, PartialEq)]
pub enum GainChart {
    Finite(SymmetricGain),
    /// `F2` is singular or too ill-conditioned to invert.
    AtInfinity {
        condition: f64,
    },
}

/// `F2^-1 F1` when `F2` is comfortably invertible.
pub fn gain_from_lagrangian(point: &LagrangianPoint) -> GainChart {
    let condition = condition_number(point.f2());
    if condition.is_nan() || condition >= CHART_MAX_CONDITION {
        return GainChart::AtInfinity { condition };
    }
    let Ok(inv) = inverse(point.f2()) else {
        return GainChart::AtInfinity { condition: f64::INFINITY };
    };
    let f = inv * point.f1();
    debug_assert!(symmetry_violation(&f) < 1e-8 * max_abs(&f).max(1.0));
    GainChart::Finite(SymmetricGain::symmetrized(&f))
}

/// Cofactors `p_I(s)` with `det [[D, N], [F1, F2]] = sum_I f_I p_I`.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicData {
    pub cofactors: Vec<Poly>,
    pub n: usize,
    pub delta: usize,
}

impl CharacteristicData {
    /// `sum_I coords_I p_I(s)`
    pub fn combine(&self, coords: &[Complex64]) -> Poly {
        let mut acc = Poly::zero();
        for (f, p) in coords.iter().zip(&self.cofactors) {
            if *f != Complex64::zero() {
                acc = &acc + &p.scale(*f);
            }
        }
        acc
    }

    fn combination_scale(&self, coords: &[Complex64]) -> f64 {
        coords.iter().zip(&self.cofactors).map(|(f, p)| f.norm() * p.max_abs_coeff()).sum()
    }
}

/// Generalized Laplace expansion of `det [[D(s), N(s)], [F1, F2]]` along the
/// bottom `n` rows. For the bottom column set `I` (1-based),
/// `p_I = (-1)^(sum of bottom rows + sum I) * det [D N]_(complement of I)`.
pub fn characteristic_cofactors(d: &PolyMatrix, n_mat: &PolyMatrix) -> Result<CharacteristicData> {
    let n = d.rows();
    if d.cols() != n || n_mat.rows() != n || n_mat.cols() != n {
        return Err(Error::Dimension("D and N must be square of the same size".into()));
    }
    if n > MAX_COFACTOR_SIZE {
        return Err(Error::Scale(format!("cofactor expansion supports n <= {MAX_COFACTOR_SIZE}, got {n}")));
    }
    let top = d.hcat(n_mat)?;
    let minors = full_size_poly_minors(&top, n)?;
    let tuples = combinations(2 * n, n);
    let bottom_rows: usize = (n + 1..=2 * n).sum();
    let cofactors: Vec<Poly> = tuples
        .iter()
        .map(|cols| {
            let complement: Vec<usize> = (0..2 * n).filter(|c| !cols.contains(c)).collect();
            let idx = tuples.iter().position(|t| *t == complement).unwrap();
            let column_sum: usize = cols.iter().map(|c| c + 1).sum();
            if (bottom_rows + column_sum).is_multiple_of(2) {
                minors[idx].clone()
            } else {
                -&minors[idx]
            }
        })
        .collect();
    let delta = cofactors.iter().filter_map(Poly::degree).max().unwrap_or(0);
    Ok(CharacteristicData { cofactors, n, delta })
}

/// `sum_I f_I p_I(s)`, normalized to unit max coefficient.
pub fn chi(point: &LagrangianPoint, cd: &CharacteristicData) -> Result<Poly> {
    check_point_size(point, cd)?;
    let p = cd.combine(point.plucker());
    if p.max_abs_coeff() <= 1e-12 * cd.combination_scale(point.plucker()) {
        return Err(Error::BaseLocus);
    }
    Ok(p.normalized_max())
}

/// Even part of `sum_I f_I p_I(s)` as a polynomial in `s^2`, normalized.
pub fn chi_prime(point: &LagrangianPoint, cd: &CharacteristicData) -> Result<Poly> {
    check_point_size(point, cd)?;
    let p = cd.combine(point.plucker());
    let odd = p.odd_relative();
    if odd > ODD_PART_TOL {
        return Err(Error::NotHamiltonian { odd });
    }
    let even = p.even_part();
    if even.max_abs_coeff() <= 1e-12 * cd.combination_scale(point.plucker()) {
        return Err(Error::BaseLocus);
    }
    Ok(even.normalized_max())
}

fn check_point_size(point: &LagrangianPoint, cd: &CharacteristicData) -> Result<()> {
    if point.size() != cd.n {
        return Err(Error::Dimension(format!("point in LG({}) used with cofactors for n = {}", point.size(), cd.n)));
    }
    Ok(())
}

/// Coordinate of an arbitrary index sequence: sorted with the permutation
/// sign, zero when an index repeats.
fn signed_coordinate(coords: &[Complex64], m: usize, seq: &[usize]) -> Complex64 {
    let mut sorted = seq.to_vec();
    let mut sign = 1.0;
    for i in 0..sorted.len() {
        for j in 0..sorted.len() - 1 - i {
            if sorted[j] > sorted[j + 1] {
                sorted.swap(j, j + 1);
                sign = -sign;
            } else if sorted[j] == sorted[j + 1] {
                return Complex64::zero();
            }
        }
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Complex64::zero();
    }
    let idx = crate::polymat::combination_index(m, &sorted).expect("sorted tuple in range");
    coords[idx] * sign
}

/// Largest violation of the quadratic Plücker relations of `Grass(n, 2n)`,
/// relative to the largest coordinate squared.
pub fn plucker_relations_residual(coords: &[Complex64], n: usize) -> Result<f64> {
    if n > 3 {
        return Err(Error::Scale(format!("Plücker relations are generated for n <= 3, got {n}")));
    }
    let m = 2 * n;
    if coords.len() != combinations(m, n).len() {
        return Err(Error::Dimension(format!("expected {} coordinates", combinations(m, n).len())));
    }
    let scale = coords.iter().map(|c| c.norm()).fold(0.0, nan_max).powi(2).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for short in combinations(m, n - 1) {
        for long in combinations(m, n + 1) {
            let mut acc = Complex64::zero();
            for l in 0..long.len() {
                let mut first = short.clone();
                first.push(long[l]);
                let rest: Vec<usize> = long.iter().enumerate().filter(|(i, _)| *i != l).map(|(_, &v)| v).collect();
                let term = signed_coordinate(coords, m, &first) * signed_coordinate(coords, m, &rest);
                acc += if l % 2 == 0 { term } else { -term };
            }
            worst = worst.max(acc.norm() / scale);
        }
    }
    Ok(worst)
}

fn check_degree_range(n: usize) -> Result<()> {
    if !(1..=MAX_DEGREE_N).contains(&n) {
        return Err(Error::Scale(format!("degree formulas evaluated for 1 <= n <= {MAX_DEGREE_N}, got {n}")));
    }
    Ok(())
}

fn factorial(k: usize) -> BigUint {
    (1..=k as u64).fold(BigUint::one(), |acc, i| acc * i)
}

fn binomial2(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// `2^C(n,2) * C(n+1,2)! * 1! 2! ... (n-1)! / (1! 3! ... (2n-1)!)`
pub fn degree_lagrangian_factorial_form(n: usize) -> BigUint {
    let numerator =
        (BigUint::one() << binomial2(n)) * factorial(binomial2(n + 1)) * (1..n).map(factorial).product::<BigUint>();
    let denominator: BigUint = (1..=n).map(|k| factorial(2 * k - 1)).product();
    numerator / denominator
}

/// `C(n+1,2)! / prod_{i<n} (2i+1)^(n-i)`
pub fn degree_lagrangian_product_form(n: usize) -> BigUint {
    let denominator: BigUint = (0..n).map(|i| BigUint::from(2 * i as u64 + 1).pow((n - i) as u32)).product();
    factorial(binomial2(n + 1)) / denominator
}

/// Degree of the Lagrangian Grassmannian `LG(n)`, exact.
pub fn degree_lagrangian(n: usize) -> Result<BigUint> {
    check_degree_range(n)?;
    let a = degree_lagrangian_factorial_form(n);
    let b = degree_lagrangian_product_form(n);
    if a != b {
        return Err(Error::FormulaViolation(format!("closed forms disagree at n = {n}: {a} vs {b}")));
    }
    Ok(a)
}

/// `d(n) / 2^C(n,2)`
pub fn degree_spinor(n: usize) -> Result<BigUint> {
    let d = degree_lagrangian(n)?;
    let power = BigUint::one() << binomial2(n);
    if !(&d % &power).is_zero() {
        return Err(Error::FormulaViolation(format!("2^{} does not divide d({n}) = {d}", binomial2(n))));
    }
    Ok(d / power)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimensionVerdict {
    /// Every system of this shape has a base locus on `LG(n)`.
    Degenerate,
    /// Dimension count allows nondegenerate systems.
    Possible,
}

/// Degenerate when `delta < C(n+1,2)` (symmetric) or `delta < n(n+1)`
/// (Hamiltonian): the base locus is cut out by too few equations to be empty.
pub fn degeneracy_dimension_check(n: usize, delta: usize, hamiltonian: bool) -> DimensionVerdict {
    let threshold = if hamiltonian { n * (n + 1) } else { n * (n + 1) / 2 };
    if delta < threshold {
        DimensionVerdict::Degenerate
    } else {
        DimensionVerdict::Possible
    }
}

/// Left coprime factorization `[diag(s, ..., s^n)  I]` of
/// `G(s) = diag(1/s, ..., 1/s^n)`.
pub fn canonical_diagonal_example(n: usize) -> (PolyMatrix, PolyMatrix) {
    let d = PolyMatrix::diagonal(&(1..=n).map(|k| Poly::monomial(Complex64::one(), k)).collect::<Vec<_>>());
    let n_mat = PolyMatrix::diagonal(&vec![Poly::one(); n]);
    (d, n_mat)
}

/// Minimal realization of `G(s) = diag(1/s, ..., 1/s^n)` by integrator
/// chains of lengths `1, ..., n`.
pub fn canonical_diagonal_realization(n: usize) -> Result<StateSpace> {
    let delta = n * (n + 1) / 2;
    let mut a = ComplexMatrix::zeros(delta, delta);
    let mut b = ComplexMatrix::zeros(delta, n);
    let mut c = ComplexMatrix::zeros(n, delta);
    let mut offset = 0;
    for k in 1..=n {
        for i in 0..k - 1 {
            a[(offset + i, offset + i + 1)] = Complex64::one();
        }
        b[(offset + k - 1, k - 1)] = Complex64::one();
        c[(k - 1, offset)] = Complex64::one();
        offset += k;
    }
    StateSpace::new(a, b, c)
}

/// `I <= J` componentwise on ascending tuples.
pub fn bruhat_le(i: &[usize], j: &[usize]) -> bool {
    i.len() == j.len() && i.iter().zip(j).all(|(a, b)| a <= b)
}

pub fn bruhat_comparable(i: &[usize], j: &[usize]) -> bool {
    bruhat_le(i, j) || bruhat_le(j, i)
}

/// Pivot rule forced by isotropy: with lower pivots `i_1 < ... < i_k <= n`
/// and complement `h_1 < ... < h_(n-k)` in `1..n`, the upper pivots are
/// `i_(k+l) = 2n - h_(n-k-l+1) + 1`. Tuples are 1-based.
pub fn satisfies_pivot_rule(pivots: &[usize], n: usize) -> bool {
    let lower: Vec<usize> = pivots.iter().copied().filter(|&p| p <= n).collect();
    let upper: Vec<usize> = pivots.iter().copied().filter(|&p| p > n).collect();
    let hat: Vec<usize> = (1..=n).filter(|i| !lower.contains(i)).collect();
    let k = lower.len();
    upper.len() == n - k && (1..=n - k).all(|l| upper[l - 1] == 2 * n - hat[n - k - l] + 1)
}

/// Form pairing column `j` with `2n + 1 - j`: `x_1 R y_2^t - y_1 R x_2^t`.
fn reversed_pairing(x: &[Complex64], y: &[Complex64], n: usize) -> Complex64 {
    (0..n).map(|c| x[c] * y[2 * n - 1 - c] - y[c] * x[2 * n - 1 - c]).sum()
}

/// Random row-echelon matrix with the given 1-based pivots: each row ends
/// with a one at its pivot, has zeros at the other pivot columns, and random
/// entries elsewhere before the pivot.
fn random_echelon<R: Rng + ?Sized>(rng: &mut R, pivots: &[usize], n: usize) -> Vec<Vec<Complex64>> {
    pivots
        .iter()
        .map(|&p| {
            (1..=2 * n)
                .map(|c| {
                    if c == p {
                        Complex64::one()
                    } else if c > p || pivots.contains(&c) {
                        Complex64::zero()
                    } else {
                        crate::rng::complex_normal(rng)
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellReport {
    /// 1-based pivot columns of the echelon form of `[F1 F2 R]`.
    pub pivots: Vec<usize>,
    pub satisfies_rule: bool,
    /// Exponent predicted from the lower pivots' complement.
    pub alpha: usize,
    /// Sign of the cofactor when it is `±s^alpha`; `None` otherwise.
    pub cofactor_sign: Option<i8>,
    /// Coordinates below the pivots in Bruhat order whose cofactor also has
    /// an `s^alpha` term.
    pub conflicts: Vec<Vec<usize>>,
    /// With conflicts present, whether exact elimination over the cell's
    /// free entries refutes a vanishing determinant; `None` without
    /// conflicts.
    pub exact_refutation: Option<bool>,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyCertificate {
    pub n: usize,
    pub delta: usize,
    pub pivot_sets_examined: usize,
    /// Pivot sets with two rows pairing to a nonzero constant, so no
    /// isotropic subspace has them.
    pub excluded: usize,
    pub cells: Vec<CellReport>,
    pub passes: bool,
}

/// Combinatorial nondegeneracy proof for `G(s) = diag(1/s, ..., 1/s^n)`.
///
/// Works in the coordinates `[F1 F2 R]` (reversed second block). Every pivot
/// set of an echelon form is either excluded (it contains a pair `j`,
/// `2n + 1 - j`, whose rows pair to a nonzero constant) or witnessed by a
/// coordinate subspace; the witnessed sets must be exactly those of the pivot
/// rule. For each witnessed cell the cofactor of its top Plücker coordinate in
/// `[D(s) N(s) R]` must be `±s^alpha`, and no coordinate below it in Bruhat
/// order may contribute to `s^alpha`, so the determinant cannot vanish.
/// Cells where a lower coordinate does share the monomial (from `n = 3` on)
/// pass only if exact elimination over the cell's free entries shows the
/// coefficients of the determinant cannot all vanish.
pub fn nondegeneracy_certificate_diagonal(n: usize) -> Result<NondegeneracyCertificate> {
    if !(1..=MAX_COFACTOR_SIZE).contains(&n) {
        return Err(Error::Scale(format!("certificate supports 1 <= n <= {MAX_COFACTOR_SIZE}, got {n}")));
    }
    let (d, n_mat) = canonical_diagonal_example(n);
    let reversal =
        ComplexMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { Complex64::one() } else { Complex64::zero() });
    let cd = characteristic_cofactors(&d, &poly_times_constant(&n_mat, &reversal))?;
    let tuples = combinations(2 * n, n);
    let integer_cofactors = cd.cofactors.iter().map(integer_coefficients).collect::<Result<Vec<_>>>()?;
    let mut rng = phase_rng(n as u64, "certificate-echelon");

    let mut cells = Vec::new();
    let mut excluded = 0;
    let mut rule_matches = true;
    for (idx, cols) in tuples.iter().enumerate() {
        let pivots: Vec<usize> = cols.iter().map(|c| c + 1).collect();
        let rule = satisfies_pivot_rule(&pivots, n);
        if let Some(pairing) = forced_pairing(&mut rng, &pivots, n) {
            if pairing.norm() > 0.5 {
                excluded += 1;
                rule_matches &= !rule;
                continue;
            }
        }
        let witness: Vec<Vec<Complex64>> = pivots
            .iter()
            .map(|&p| (1..=2 * n).map(|c| if c == p { Complex64::one() } else { Complex64::zero() }).collect())
            .collect();
        let isotropic = (0..n).all(|a| (0..n).all(|b| reversed_pairing(&witness[a], &witness[b], n).norm() == 0.0));
        if !isotropic {
            return Err(Error::ConstructionFailed(format!("pivot set {pivots:?} is neither excluded nor witnessed")));
        }
        rule_matches &= rule;

        let hat: Vec<usize> = (1..=n).filter(|i| !pivots.contains(i)).collect();
        let alpha: usize = hat.iter().sum();
        let cofactor = &cd.cofactors[idx];
        let cofactor_sign = monomial_sign(cofactor, alpha);
        let conflicts: Vec<Vec<usize>> = tuples
            .iter()
            .enumerate()
            .filter(|(j, other)| *j != idx && bruhat_le(other, cols))
            .filter(|(j, _)| cd.cofactors[*j].coeff(alpha).norm() > 0.0)
            .map(|(_, other)| other.iter().map(|c| c + 1).collect())
            .collect();
        let exact_refutation = (!conflicts.is_empty()).then(|| refute_cell(&pivots, n, &tuples, &integer_cofactors));
        let passes = rule && cofactor_sign.is_some() && (conflicts.is_empty() || exact_refutation == Some(true));
        cells.push(CellReport {
            pivots,
            satisfies_rule: rule,
            alpha,
            cofactor_sign,
            conflicts,
            exact_refutation,
            passes,
        });
    }
    let passes = rule_matches && cells.len() == 1 << n && cells.iter().all(|c| c.passes);
    Ok(NondegeneracyCertificate { n, delta: cd.delta, pivot_sets_examined: tuples.len(), excluded, cells, passes })
}

fn poly_times_constant(m: &PolyMatrix, c: &ComplexMatrix) -> PolyMatrix {
    PolyMatrix::from_fn(m.rows(), c.ncols(), |i, j| {
        let mut acc = Poly::zero();
        for k in 0..m.cols() {
            if c[(k, j)] != Complex64::zero() {
                acc = &acc + &m.get(i, k).scale(c[(k, j)]);
            }
        }
        acc
    })
}

/// For a pivot set containing both `j` and `2n + 1 - j`, the pairing of the
/// two rows in two independent random echelon forms. They agree (and are
/// nonzero) because only the pivot entries meet.
fn forced_pairing<R: Rng + ?Sized>(rng: &mut R, pivots: &[usize], n: usize) -> Option<Complex64> {
    let a = pivots.iter().position(|&p| p <= n && pivots.contains(&(2 * n + 1 - p)))?;
    let b = pivots.iter().position(|&p| p == 2 * n + 1 - pivots[a])?;
    let first = random_echelon(rng, pivots, n);
    let second = random_echelon(rng, pivots, n);
    let v1 = reversed_pairing(&first[a], &first[b], n);
    let v2 = reversed_pairing(&second[a], &second[b], n);
    ((v1 - v2).norm() < 1e-12).then_some(v1)
}

fn integer_coefficients(p: &Poly) -> Result<Vec<i128>> {
    p.coeffs()
        .iter()
        .map(|c| {
            let r = c.re.round();
            if c.im == 0.0 && c.re == r {
                Ok(r as i128)
            } else {
                Err(Error::ConstructionFailed(format!("cofactor coefficient {c} is not an integer")))
            }
        })
        .collect()
}

fn monomial_sign(p: &Poly, alpha: usize) -> Option<i8> {
    let lone = p.coeffs().iter().enumerate().all(|(k, c)| k == alpha || c.norm() == 0.0);
    let c = p.coeff(alpha);
    if !lone {
        return None;
    }
    if c == Complex64::one() {
        Some(1)
    } else if c == -Complex64::one() {
        Some(-1)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseLocusSearch {
    pub starts: usize,
    /// Smallest max-abs residual reached over all starts.
    pub best_residual: f64,
    /// Starts that reached a residual below the threshold.
    pub hits: usize,
    pub threshold: f64,
}

impl BaseLocusSearch {
    pub fn found(&self) -> bool {
        self.hits > 0
    }
}

/// Randomized Gauss-Newton search for a point of `LG(n)` on which the
/// characteristic form vanishes identically. Unknown `W = [F1 F2]` with the
/// gauge `W K = I` for a random `K`; equations are the coefficients of
/// `sum_I f_I(W) p_I(s)`, the entries of `F1 F2^t - F2 F1^t`, and the gauge.
///
/// A refutation tool only: failing to find a point is evidence, not proof.
pub fn base_locus_search(cd: &CharacteristicData, starts: usize, seed: u64) -> BaseLocusSearch {
    const THRESHOLD: f64 = 1e-10;
    const ITERATIONS: usize = 80;
    let n = cd.n;
    let mut rng = phase_rng(seed, "base-locus");
    let mut best = f64::INFINITY;
    let mut hits = 0;
    for _ in 0..starts {
        let k = complex_normal_matrix(&mut rng, 2 * n, n);
        let mut w = complex_normal_matrix(&mut rng, n, 2 * n);
        let mut residual = f64::INFINITY;
        for _ in 0..ITERATIONS {
            let r = base_locus_equations(cd, &w, &k);
            residual = max_abs(&r);
            if residual < 1e-14 {
                break;
            }
            let jac = base_locus_jacobian(cd, &w, &k);
            let (step, _) = least_squares(&jac, &(-&r), 1e-12);
            let step_size = max_abs(&step);
            for (idx, v) in step.iter().enumerate() {
                w[(idx / (2 * n), idx % (2 * n))] += *v;
            }
            if !step_size.is_finite() || step_size < 1e-15 {
                break;
            }
        }
        let final_residual = max_abs(&base_locus_equations(cd, &w, &k)).min(residual);
        best = best.min(final_residual);
        if final_residual < THRESHOLD {
            hits += 1;
        }
    }
    BaseLocusSearch { starts, best_residual: best, hits, threshold: THRESHOLD }
}

fn base_locus_equations(cd: &CharacteristicData, w: &ComplexMatrix, k: &ComplexMatrix) -> ComplexMatrix {
    let n = cd.n;
    let minors = full_size_minors(w, n).expect("n x 2n");
    let p = cd.combine(&minors);
    let mut out: Vec<Complex64> = (0..=cd.delta).map(|i| p.coeff(i)).collect();
    let f1 = w.columns(0, n).into_owned();
    let f2 = w.columns(n, n).into_owned();
    let sym = &f1 * f2.transpose();
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(sym[(i, j)] - sym[(j, i)]);
        }
    }
    let gauge = w * k - identity(n);
    out.extend(gauge.iter().copied());
    ComplexMatrix::from_column_slice(out.len(), 1, &out)
}

/// Central differences in each complex entry; the equations are holomorphic.
fn base_locus_jacobian(cd: &CharacteristicData, w: &ComplexMatrix, k: &ComplexMatrix) -> ComplexMatrix {
    let n = cd.n;
    let h = 1e-6 * max_abs(w).max(1.0);
    let rows = base_locus_equations(cd, w, k).nrows();
    let mut jac = ComplexMatrix::zeros(rows, 2 * n * n);
    for idx in 0..2 * n * n {
        let (i, j) = (idx / (2 * n), idx % (2 * n));
        let mut plus = w.clone();
        plus[(i, j)] += h;
        let mut minus = w.clone();
        minus[(i, j)] -= h;
        let col =
            (base_locus_equations(cd, &plus, k) - base_locus_equations(cd, &minus, k)) / Complex64::new(2.0 * h, 0.0);
        jac.set_column(idx, &col.column(0));
    }
    jac
}

//! All symmetric gains placing the closed-loop poles, by total-degree
//! homotopy continuation.
//!
//! The unknowns are the `m = n(n+1)/2` free entries of `F`. The equations
//! match power sums: `trace((A + B F C)^k) = p_k(target)` for `k = 1..delta`,
//! or for the even `k` only in the Hamiltonian case. Equation `k` has degree
//! `k`, so the total-degree start system `x_i^(d_i) = c_i` has `prod d_i`
//! isolated roots, each tracked to the target system.
//!
//! Tracking runs in homogeneous coordinates `(z_0, z)` on a random affine
//! patch `a . (z_0, z) = 1`, so paths bound for infinity stay bounded and end
//! with `z_0 -> 0`. The affine gain is `z / z_0`.

use std::cmp::Ordering;

use nalgebra::DVector;
use num_complex::Complex64;
use num_traits::One;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polymat::{charpoly, condition_number, identity, max_abs, nan_max, ComplexMatrix, Poly};
use crate::realization::{block_hamiltonian, givens, is_minimal, HamiltonianSystem, SymmetricSystem};
use crate::rng::{complex_normal, complex_normal_matrix, phase_rng, unit_modulus};
use crate::spectral::{power_sums, symmetric_dim, symmetric_index_pairs, FeedbackSystem, SymmetricGain};

/// Relative odd-coefficient tolerance for Hamiltonian targets.
pub const EVEN_TARGET_TOL: f64 = 1e-10;
/// Max coefficient deviation accepted by [`verify_solution`].
pub const ACCEPT_TOL: f64 = 1e-7;
/// Attempts made by [`random_generic_system`] before giving up.
pub const GENERATION_ATTEMPTS: usize = 10;

/// A system closed by symmetric output feedback.
#[derive(Clone, Debug, PartialEq)]
pub enum PlacementSystem {
    Symmetric(SymmetricSystem),
    Hamiltonian(HamiltonianSystem),
}

impl PlacementSystem {
    pub fn is_hamiltonian(&self) -> bool {
        matches!(self, PlacementSystem::Hamiltonian(_))
    }

    fn as_feedback(&self) -> &dyn FeedbackSystem {
        match self {
            PlacementSystem::Symmetric(s) => s,
            PlacementSystem::Hamiltonian(h) => h,
        }
    }
}

impl FeedbackSystem for PlacementSystem {
    fn a(&self) -> &ComplexMatrix {
        self.as_feedback().a()
    }
    fn b(&self) -> &ComplexMatrix {
        self.as_feedback().b()
    }
    fn output_map(&self) -> ComplexMatrix {
        self.as_feedback().output_map()
    }
}

impl From<SymmetricSystem> for PlacementSystem {
    fn from(s: SymmetricSystem) -> Self {
        PlacementSystem::Symmetric(s)
    }
}

impl From<HamiltonianSystem> for PlacementSystem {
    fn from(h: HamiltonianSystem) -> Self {
        PlacementSystem::Hamiltonian(h)
    }
}

/// Find symmetric `F` with `charpoly(A + B F C) = target`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementProblem {
    system: PlacementSystem,
    target: Poly,
}

impl PlacementProblem {
    pub fn new(system: impl Into<PlacementSystem>, target: Poly) -> Result<Self> {
        let system = system.into();
        let delta = system.state_dim();
        if target.degree() != Some(delta) || !target.is_monic(1e-12) {
            return Err(Error::Precondition(format!(
                "target must be monic of degree {delta}, got degree {:?}",
                target.degree()
            )));
        }
        if system.is_hamiltonian() {
            let odd = target.odd_relative();
            if odd > EVEN_TARGET_TOL {
                return Err(Error::NotHamiltonian { odd });
            }
        }
        Ok(PlacementProblem { system, target })
    }

    pub fn system(&self) -> &PlacementSystem {
        &self.system
    }

    pub fn target(&self) -> &Poly {
        &self.target
    }

    pub fn unknowns(&self) -> usize {
        symmetric_dim(self.system.input_dim())
    }
}

/// Shape of the polynomial system behind a placement problem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientSystem {
    pub equations: usize,
    pub unknowns: usize,
    pub degrees: Vec<usize>,
    pub hamiltonian: bool,
}

impl CoefficientSystem {
    pub fn is_square(&self) -> bool {
        self.equations == self.unknowns
    }

    /// Product of the equation degrees (saturating).
    pub fn bezout_number(&self) -> u64 {
        self.degrees.iter().fold(1u64, |acc, &d| acc.saturating_mul(d as u64))
    }
}

pub fn coefficient_system(prob: &PlacementProblem) -> CoefficientSystem {
    let delta = prob.system.state_dim();
    let hamiltonian = prob.system.is_hamiltonian();
    let degrees: Vec<usize> =
        if hamiltonian { (1..=delta / 2).map(|k| 2 * k).collect() } else { (1..=delta).collect() };
    CoefficientSystem { equations: degrees.len(), unknowns: prob.unknowns(), degrees, hamiltonian }
}

/// Tolerances and step control for path tracking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Newton iterations allowed per corrector call.
    pub max_newton: usize,
    /// Corrector convergence, relative to the point's norm.
    pub corrector_tol: f64,
    /// Affine gain norm beyond which an endpoint is at infinity.
    pub divergence_norm: f64,
    /// Residual required after polishing an endpoint, relative to the size
    /// of the trace terms.
    pub polish_tol: f64,
    /// Max-norm radius for merging endpoints, relative to their norm.
    pub cluster_radius: f64,
    /// Paths stalling before `t = 1 - endgame_zone` count as failures.
    pub endgame_zone: f64,
    pub max_failure_rate: f64,
    pub max_paths: u64,
    pub max_steps_per_path: usize,
    /// Monodromy loops in a row without a new solution before completion
    /// stops; zero disables it.
    pub monodromy_stall: usize,
    /// Rounds of re-tracking paths that share a nonsingular endpoint.
    pub retrack_rounds: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            initial_step: 1e-2,
            max_step: 0.05,
            min_step: 1e-14,
            max_newton: 4,
            corrector_tol: 1e-7,
            divergence_norm: 1e8,
            polish_tol: 1e-10,
            cluster_radius: 1e-6,
            endgame_zone: 1e-3,
            max_failure_rate: 0.05,
            max_paths: 100_000,
            max_steps_per_path: 200_000,
            monodromy_stall: 10,
            retrack_rounds: 2,
            threads: None,
        }
    }
}

/// Finite solutions with path accounting.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSet {
    pub gains: Vec<SymmetricGain>,
    /// Max coefficient deviation of each gain's closed-loop polynomial.
    pub residuals: Vec<f64>,
    /// Number of paths ending at each gain.
    pub cluster_multiplicities: Vec<usize>,
    pub paths_tracked: usize,
    /// Paths not ending at a finite solution, including failures.
    pub paths_diverged: usize,
    /// Diverged paths whose endpoint lies on the base locus of the
    /// characteristic map.
    pub paths_to_base_locus: usize,
    /// Paths that stalled before the endgame.
    pub paths_failed: usize,
    /// Solutions found only by monodromy completion; their multiplicity is 0.
    pub monodromy_found: usize,
    pub seed: u64,
}

impl SolutionSet {
    pub fn finite_count(&self) -> usize {
        self.gains.len()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, nan_max)
    }
}

/// Residual of a candidate gain against the target polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub max_deviation: f64,
    pub passes: bool,
}

pub fn verify_solution<S: FeedbackSystem + ?Sized>(
    sys: &S,
    gain: &SymmetricGain,
    target: &Poly,
) -> Result<VerificationReport> {
    let m = crate::spectral::closed_loop_matrix(sys, gain)?;
    let max_deviation = charpoly(&m)?.max_coeff_diff(target);
    Ok(VerificationReport { max_deviation, passes: max_deviation < ACCEPT_TOL })
}

/// Random complex orthogonal matrix: a product of Givens rotations with
/// angles of small imaginary part, keeping the conditioning moderate.
fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, size: usize) -> ComplexMatrix {
    let mut q = identity(size);
    for i in 0..size {
        for j in (i + 1)..size {
            let angle = Complex64::new(rng.random_range(0.0..std::f64::consts::TAU), 0.3 * complex_normal(rng).re);
            q = givens(size, i, j, angle) * q;
        }
    }
    q
}

/// Random minimal system: `A = Q D Q^t`, Gaussian `B` in the symmetric case;
/// the block construction with random `S1`, `D1`, `B1` in the Hamiltonian
/// case (`delta` even).
pub fn random_generic_system(n: usize, delta: usize, hamiltonian: bool, seed: u64) -> Result<PlacementSystem> {
    if delta == 0 || n == 0 {
        return Err(Error::Dimension("state and input dimensions must be positive".into()));
    }
    if hamiltonian && !delta.is_multiple_of(2) {
        return Err(Error::Dimension(format!("Hamiltonian state dimension must be even, got {delta}")));
    }
    let mut rng = phase_rng(seed, "system");
    for _ in 0..GENERATION_ATTEMPTS {
        let system: PlacementSystem = if hamiltonian {
            let half = delta / 2;
            let s1 = random_orthogonal(&mut rng, half);
            let d1: Vec<Complex64> = (0..half).map(|_| complex_normal(&mut rng)).collect();
            let b1 = complex_normal_matrix(&mut rng, half, n);
            block_hamiltonian(&s1, &d1, &b1)?.into()
        } else {
            let q = random_orthogonal(&mut rng, delta);
            let d: Vec<Complex64> = (0..delta).map(|_| complex_normal(&mut rng)).collect();
            let a = &q * crate::polymat::diagonal(&d) * q.transpose();
            let a = crate::polymat::symmetrize(&a);
            let b = complex_normal_matrix(&mut rng, delta, n);
            SymmetricSystem::new(a, b)?.into()
        };
        let ss = crate::realization::StateSpace::new(system.a().clone(), system.b().clone(), system.output_map())?;
        if is_minimal(&ss).minimal {
            return Ok(system);
        }
    }
    Err(Error::Generation { attempts: GENERATION_ATTEMPTS })
}

/// Random monic target of degree `delta` (even, with roots `±r`, when
/// `hamiltonian`).
pub fn random_target(delta: usize, hamiltonian: bool, seed: u64) -> Poly {
    let mut rng = phase_rng(seed, "target");
    let roots: Vec<Complex64> = if hamiltonian {
        (0..delta / 2)
            .flat_map(|_| {
                let r = complex_normal(&mut rng);
                [r, -r]
            })
            .collect()
    } else {
        (0..delta).map(|_| complex_normal(&mut rng)).collect()
    };
    Poly::from_roots(&roots)
}

/// The target equations in homogeneous form:
/// `w_k (trace((z_0 A + B X(z) C)^k) - p_k z_0^k)`.
struct TargetEquations {
    a: ComplexMatrix,
    b: ComplexMatrix,
    c: ComplexMatrix,
    orders: Vec<usize>,
    sums: Vec<Complex64>,
    weights: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    n: usize,
}

impl TargetEquations {
    fn new(prob: &PlacementProblem, orders: Vec<usize>) -> Self {
        let system = &prob.system;
        let max_order = orders.iter().copied().max().unwrap_or(0);
        let all = power_sums(&prob.target, max_order);
        let sums: Vec<Complex64> = orders.iter().map(|&k| all.0[k - 1]).collect();
        let weights = sums.iter().map(|s| 1.0 / s.norm().max(1.0)).collect();
        let n = system.input_dim();
        TargetEquations {
            a: system.a().clone(),
            b: system.b().clone(),
            c: system.output_map(),
            orders,
            sums,
            weights,
            pairs: symmetric_index_pairs(n),
            n,
        }
    }

    fn unknowns(&self) -> usize {
        self.pairs.len()
    }

    fn gain(&self, params: &[Complex64]) -> ComplexMatrix {
        let mut f = ComplexMatrix::zeros(self.n, self.n);
        for (&(i, j), &v) in self.pairs.iter().zip(params) {
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
        f
    }

    /// Values and the Jacobian with respect to `(z_0, z_1, ..., z_m)`.
    fn eval(&self, z0: Complex64, params: &[Complex64]) -> (Vec<Complex64>, ComplexMatrix) {
        let m = self.unknowns();
        let closed = &self.a * z0 + &self.b * self.gain(params) * &self.c;
        let max_order = self.orders.iter().copied().max().unwrap_or(0);
        let mut pow = vec![identity(closed.nrows())];
        for k in 1..=max_order {
            pow.push(&pow[k - 1] * &closed);
        }
        let mut values = Vec::with_capacity(self.orders.len());
        let mut jac = ComplexMatrix::zeros(self.orders.len(), m + 1);
        for (row, &k) in self.orders.iter().enumerate() {
            let w = self.weights[row];
            let kf = k as f64;
            values.push((pow[k].trace() - self.sums[row] * z0.powu(k as u32)) * w);
            jac[(row, 0)] = ((&pow[k - 1] * &self.a).trace() - self.sums[row] * z0.powu(k as u32 - 1)) * (w * kf);
            let core = &self.c * &pow[k - 1] * &self.b;
            for (col, &(i, j)) in self.pairs.iter().enumerate() {
                let v = if i == j { core[(i, i)] } else { core[(i, j)] + core[(j, i)] };
                jac[(row, col + 1)] = v * (w * kf);
            }
        }
        (values, jac)
    }

    /// Residuals divided by the size of the terms they cancel, so that
    /// rounding in `trace(M^k)` at large gains does not read as an error.
    fn scaled_residual(&self, params: &[Complex64], values: &[Complex64]) -> f64 {
        let closed = &self.a + &self.b * self.gain(params) * &self.c;
        let norm = closed.norm();
        values
            .iter()
            .zip(&self.orders)
            .zip(&self.weights)
            .map(|((v, &k), w)| v.norm() / (1.0 + w * norm.powi(k as i32)))
            .fold(0.0, nan_max)
    }

    /// Affine chart `z_0 = 1`.
    fn eval_affine(&self, params: &[Complex64]) -> (Vec<Complex64>, ComplexMatrix) {
        let (values, jac) = self.eval(Complex64::one(), params);
        let m = self.unknowns();
        (values, jac.columns(1, m).into_owned())
    }
}

struct Homotopy<'a> {
    target: &'a TargetEquations,
    degrees: Vec<usize>,
    start_constants: Vec<Complex64>,
    gamma: Complex64,
    patch: Vec<Complex64>,
}

impl Homotopy<'_> {
    fn dim(&self) -> usize {
        self.degrees.len() + 1
    }

    /// `H(z, t)`, `dH/dz` and `dH/dt`, with the patch as the last row.
    fn eval(&self, z: &DVector<Complex64>, t: f64) -> (DVector<Complex64>, ComplexMatrix, DVector<Complex64>) {
        let dim = self.dim();
        let m = dim - 1;
        let z0 = z[0];
        let params: Vec<Complex64> = z.iter().skip(1).copied().collect();
        let (f_val, f_jac) = self.target.eval(z0, &params);
        let mut h = DVector::zeros(dim);
        let mut hz = ComplexMatrix::zeros(dim, dim);
        let mut ht = DVector::zeros(dim);
        let s = Complex64::new(1.0 - t, 0.0) * self.gamma;
        for i in 0..m {
            let d = self.degrees[i] as u32;
            let g = z[i + 1].powu(d) - self.start_constants[i] * z0.powu(d);
            h[i] = s * g + f_val[i] * t;
            ht[i] = f_val[i] - self.gamma * g;
            for j in 0..dim {
                hz[(i, j)] = f_jac[(i, j)] * t;
            }
            let df = d as f64;
            hz[(i, 0)] -= s * self.start_constants[i] * z0.powu(d - 1) * df;
            hz[(i, i + 1)] += s * z[i + 1].powu(d - 1) * df;
        }
        h[m] = self.patch.iter().zip(z.iter()).map(|(a, v)| a * v).sum::<Complex64>() - Complex64::one();
        for j in 0..dim {
            hz[(m, j)] = self.patch[j];
        }
        (h, hz, ht)
    }
}

impl PathSystem for Homotopy<'_> {
    fn eval(&self, z: &DVector<Complex64>, t: f64) -> (DVector<Complex64>, ComplexMatrix, DVector<Complex64>) {
        Homotopy::eval(self, z, t)
    }
}

/// Closed-loop characteristic polynomial coefficients as functions of the
/// gain parameters. Only the coefficients that are not identically zero
/// take part: all below the leading one, or those of even polynomials in
/// the Hamiltonian case. At large gains these are computed far more
/// accurately than trace powers.
struct ClosedLoopCoefficients<'a> {
    prob: &'a PlacementProblem,
    n: usize,
    indices: Vec<usize>,
}

impl<'a> ClosedLoopCoefficients<'a> {
    fn new(prob: &'a PlacementProblem) -> Self {
        let delta = prob.system.state_dim();
        let hamiltonian = prob.system.is_hamiltonian();
        let indices = (0..delta).filter(|k| !hamiltonian || (delta - k).is_multiple_of(2)).collect();
        ClosedLoopCoefficients { prob, n: prob.system.input_dim(), indices }
    }

    fn of(&self, poly: &Poly) -> Vec<Complex64> {
        self.indices.iter().map(|&k| poly.coeff(k)).collect()
    }

    fn values(&self, params: &[Complex64]) -> Option<Vec<Complex64>> {
        let gain = SymmetricGain::from_params(self.n, params).ok()?;
        let m = crate::spectral::closed_loop_matrix(&self.prob.system, &gain).ok()?;
        Some(self.of(&charpoly(&m).ok()?))
    }

    /// Central-difference Jacobian.
    fn jacobian(&self, params: &[Complex64]) -> Option<ComplexMatrix> {
        let mut jac = ComplexMatrix::zeros(self.indices.len(), params.len());
        for j in 0..params.len() {
            let h = 1e-7 * (1.0 + params[j].norm());
            let mut plus = params.to_vec();
            plus[j] += h;
            let mut minus = params.to_vec();
            minus[j] -= h;
            let (a, b) = (self.values(&plus)?, self.values(&minus)?);
            for i in 0..a.len() {
                jac[(i, j)] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        Some(jac)
    }
}

/// Moves the target coefficients along a straight segment, in the affine
/// chart. A real segment between generic complex endpoints misses the
/// discriminant, so the tracked roots stay simple.
struct TargetSegment<'a> {
    map: &'a ClosedLoopCoefficients<'a>,
    from: Vec<Complex64>,
    to: Vec<Complex64>,
    weights: Vec<f64>,
}

impl PathSystem for TargetSegment<'_> {
    fn eval(&self, z: &DVector<Complex64>, t: f64) -> (DVector<Complex64>, ComplexMatrix, DVector<Complex64>) {
        let m = self.weights.len();
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let (Some(values), Some(mut jac)) = (self.map.values(z.as_slice()), self.map.jacobian(z.as_slice())) else {
            return (
                DVector::from_element(m, nan),
                ComplexMatrix::from_element(m, z.len(), nan),
                DVector::from_element(m, nan),
            );
        };
        let h = DVector::from_iterator(
            m,
            (0..m).map(|i| (values[i] - self.from[i] * (1.0 - t) - self.to[i] * t) * self.weights[i]),
        );
        for (i, w) in self.weights.iter().enumerate() {
            jac.row_mut(i).scale_mut(*w);
        }
        let ht = DVector::from_iterator(m, (0..m).map(|i| (self.from[i] - self.to[i]) * self.weights[i]));
        (h, jac, ht)
    }
}

/// A square system `H(z, t) = 0` tracked from `t = 0` to `t = 1`.
trait PathSystem {
    /// `H(z, t)`, `dH/dz` and `dH/dt`.
    fn eval(&self, z: &DVector<Complex64>, t: f64) -> (DVector<Complex64>, ComplexMatrix, DVector<Complex64>);

    fn tangent(&self, z: &DVector<Complex64>, t: f64) -> Option<DVector<Complex64>> {
        let (_, hz, ht) = self.eval(z, t);
        hz.lu().solve(&(-ht))
    }

    /// Newton on `H(., t)`; `None` when it does not contract to tolerance.
    fn correct(&self, mut z: DVector<Complex64>, t: f64, cfg: &SolverConfig) -> Option<DVector<Complex64>> {
        let mut previous = f64::INFINITY;
        for _ in 0..cfg.max_newton {
            let (h, hz, _) = self.eval(&z, t);
            let delta = hz.lu().solve(&(-h))?;
            let size = inf_norm(&delta);
            let scale = 1.0 + inf_norm(&z);
            if !size.is_finite() || size > 0.1 * scale || size > 0.5 * previous {
                return None;
            }
            z += delta;
            if size <= cfg.corrector_tol * scale {
                return Some(z);
            }
            previous = size;
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
enum PathEnd {
    Finite { params: Vec<Complex64>, residual: f64 },
    Diverged { base_locus: bool },
    Failed,
}

fn inf_norm(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, nan_max)
}

fn start_point(homotopy: &Homotopy<'_>, index: u64) -> DVector<Complex64> {
    let m = homotopy.degrees.len();
    let mut z = DVector::zeros(m + 1);
    z[0] = Complex64::one();
    let mut rest = index;
    for i in 0..m {
        let d = homotopy.degrees[i] as u64;
        let j = rest % d;
        rest /= d;
        let root = homotopy.start_constants[i].powf(1.0 / d as f64);
        let turn = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / d as f64);
        z[i + 1] = root * turn;
    }
    let dot: Complex64 = homotopy.patch.iter().zip(z.iter()).map(|(a, v)| a * v).sum();
    z / dot
}

fn track_path(homotopy: &Homotopy<'_>, index: u64, cfg: &SolverConfig) -> (DVector<Complex64>, f64, bool) {
    track(homotopy, start_point(homotopy, index), cfg)
}

/// Predictor-corrector from `t = 0`; returns the last point, its `t` and
/// whether `t = 1` was reached.
fn track<S: PathSystem>(system: &S, start: DVector<Complex64>, cfg: &SolverConfig) -> (DVector<Complex64>, f64, bool) {
    let mut z = start;
    let mut t = 0.0;
    let mut h = cfg.initial_step;
    let mut streak = 0;
    for _ in 0..cfg.max_steps_per_path {
        if t >= 1.0 {
            return (z, 1.0, true);
        }
        let step = h.min(1.0 - t);
        let next_t = if step >= 1.0 - t { 1.0 } else { t + step };
        let predicted = rk4(system, &z, t, next_t - t);
        match predicted.and_then(|p| system.correct(p, next_t, cfg)) {
            Some(corrected) => {
                z = corrected;
                t = next_t;
                streak += 1;
                if streak >= 3 {
                    h = (2.0 * h).min(cfg.max_step);
                    streak = 0;
                }
            }
            None => {
                h *= 0.5;
                streak = 0;
                if h < cfg.min_step {
                    return (z, t, false);
                }
            }
        }
    }
    (z, t, t >= 1.0)
}

fn rk4<S: PathSystem>(homotopy: &S, z: &DVector<Complex64>, t: f64, dt: f64) -> Option<DVector<Complex64>> {
    let half = Complex64::new(dt / 2.0, 0.0);
    let full = Complex64::new(dt, 0.0);
    let k1 = homotopy.tangent(z, t)?;
    let k2 = homotopy.tangent(&(z + &k1 * half), t + dt / 2.0)?;
    let k3 = homotopy.tangent(&(z + &k2 * half), t + dt / 2.0)?;
    let k4 = homotopy.tangent(&(z + &k3 * full), t + dt)?;
    Some(z + (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0))
}

/// Newton on the affine target equations.
fn polish(target: &TargetEquations, start: &[Complex64], cfg: &SolverConfig) -> Option<(Vec<Complex64>, f64)> {
    let mut x = DVector::from_column_slice(start);
    for _ in 0..30 {
        let (values, jac) = target.eval_affine(x.as_slice());
        let residual = values.iter().map(|v| v.norm()).fold(0.0, nan_max);
        let r = DVector::from_vec(values);
        let delta = jac.lu().solve(&(-r))?;
        if !inf_norm(&delta).is_finite() {
            return None;
        }
        x += &delta;
        if inf_norm(&delta) <= 1e-14 * (1.0 + inf_norm(&x)) || residual == 0.0 {
            break;
        }
    }
    let (values, _) = target.eval_affine(x.as_slice());
    let residual = target.scaled_residual(x.as_slice(), &values);
    (residual < cfg.polish_tol).then(|| (x.iter().copied().collect(), residual))
}

/// Whether `rowsp [X  z_0 I]` (orthonormalized) makes
/// `det(F2 - F1 C (sI - A)^-1 B)` vanish at sample points.
fn on_base_locus(prob: &PlacementProblem, target: &TargetEquations, z: &DVector<Complex64>) -> bool {
    let n = target.n;
    let x = target.gain(&z.iter().skip(1).copied().collect::<Vec<_>>());
    let mut w = ComplexMatrix::zeros(n, 2 * n);
    w.view_mut((0, 0), (n, n)).copy_from(&x);
    w.view_mut((0, n), (n, n)).copy_from(&(identity(n) * z[0]));
    let svd = w.clone().svd(false, true);
    let sv = &svd.singular_values;
    if sv.len() < n || sv[n - 1] <= 1e-8 * sv[0] {
        return false;
    }
    let Some(v_t) = svd.v_t else { return false };
    let f1 = v_t.view((0, 0), (n, n)).into_owned();
    let f2 = v_t.view((0, n), (n, n)).into_owned();
    let a = prob.system.a();
    let delta = a.nrows();
    let radius = 2.0 * (1.0 + max_abs(a) * delta as f64);
    [0.3, 2.1, 4.4].iter().all(|&angle| {
        let s = Complex64::from_polar(radius, angle);
        let resolvent = (identity(delta) * s - a).lu().solve(&target.b);
        match resolvent {
            Some(r) => (&f2 - &f1 * &target.c * r).determinant().norm() < 1e-6,
            None => false,
        }
    })
}

fn classify(
    prob: &PlacementProblem,
    homotopy: &Homotopy<'_>,
    z: &DVector<Complex64>,
    t: f64,
    reached: bool,
    cfg: &SolverConfig,
) -> PathEnd {
    if !reached && t < 1.0 - cfg.endgame_zone {
        return PathEnd::Failed;
    }
    let target = homotopy.target;
    let z0 = z[0];
    let affine: Vec<Complex64> = z.iter().skip(1).map(|v| v / z0).collect();
    let norm = affine.iter().map(|v| v.norm()).fold(0.0, nan_max);
    let diverged = || PathEnd::Diverged { base_locus: on_base_locus(prob, target, z) };
    if z0.norm() == 0.0 || !norm.is_finite() || norm > cfg.divergence_norm {
        return diverged();
    }
    match finish_endpoint(prob, target, &affine, cfg) {
        Some((params, residual)) => PathEnd::Finite { params, residual },
        None => diverged(),
    }
}

/// Polishes an affine endpoint and accepts it if Newton stays close and the
/// closed-loop coefficients match the target. Large gains, where the trace
/// powers are too inaccurate to polish, go straight to coefficient Newton.
fn finish_endpoint(
    prob: &PlacementProblem,
    target: &TargetEquations,
    affine: &[Complex64],
    cfg: &SolverConfig,
) -> Option<(Vec<Complex64>, f64)> {
    let radius = 1e-5 * (1.0 + affine.iter().map(|v| v.norm()).fold(0.0, nan_max));
    let start = match polish(target, affine, cfg) {
        Some((params, _)) if max_distance(&params, affine) <= radius => params,
        _ => affine.to_vec(),
    };
    let (params, residual) = refine_coefficients(prob, start);
    (residual < ACCEPT_TOL && max_distance(&params, affine) <= radius).then_some((params, residual))
}

/// Completes a partial solution list by monodromy. Each loop moves the
/// target coefficients around a random triangle and tracks every known
/// solution along it; verified endpoints not yet known are new solutions.
/// Stops after `cfg.monodromy_stall` loops in a row find nothing.
fn monodromy<R: Rng + ?Sized>(
    prob: &PlacementProblem,
    target: &TargetEquations,
    known: &[Vec<Complex64>],
    rng: &mut R,
    cfg: &SolverConfig,
) -> Vec<(Vec<Complex64>, f64)> {
    let mut found: Vec<(Vec<Complex64>, f64)> = Vec::new();
    if known.is_empty() || cfg.monodromy_stall == 0 {
        return found;
    }
    let map = ClosedLoopCoefficients::new(prob);
    let home = map.of(&prob.target);
    let weights: Vec<f64> = home.iter().map(|c| 1.0 / (1.0 + c.norm())).collect();
    let mut idle = 0;
    for _ in 0..cfg.monodromy_stall * MONODROMY_LOOP_FACTOR {
        if idle >= cfg.monodromy_stall {
            break;
        }
        let mut corner =
            || -> Vec<Complex64> { home.iter().map(|p| p + complex_normal(rng) * (1.0 + p.norm())).collect() };
        let (q1, q2) = (corner(), corner());
        let legs = [
            TargetSegment { map: &map, from: home.clone(), to: q1.clone(), weights: weights.clone() },
            TargetSegment { map: &map, from: q1, to: q2.clone(), weights: weights.clone() },
            TargetSegment { map: &map, from: q2, to: home.clone(), weights: weights.clone() },
        ];
        let starts: Vec<&Vec<Complex64>> = known.iter().chain(found.iter().map(|f| &f.0)).collect();
        let ends: Vec<Option<(Vec<Complex64>, f64)>> = starts
            .par_iter()
            .map(|start| {
                let mut z = DVector::from_column_slice(start);
                for leg in &legs {
                    let (next, _, reached) = track(leg, z, cfg);
                    if !reached {
                        return None;
                    }
                    z = next;
                }
                finish_endpoint(prob, target, z.as_slice(), cfg)
            })
            .collect();
        let before = found.len();
        for (params, residual) in ends.into_iter().flatten() {
            let seen =
                known.iter().chain(found.iter().map(|f| &f.0)).any(|k| same_point(k, &params, cfg.cluster_radius));
            if !seen {
                found.push((params, residual));
            }
        }
        idle = if found.len() > before { 0 } else { idle + 1 };
    }
    found
}

/// Cap on monodromy loops, as a multiple of the stall count.
const MONODROMY_LOOP_FACTOR: usize = 10;

/// Newton on the closed-loop coefficients themselves, with a least-squares
/// step. Returns the best iterate and its max coefficient deviation.
fn refine_coefficients(prob: &PlacementProblem, start: Vec<Complex64>) -> (Vec<Complex64>, f64) {
    let map = ClosedLoopCoefficients::new(prob);
    let goal = map.of(&prob.target);
    let deviation = |x: &[Complex64]| -> Option<Vec<Complex64>> {
        Some(map.values(x)?.iter().zip(&goal).map(|(v, g)| v - g).collect())
    };
    let size = |r: &[Complex64]| r.iter().map(|c| c.norm()).fold(0.0, nan_max);
    let Some(mut r) = deviation(&start) else {
        return (start, f64::INFINITY);
    };
    let mut best = (start.clone(), size(&r));
    let mut x = start;
    for _ in 0..REFINE_STEPS {
        let Some(jac) = map.jacobian(&x) else {
            return best;
        };
        let Ok(step) = jac.svd(true, true).solve(&(-DVector::from_vec(r.clone())), 1e-12) else {
            return best;
        };
        x.iter_mut().zip(step.iter()).for_each(|(v, d)| *v += d);
        match deviation(&x) {
            Some(next) => r = next,
            None => return best,
        }
        if size(&r) < best.1 {
            best = (x.clone(), size(&r));
        }
    }
    best
}

/// Coefficient-space Newton steps after polishing.
const REFINE_STEPS: usize = 3;

fn run_paths(prob: &PlacementProblem, homotopy: &Homotopy<'_>, indices: &[u64], cfg: &SolverConfig) -> Vec<PathEnd> {
    indices
        .par_iter()
        .map(|&idx| {
            let (z, t, reached) = track_path(homotopy, idx, cfg);
            classify(prob, homotopy, &z, t, reached, cfg)
        })
        .collect()
}

fn param_order(a: &[Complex64], b: &[Complex64]) -> Ordering {
    let re = a.iter().map(|v| v.re).partial_cmp(b.iter().map(|v| v.re));
    let im = a.iter().map(|v| v.im).partial_cmp(b.iter().map(|v| v.im));
    re.unwrap_or(Ordering::Equal).then(im.unwrap_or(Ordering::Equal))
}

fn max_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, nan_max)
}

/// Whether two endpoints agree within `radius` relative to their size.
fn same_point(a: &[Complex64], b: &[Complex64], radius: f64) -> bool {
    let size = a.iter().chain(b).map(|v| v.norm()).fold(0.0, nan_max);
    max_distance(a, b) < radius * (1.0 + size)
}

/// Groups of path indices whose finite endpoints lie within the radius.
fn cluster(ends: &[PathEnd], radius: f64) -> Vec<Vec<usize>> {
    let finite: Vec<usize> = (0..ends.len()).filter(|&i| matches!(ends[i], PathEnd::Finite { .. })).collect();
    let params = |i: usize| match &ends[i] {
        PathEnd::Finite { params, .. } => params.as_slice(),
        _ => unreachable!(),
    };
    let mut parent: Vec<usize> = (0..finite.len()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for a in 0..finite.len() {
        for b in (a + 1)..finite.len() {
            if same_point(params(finite[a]), params(finite[b]), radius) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; finite.len()];
    for (a, &path) in finite.iter().enumerate() {
        let r = find(&mut parent, a);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(path);
    }
    groups
}

fn is_nonsingular(target: &TargetEquations, params: &[Complex64]) -> bool {
    let (_, jac) = target.eval_affine(params);
    condition_number(&jac) < 1e8
}

/// Solves a square placement problem by total-degree homotopy.
///
/// Paths ending on an already-claimed nonsingular solution are re-tracked
/// with smaller steps, since two paths cannot share a simple root. Finite
/// solutions whose paths were lost near the crowded set at infinity are
/// then recovered by monodromy from the ones found.
pub fn solve(prob: &PlacementProblem, seed: u64, cfg: &SolverConfig) -> Result<SolutionSet> {
    let shape = coefficient_system(prob);
    if !shape.is_square() {
        return Err(Error::Precondition(format!(
            "homotopy needs a square system, got {} equations in {} unknowns",
            shape.equations, shape.unknowns
        )));
    }
    let total = shape.bezout_number();
    if total > cfg.max_paths {
        return Err(Error::Scale(format!("{total} paths exceed the configured maximum {}", cfg.max_paths)));
    }
    let orders = shape.degrees.clone();
    let target = TargetEquations::new(prob, orders);
    let mut rng = phase_rng(seed, "homotopy");
    let start_constants: Vec<Complex64> = (0..shape.unknowns).map(|_| unit_modulus(&mut rng)).collect();
    let gamma = unit_modulus(&mut rng);
    let patch: Vec<Complex64> = (0..=shape.unknowns).map(|_| complex_normal(&mut rng)).collect();
    let homotopy = Homotopy { target: &target, degrees: shape.degrees.clone(), start_constants, gamma, patch };

    let indices: Vec<u64> = (0..total).collect();
    let run = || -> (Vec<PathEnd>, Vec<(Vec<Complex64>, f64)>) {
        let mut ends = run_paths(prob, &homotopy, &indices, cfg);
        let mut step_cfg = cfg.clone();
        for _ in 0..cfg.retrack_rounds {
            let suspects: Vec<usize> = cluster(&ends, cfg.cluster_radius)
                .into_iter()
                .filter(|g| g.len() > 1)
                .filter(|g| match &ends[g[0]] {
                    PathEnd::Finite { params, .. } => is_nonsingular(&target, params),
                    _ => false,
                })
                .flatten()
                .collect();
            if suspects.is_empty() {
                break;
            }
            step_cfg.max_step /= 8.0;
            step_cfg.initial_step /= 8.0;
            step_cfg.max_steps_per_path *= 8;
            let retracked_idx: Vec<u64> = suspects.iter().map(|&i| i as u64).collect();
            let retracked = run_paths(prob, &homotopy, &retracked_idx, &step_cfg);
            for (slot, end) in suspects.into_iter().zip(retracked) {
                ends[slot] = end;
            }
        }
        let known: Vec<Vec<Complex64>> = cluster(&ends, cfg.cluster_radius)
            .into_iter()
            .filter_map(|g| match &ends[g[0]] {
                PathEnd::Finite { params, .. } => Some(params.clone()),
                _ => None,
            })
            .collect();
        let extra = monodromy(prob, &target, &known, &mut phase_rng(seed, "monodromy"), cfg);
        (ends, extra)
    };
    let (ends, extra) = match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let failed = ends.iter().filter(|e| matches!(e, PathEnd::Failed)).count();
    if failed as f64 > cfg.max_failure_rate * total as f64 {
        return Err(Error::UnreliableRun { failed, total: total as usize });
    }
    let base_locus = ends.iter().filter(|e| matches!(e, PathEnd::Diverged { base_locus: true })).count();
    let mut clusters: Vec<(Vec<Complex64>, f64, usize)> = cluster(&ends, cfg.cluster_radius)
        .into_iter()
        .map(|group| {
            let best = group
                .iter()
                .min_by(|&&a, &&b| residual_of(&ends[a]).total_cmp(&residual_of(&ends[b])).then(a.cmp(&b)))
                .copied()
                .unwrap();
            match &ends[best] {
                PathEnd::Finite { params, residual } => (params.clone(), *residual, group.len()),
                _ => unreachable!(),
            }
        })
        .collect();
    let monodromy_found = extra.len();
    clusters.extend(extra.into_iter().map(|(params, residual)| (params, residual, 0)));
    clusters.sort_by(|a, b| param_order(&a.0, &b.0));
    let finite_paths: usize = clusters.iter().map(|c| c.2).sum();
    let n = prob.system.input_dim();
    Ok(SolutionSet {
        gains: clusters.iter().map(|c| SymmetricGain::from_params(n, &c.0).expect("parameter count matches")).collect(),
        residuals: clusters.iter().map(|c| c.1).collect(),
        cluster_multiplicities: clusters.iter().map(|c| c.2).collect(),
        paths_tracked: total as usize,
        paths_diverged: total as usize - finite_paths,
        paths_to_base_locus: base_locus,
        paths_failed: failed,
        monodromy_found,
        seed,
    })
}

fn residual_of(end: &PathEnd) -> f64 {
    match end {
        PathEnd::Finite { residual, .. } => *residual,
        _ => f64::INFINITY,
    }
}

/// [`solve`] for symmetric systems.
pub fn track_all_paths(prob: &PlacementProblem, seed: u64, cfg: &SolverConfig) -> Result<SolutionSet> {
    if prob.system.is_hamiltonian() {
        return Err(Error::Precondition("use track_all_paths_hamiltonian for Hamiltonian systems".into()));
    }
    solve(prob, seed, cfg)
}

/// [`solve`] for Hamiltonian systems with `delta = n(n+1)`.
pub fn track_all_paths_hamiltonian(prob: &PlacementProblem, seed: u64, cfg: &SolverConfig) -> Result<SolutionSet> {
    if !prob.system.is_hamiltonian() {
        return Err(Error::Precondition("track_all_paths_hamiltonian needs a Hamiltonian system".into()));
    }
    solve(prob, seed, cfg)
}

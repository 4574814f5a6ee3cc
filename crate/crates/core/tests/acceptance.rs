//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lagplace_core::lagrangian::{
    base_locus_search, canonical_diagonal_example, characteristic_cofactors, degree_lagrangian,
    degree_lagrangian_factorial_form, degree_lagrangian_product_form, nondegeneracy_certificate_diagonal,
};
use lagplace_core::orthoconstruct::{
    connectivity_repair, diag_projection, make_diag_projection_bijective, surjectivity_iff_connected_check,
    theta_jacobian, MatrixGraph, SymmetricMatrixSpace, DEFAULT_REPAIR_ANGLE,
};
use lagplace_core::polymat::{
    charpoly, eigenvalues, identity, max_abs, numerical_rank, orthogonality_violation, spectrum_distance,
    symmetry_violation, ComplexMatrix,
};
use lagplace_core::realization::{markov_distance, solve_intertwiner, symmetrize_realization};
use lagplace_core::rng::{complex_normal_matrix, complex_symmetric_matrix, phase_rng};
use lagplace_core::solver::{
    random_generic_system, random_target, track_all_paths, track_all_paths_hamiltonian, verify_solution,
    PlacementProblem, PlacementSystem, SolverConfig,
};
use lagplace_core::spectral::{
    closed_loop_matrix, jacobian_phi_at_zero, jacobian_psi_at_zero, newton_coeffs, phi_map, psi_map, symmetric_basis,
    SymmetricGain,
};
use lagplace_core::{Poly, SymmetricSystem};
use num_bigint::BigUint;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn degree_table() -> Outcome {
    let seventeen_nineteen = BigUint::from(13u64 * 17 * 19) << 18;
    let expected = [
        BigUint::from(1u32),
        BigUint::from(2u32),
        BigUint::from(16u32),
        BigUint::from(768u32),
        BigUint::from(292_864u32),
        seventeen_nineteen,
    ];
    for (i, d) in expected.iter().enumerate() {
        let got = degree_lagrangian(i + 1).map_err(|e| e.to_string())?;
        check(&got == d, || format!("d({}) = {got}, expected {d}", i + 1))?;
    }
    for n in 1..=20 {
        let a = degree_lagrangian_factorial_form(n);
        let b = degree_lagrangian_product_form(n);
        check(a == b, || format!("closed forms differ at n = {n}"))?;
    }
    Ok("d(1..6) exact, closed forms agree for n = 1..20".into())
}

fn count_symmetric(n: usize, delta: usize, seeds: &[u64], expected: usize) -> Outcome {
    let cfg = SolverConfig::default();
    let mut worst: f64 = 0.0;
    let mut completed = 0;
    for &seed in seeds {
        let sys = random_generic_system(n, delta, false, seed).map_err(|e| e.to_string())?;
        let prob = PlacementProblem::new(sys, random_target(delta, false, seed)).map_err(|e| e.to_string())?;
        let out = track_all_paths(&prob, seed, &cfg).map_err(|e| e.to_string())?;
        check(out.finite_count() == expected, || {
            format!(
                "seed {seed}: {} finite solutions (multiplicities {:?}, diverged {}, failed {}, by monodromy {})",
                out.finite_count(),
                out.cluster_multiplicities,
                out.paths_diverged,
                out.paths_failed,
                out.monodromy_found
            )
        })?;
        check(out.cluster_multiplicities.iter().sum::<usize>() + out.paths_diverged == out.paths_tracked, || {
            format!("seed {seed}: path accounting broken")
        })?;
        for g in &out.gains {
            let report = verify_solution(prob.system(), g, prob.target()).map_err(|e| e.to_string())?;
            check(report.max_deviation < 1e-7, || format!("seed {seed}: residual {:.3e}", report.max_deviation))?;
            worst = worst.max(report.max_deviation);
        }
        completed += out.monodromy_found;
    }
    Ok(format!(
        "{} instances, {expected} solutions each ({completed} by monodromy), max residual {worst:.2e}",
        seeds.len()
    ))
}

fn count_hamiltonian() -> Outcome {
    let cfg = SolverConfig::default();
    let mut worst_odd: f64 = 0.0;
    for seed in [1u64, 2, 3] {
        let sys = random_generic_system(2, 6, true, seed).map_err(|e| e.to_string())?;
        let prob = PlacementProblem::new(sys, random_target(6, true, seed)).map_err(|e| e.to_string())?;
        let out = track_all_paths_hamiltonian(&prob, seed, &cfg).map_err(|e| e.to_string())?;
        check(out.paths_tracked == 48, || format!("seed {seed}: {} paths", out.paths_tracked))?;
        check(out.finite_count() == 2, || {
            format!(
                "seed {seed}: {} finite solutions (multiplicities {:?}, diverged {})",
                out.finite_count(),
                out.cluster_multiplicities,
                out.paths_diverged
            )
        })?;
        for g in &out.gains {
            let closed = closed_loop_matrix(prob.system(), g).map_err(|e| e.to_string())?;
            let p = charpoly(&closed).map_err(|e| e.to_string())?;
            let odd = p.odd_relative();
            check(odd < 1e-9, || format!("seed {seed}: odd part {odd:.3e}"))?;
            let report = verify_solution(prob.system(), g, prob.target()).map_err(|e| e.to_string())?;
            check(report.passes, || format!("seed {seed}: residual {:.3e}", report.max_deviation))?;
            worst_odd = worst_odd.max(odd);
        }
    }
    Ok(format!("3 instances, 2 solutions each from 48 paths, max odd part {worst_odd:.2e}"))
}

fn random_permutation_matrix<R: Rng>(rng: &mut R, size: usize) -> ComplexMatrix {
    let mut perm: Vec<usize> = (0..size).collect();
    perm.shuffle(rng);
    ComplexMatrix::from_fn(
        size,
        size,
        |i, j| if perm[i] == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) },
    )
}

/// Block-diagonal symmetric matrix with random block sizes, conjugated by a
/// random permutation.
fn random_block_diagonal<R: Rng>(rng: &mut R, size: usize, zero_diagonal: bool) -> ComplexMatrix {
    let split = rng.random_range(1..size);
    let mut l = ComplexMatrix::zeros(size, size);
    for (start, len) in [(0, split), (split, size - split)] {
        let block = complex_symmetric_matrix(rng, len);
        l.view_mut((start, start), (len, len)).copy_from(&block);
    }
    if zero_diagonal {
        for i in 0..size {
            l[(i, i)] = Complex64::new(0.0, 0.0);
        }
    }
    let p = random_permutation_matrix(rng, size);
    &p * l * p.transpose()
}

fn surjectivity_suite() -> Outcome {
    let mut rng = phase_rng(5, "surjectivity");
    let mut connected = 0;
    let mut disconnected = 0;
    for trial in 0..40 {
        let size = 3 + trial % 4;
        let l = if trial % 2 == 0 {
            complex_symmetric_matrix(&mut rng, size)
        } else {
            random_block_diagonal(&mut rng, size, false)
        };
        let report = surjectivity_iff_connected_check(&l).map_err(|e| e.to_string())?;
        check(report.consistent, || format!("trial {trial}: inconsistent report {report:?}"))?;
        if report.connected {
            connected += 1;
        } else {
            disconnected += 1;
        }
        let jac = theta_jacobian(&l).map_err(|e| e.to_string())?;
        check(jac.nrows() == size - 1, || "Jacobian has the wrong shape".into())?;
    }
    check(connected == 20 && disconnected == 20, || format!("{connected} connected / {disconnected} disconnected"))?;
    Ok("40 matrices (20 connected, 20 permuted block-diagonal), all consistent".into())
}

fn repair_suite() -> Outcome {
    let mut rng = phase_rng(6, "repair");
    let mut worst_orth: f64 = 0.0;
    for trial in 0..12 {
        let size = 3 + trial % 4;
        let l = random_block_diagonal(&mut rng, size, true);
        check(!MatrixGraph::of(&l).is_connected(), || format!("trial {trial}: input already connected"))?;
        let out = connectivity_repair(&l, DEFAULT_REPAIR_ANGLE).map_err(|e| e.to_string())?;
        let orth = orthogonality_violation(&out.s);
        check(orth < 1e-10, || format!("trial {trial}: S S^t - I = {orth:.3e}"))?;
        let similar = &out.s * &l * out.s.transpose();
        check(max_abs(&(&similar - &out.lhat)) < 1e-10 * max_abs(&l).max(1.0), || {
            format!("trial {trial}: Lhat is not S L S^t")
        })?;
        let spectrum = spectrum_distance(&eigenvalues(&l), &eigenvalues(&out.lhat));
        check(spectrum < 1e-8 * max_abs(&l).max(1.0), || format!("trial {trial}: spectrum moved {spectrum:.3e}"))?;
        let diag = diag_projection(&out.lhat).iter().map(|c| c.norm()).fold(0.0, f64::max);
        check(diag < 1e-9, || format!("trial {trial}: diagonal {diag:.3e}"))?;
        let rank = numerical_rank(&theta_jacobian(&out.lhat).map_err(|e| e.to_string())?, 1e-8);
        check(rank == size - 1, || format!("trial {trial}: Jacobian rank {rank} < {}", size - 1))?;
        worst_orth = worst_orth.max(orth);
    }
    Ok(format!("12 disconnected inputs repaired, max orthogonality error {worst_orth:.2e}"))
}

fn bijection_suite() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = phase_rng(seed, "lemma-three");
        let b = complex_normal_matrix(&mut rng, 3, 2);
        let space = SymmetricMatrixSpace::feedback_space(&b).map_err(|e| e.to_string())?;
        let out = make_diag_projection_bijective(&space).map_err(|e| e.to_string())?;
        let orth = orthogonality_violation(&out.s);
        check(orth < 1e-8, || format!("seed {seed}: S S^t - I = {orth:.3e}"))?;
        check(out.condition < 1e6, || format!("seed {seed}: condition {:.3e}", out.condition))?;
        worst = worst.max(out.condition);
    }
    Ok(format!("10 feedback spaces, max condition number {worst:.2e}"))
}

fn relative_coeff_error(p: &Poly, q: &Poly) -> f64 {
    p.relative_error(q)
}

fn formulation_suite() -> Outcome {
    let mut rng = phase_rng(8, "formulations");
    let mut worst_poly: f64 = 0.0;
    let mut worst_jac: f64 = 0.0;
    let h = 1e-5;
    for trial in 0..100u64 {
        let n = 1 + (trial % 3) as usize;
        let delta = 2 + (trial % 5) as usize;
        let sys = match random_generic_system(n, delta, false, trial).map_err(|e| e.to_string())? {
            PlacementSystem::Symmetric(s) => s,
            PlacementSystem::Hamiltonian(_) => unreachable!(),
        };
        let gain = SymmetricGain::new(complex_symmetric_matrix(&mut rng, n)).map_err(|e| e.to_string())?;
        let via_traces = newton_coeffs(&phi_map(&sys, &gain).map_err(|e| e.to_string())?);
        let direct =
            charpoly(&closed_loop_matrix(&sys, &gain).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let err = relative_coeff_error(&via_traces, &direct);
        check(err < 1e-8, || format!("trial {trial}: polynomial mismatch {err:.3e}"))?;
        worst_poly = worst_poly.max(err);

        let jac = jacobian_phi_at_zero(&sys);
        worst_jac = worst_jac.max(jacobian_fd_error(&jac, n, |g| phi_values(&sys, g), h));
        if trial % 10 == 0 {
            let ham = match random_generic_system(n, 2 * delta, true, trial).map_err(|e| e.to_string())? {
                PlacementSystem::Hamiltonian(hs) => hs,
                PlacementSystem::Symmetric(_) => unreachable!(),
            };
            let jac = jacobian_psi_at_zero(&ham).map_err(|e| e.to_string())?;
            worst_jac = worst_jac.max(jacobian_fd_error(&jac, n, |g| psi_map(&ham, g).unwrap(), h));
        }
    }
    check(worst_jac < 1e-4, || format!("Jacobian mismatch {worst_jac:.3e}"))?;
    Ok(format!("100 pairs, polynomial error {worst_poly:.2e}, Jacobian error {worst_jac:.2e}"))
}

fn phi_values(sys: &SymmetricSystem, gain: &SymmetricGain) -> Vec<Complex64> {
    phi_map(sys, gain).unwrap().0
}

/// Worst column-relative mismatch between an analytic Jacobian at zero and
/// central differences along each symmetric basis direction.
fn jacobian_fd_error(jac: &ComplexMatrix, n: usize, f: impl Fn(&SymmetricGain) -> Vec<Complex64>, h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (col, e) in symmetric_basis(n).iter().enumerate() {
        let plus = f(&SymmetricGain::new(e * Complex64::new(h, 0.0)).unwrap());
        let minus = f(&SymmetricGain::new(e * Complex64::new(-h, 0.0)).unwrap());
        for row in 0..jac.nrows() {
            let fd = (plus[row] - minus[row]) / (2.0 * h);
            let exact = jac[(row, col)];
            worst = worst.max((fd - exact).norm() / exact.norm().max(1.0));
        }
    }
    worst
}

fn certificate_suite() -> Outcome {
    let mut eliminated = 0;
    for n in 1..=3 {
        let cert = nondegeneracy_certificate_diagonal(n).map_err(|e| e.to_string())?;
        check(cert.passes, || format!("certificate fails for n = {n}: {cert:?}"))?;
        check(cert.cells.len() == 1 << n, || format!("n = {n}: {} cells", cert.cells.len()))?;
        eliminated += cert.cells.iter().filter(|c| c.exact_refutation.is_some()).count();
    }
    let (d, n_mat) = canonical_diagonal_example(2);
    let cd = characteristic_cofactors(&d, &n_mat).map_err(|e| e.to_string())?;
    let search = base_locus_search(&cd, 200, 2024);
    check(!search.found(), || format!("base-locus search hit {} starts", search.hits))?;
    Ok(format!(
        "certificates pass for n = 1, 2, 3 ({eliminated} cells closed by elimination); 200 starts, best residual {:.2e}",
        search.best_residual
    ))
}

fn realization_suite() -> Outcome {
    let mut worst_markov: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for seed in 0..10u64 {
        let delta = 2 + (seed % 3) as usize;
        let n = 1 + (seed % 2) as usize;
        let base = match random_generic_system(n, delta, false, 100 + seed).map_err(|e| e.to_string())? {
            PlacementSystem::Symmetric(s) => s,
            PlacementSystem::Hamiltonian(_) => unreachable!(),
        };
        let mut rng = phase_rng(seed, "similarity");
        let t = &identity(delta) + complex_normal_matrix(&mut rng, delta, delta) * Complex64::new(0.4, 0.0);
        let sys = base.to_state_space().transform(&t).map_err(|e| e.to_string())?;
        let s = solve_intertwiner(&sys, &sys.dual()).map_err(|e| e.to_string())?;
        let sym = symmetry_violation(&s) / max_abs(&s).max(1.0);
        check(sym < 1e-8, || format!("seed {seed}: intertwiner asymmetry {sym:.3e}"))?;
        let out = symmetrize_realization(&sys).map_err(|e| e.to_string())?;
        let horizon = 2 * delta;
        let drift = markov_distance(&out.to_state_space().markov_parameters(horizon), &sys.markov_parameters(horizon));
        check(drift < 1e-6, || format!("seed {seed}: Markov drift {drift:.3e}"))?;
        check(symmetry_violation(out.a()) == 0.0 || symmetry_violation(out.a()) < 1e-10, || "A not symmetric".into())?;
        worst_markov = worst_markov.max(drift);
        worst_sym = worst_sym.max(sym);
    }
    Ok(format!("10 systems, Markov drift {worst_markov:.2e}, intertwiner asymmetry {worst_sym:.2e}"))
}

struct Criterion {
    label: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { label: "degree table", limit: Duration::from_secs(1), run: degree_table },
        Criterion {
            label: "symmetric n=2 solution count",
            limit: Duration::from_secs(10),
            run: || count_symmetric(2, 3, &[1, 2, 3, 4, 5], 2),
        },
        Criterion {
            label: "symmetric n=3 solution count",
            limit: Duration::from_secs(600),
            run: || count_symmetric(3, 6, &[1, 2], 16),
        },
        Criterion { label: "Hamiltonian n=2 solution count", limit: Duration::from_secs(60), run: count_hamiltonian },
        Criterion { label: "connectivity iff surjectivity", limit: Duration::from_secs(5), run: surjectivity_suite },
        Criterion { label: "connectivity repair", limit: Duration::from_secs(5), run: repair_suite },
        Criterion { label: "diagonal projection bijection", limit: Duration::from_secs(10), run: bijection_suite },
        Criterion {
            label: "equivalent placement formulations",
            limit: Duration::from_secs(10),
            run: formulation_suite,
        },
        Criterion { label: "nondegeneracy certificate", limit: Duration::from_secs(60), run: certificate_suite },
        Criterion { label: "realization round trip", limit: Duration::from_secs(5), run: realization_suite },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (idx, c) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| c.label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let verdict = match outcome {
            Ok(detail) if elapsed <= c.limit => format!("PASS  {detail}"),
            Ok(detail) => format!("FAIL  over time limit {:?}: {detail}", c.limit),
            Err(why) => format!("FAIL  {why}"),
        };
        if verdict.starts_with("FAIL") {
            failures += 1;
        }
        println!("acceptance {:>2} {:<36} {:>9.3}s  {verdict}", idx + 1, c.label, elapsed.as_secs_f64());
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

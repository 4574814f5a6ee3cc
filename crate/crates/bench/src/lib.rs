//! Fixed benchmark problems shared by the criterion benches and their tests.

use lagplace_core::solver::{random_generic_system, random_target, PlacementProblem};
use lagplace_core::Result;

pub const FIXTURE_SEED: u64 = 20;

/// Generic symmetric placement problem with `delta = n(n+1)/2`.
pub fn symmetric_problem(n: usize, seed: u64) -> Result<PlacementProblem> {
    let delta = n * (n + 1) / 2;
    PlacementProblem::new(random_generic_system(n, delta, false, seed)?, random_target(delta, false, seed))
}

/// Generic Hamiltonian placement problem with `delta = n(n+1)`.
pub fn hamiltonian_problem(n: usize, seed: u64) -> Result<PlacementProblem> {
    let delta = n * (n + 1);
    PlacementProblem::new(random_generic_system(n, delta, true, seed)?, random_target(delta, true, seed))
}

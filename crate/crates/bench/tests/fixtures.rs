use lagplace_bench::{hamiltonian_problem, symmetric_problem, FIXTURE_SEED};
use lagplace_core::solver::coefficient_system;

#[test]
fn fixtures_have_expected_path_counts() {
    let sym = symmetric_problem(2, FIXTURE_SEED).unwrap();
    assert_eq!(coefficient_system(&sym).bezout_number(), 6);
    let ham = hamiltonian_problem(2, FIXTURE_SEED).unwrap();
    assert_eq!(coefficient_system(&ham).bezout_number(), 48);
}

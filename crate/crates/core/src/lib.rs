//! Pole placement for complex symmetric and Hamiltonian systems by symmetric
//! output feedback.
//!
//! - [`polymat`]: complex matrices, polynomials, polynomial matrices.
//! - [`realization`]: symmetric and Hamiltonian realizations.
//! - [`spectral`]: closed-loop maps, Newton's identities, Jacobians.
//! - [`orthoconstruct`]: orthogonal conjugations that make the diagonal projection surjective.
//! - [`lagrangian`]: Plücker coordinates, the characteristic map, degree formulas.
//! - [`solver`]: total-degree homotopy continuation for the placement equations,
//!   completed by monodromy.

mod cellproof;
pub mod error;
pub mod lagrangian;
pub mod orthoconstruct;
pub mod polymat;
pub mod realization;
pub mod rng;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use lagrangian::{LagrangianPoint, NondegeneracyCertificate};
pub use polymat::{ComplexMatrix, Poly, PolyMatrix};
pub use realization::{HamiltonianSystem, StateSpace, SymmetricSystem};
pub use solver::{PlacementProblem, PlacementSystem, SolutionSet, SolverConfig};
pub use spectral::{FeedbackSystem, SymmetricGain, TracePowerVector};

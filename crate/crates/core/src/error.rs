use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max violation {violation:.3e})")]
    Asymmetric { violation: f64 },

    #[error("matrix is numerically singular (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("no intertwining transformation (residual {residual:.3e})")]
    NoIntertwiner { residual: f64 },

    #[error("intertwining transformation is not unique (rank {rank} of {unknowns}); systems are not minimal")]
    NonUnique { rank: usize, unknowns: usize },

    #[error("realization is not minimal (controllability rank {controllability}, observability rank {observability}, state dimension {state_dim})")]
    NotMinimal { controllability: usize, observability: usize, state_dim: usize },

    #[error("transfer function is not symmetric (Markov parameter asymmetry {violation:.3e})")]
    NotSymmetricTransfer { violation: f64 },

    #[error("Hamiltonian structure broken: odd trace power {power} has magnitude {magnitude:.3e}")]
    StructureBroken { power: usize, magnitude: f64 },

    #[error("invalid Lagrangian point: {0}")]
    InvalidPoint(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("basis is linearly dependent (numerical rank {rank} of {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("point lies in the base locus: closed-loop determinant vanishes identically")]
    BaseLocus,

    #[error("polynomial is not even (odd part {odd:.3e} relative)")]
    NotHamiltonian { odd: f64 },

    #[error("problem size out of supported range: {0}")]
    Scale(String),

    #[error("degree formula violated: {0}")]
    FormulaViolation(String),

    #[error("failed to generate a minimal system after {attempts} attempts")]
    Generation { attempts: usize },

    #[error("unreliable run: {failed} of {total} paths failed; retry with a different seed")]
    UnreliableRun { failed: usize, total: usize },
}

use thiserror::Error;

use crate::solver::SolveStats;

pub type Result<T> = std::result::Result<T, MfmfeError>;

#[derive(Debug, Error)]
pub enum MfmfeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry in cell {cell}: {reason}")]
    Geometry { cell: usize, reason: String },

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("element construction failed: {0}")]
    ElementConstruction(String),

    #[error("coefficient error: {0}")]
    Coefficient(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    /// A node-local mass block failed its Cholesky factorization.
    #[error("velocity elimination failed at node block {block}: block is not SPD")]
    Elimination { block: usize },

    #[error("iterative solver did not converge: {stats}")]
    Convergence { stats: SolveStats },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

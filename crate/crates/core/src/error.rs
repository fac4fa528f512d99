use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),

    #[error("degenerate or inverted tetrahedron {0}")]
    BadTet(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("duplicate constraint on index {0}")]
    DuplicateConstraint(usize),

    #[error("constraint index {index} out of range for dimension {dim}")]
    ConstraintOutOfRange { index: usize, dim: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("connectivity mismatch: {0}")]
    ConnectivityMismatch(String),

    #[error("unknown feature tag {0}")]
    UnknownFeature(i64),

    #[error("non-manifold surface: {0}")]
    NonManifold(String),

    #[error("contraction diverged at iteration {0}")]
    ContractionDiverged(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

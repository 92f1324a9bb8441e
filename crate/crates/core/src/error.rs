use thiserror::Error;

/// Error type shared by the numerical kernels.
///
/// Non-convergence of the fixed-point solver is deliberately *not* an
/// error (the solver returns a flagged report); these variants cover
/// precondition violations and genuine numerical failures.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("matrix is not hyperhermitian: {0}")]
    NotHyperhermitian(String),
    #[error("eigenvalue quadruple grouping failed: {0}")]
    EigenGrouping(String),
    #[error("matrix must be positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("Schur-complement oracle supports n <= 4, got n = {0}")]
    OracleDimension(usize),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("evaluation produced a non-finite value at {0:?}")]
    NonFiniteEvaluation(Vec<f64>),
    #[error("field is not smooth enough for finite differences: {0}")]
    NotSmooth(String),
    #[error("field is not plurisubharmonic: {0}")]
    NotPsh(String),
    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("shrunken domain is empty: {0}")]
    EmptyShrunkenDomain(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("stencil leaves the grid bounding box: {0}")]
    StencilOutOfBox(String),
    #[error("iteration unstable: {0}")]
    Unstable(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

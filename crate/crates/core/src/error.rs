use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QslError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("operator is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("Schatten norm requires p >= 1, got {0}")]
    InvalidNormOrder(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("vector length {0} is not a perfect square")]
    NotPerfectSquare(usize),

    #[error("singular eigenvalue pair ({i}, {j}) in square-root derivative")]
    SingularPair { i: usize, j: usize },

    #[error("singular eigenvalue pair ({i}, {j}) in square-root derivative at node {node}")]
    SingularPairAtNode { node: usize, i: usize, j: usize },

    #[error("operator is not involutory (||A^2 - I||_HS = {0:e})")]
    NotInvolutory(f64),

    #[error("basis is not orthonormal (max Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("at least {required} samples are required, got {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, QslError>;

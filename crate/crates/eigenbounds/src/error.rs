use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown reference domain '{0}' (expected K1, K2, K3, T1..T5 or SQUARE)")]
    UnknownDomain(String),

    #[error("degenerate cell {cell}: volume is zero or of uncertain sign")]
    DegenerateCell { cell: usize },

    #[error("matrix is not positive definite: leading minor of order {minor} failed")]
    NotPositiveDefinite { minor: usize },

    #[error("constraint vector is zero; nothing to eliminate")]
    ZeroConstraint,

    #[error("polynomial Gram matrix is numerically singular (degree {degree})")]
    SingularProjectionBasis { degree: usize },

    #[error("discrete space has no positive eigenvalue for degree {degree} at refinement {level}; refine the mesh or lower the degree")]
    NoPositiveEigenvalue { degree: usize, level: u32 },

    #[error("interval domain violation: {0}")]
    IntervalDomain(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

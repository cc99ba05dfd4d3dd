use thiserror::Error;

/// Errors raised by the CGPT pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape parameters: {0}")]
    InvalidShape(String),

    #[error("curve is self-intersecting (segments {0} and {1} cross)")]
    SelfIntersecting(usize, usize),

    #[error("inner curve is not strictly contained in the outer curve")]
    NotContained,

    #[error("curves too close for regular quadrature (distance {0:.3e})")]
    CurvesTooClose(f64),

    #[error("invalid contrast: {0}")]
    InvalidContrast(String),

    #[error("invalid order {order}: {reason}")]
    InvalidOrder { order: usize, reason: &'static str },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("degenerate target (no first-order response)")]
    DegenerateTarget,

    #[error("descriptor undefined at order {0}")]
    DescriptorUndefined(usize),

    #[error("fish collides with target: {0}")]
    FishCollision(String),

    #[error("source coincides with the expansion center")]
    SourceAtCenter,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown dictionary entry '{0}'")]
    UnknownEntry(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// CSV failures are reported as I/O errors.
pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.into())
}

pub type Result<T> = std::result::Result<T, Error>;

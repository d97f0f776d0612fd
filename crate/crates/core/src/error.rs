use thiserror::Error;

/// Errors raised by the library.
///
/// Variants map onto the failure classes of the experiments; the command-line
/// runner turns every one of them into exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("separation undefined for fewer than two points")]
    UndefinedSeparation,
    #[error("singular configuration: two points coincide")]
    SingularConfiguration,
    #[error("search failed: {0}")]
    SearchFailure(String),
    #[error("degenerate zero set: field vanishes identically on the grid")]
    DegenerateZeroSet,
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("degenerate link: {0}")]
    DegenerateLink(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("cell saturated: no projection center off the curve in cell {0:?}")]
    CellSaturated((i64, i64)),
    #[error("tracked class not found: {0}")]
    ClassNotFound(String),
    #[error("invalid sweepout family: {0}")]
    InvalidFamily(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

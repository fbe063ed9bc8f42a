use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("not a Dirac point: {0}")]
    NotADiracPoint(String),
    #[error("ambiguous multiplicity: {0}")]
    AmbiguousMultiplicity(String),
    #[error("dispersion is not conical: {0}")]
    NotConical(String),
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),
    #[error("degenerate coupling: {0}")]
    DegenerateCoupling(String),
    #[error("projection error: {0}")]
    Projection(String),
    #[error("root not found: {0}")]
    RootNotFound(String),
    #[error("flat band: {0}")]
    FlatBand(String),
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

use core::fmt;

/// Errors raised by the core crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Every particle weight was zero (or the total was not positive).
    AllWeightsZero,
    /// Two posteriors were not aligned to the same hypothesis space.
    SpaceMismatch { left: usize, right: usize },
    /// A vector or parameter block had the wrong shape.
    DimMismatch { expected: usize, found: usize },
    /// Inference was requested at a level that is not built.
    UnsupportedLevel(usize),
    /// An action is not legal in the current state.
    IllegalAction(&'static str),
    /// Training produced a NaN or infinite loss.
    NonFiniteLoss { epoch: usize, batch: usize },
    /// A checkpoint carried an unknown format version.
    VersionMismatch { expected: u32, found: u32 },
    /// A checkpoint could not be decoded.
    CorruptFile(&'static str),
    /// A synthesis step needed a trained model that was not supplied.
    MissingModel(&'static str),
    /// A configuration value violated its contract.
    InvalidConfig(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::AllWeightsZero => write!(f, "all particle weights are zero"),
            Error::SpaceMismatch { left, right } => {
                write!(f, "hypothesis spaces differ ({left} vs {right} entries)")
            }
            Error::DimMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::UnsupportedLevel(l) => write!(f, "reasoning level {l} is not supported"),
            Error::IllegalAction(what) => write!(f, "illegal action: {what}"),
            Error::NonFiniteLoss { epoch, batch } => {
                write!(f, "non-finite training loss at epoch {epoch}, batch {batch}")
            }
            Error::VersionMismatch { expected, found } => {
                write!(f, "checkpoint version {found} (expected {expected})")
            }
            Error::CorruptFile(what) => write!(f, "corrupt checkpoint: {what}"),
            Error::MissingModel(what) => write!(f, "missing trained model: {what}"),
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

use alloc::string::String;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("grade overflow: rank {q} exceeds dimension {n}")]
    GradeOverflow { q: usize, n: usize },
    #[error("grade underflow: operator needs rank at least 1")]
    GradeUnderflow,
    #[error("even dimension unsupported (N = {0})")]
    UnsupportedDimension(usize),
    #[error("construction failure: {0}")]
    ConstructionFailure(String),
    #[error("consistency failure: {0}")]
    ConsistencyFailure(String),
    #[error("not in span: {0}")]
    NotInSpan(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("negative height after shift")]
    NegativeHeight,
    #[error("unknown theorem id: {0}")]
    UnknownTheorem(String),
}

pub type Result<T> = core::result::Result<T, Error>;

/// Rejects even or too small dimensions.
pub fn check_dimension(n: usize) -> Result<()> {
    if n.is_multiple_of(2) {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(3..=crate::poly::MAX_DIM).contains(&n) {
        return Err(Error::InvalidInput(alloc::format!(
            "dimension {n} outside supported range 3..={}",
            crate::poly::MAX_DIM
        )));
    }
    Ok(())
}

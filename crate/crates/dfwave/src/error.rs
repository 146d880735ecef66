use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("length {len} too short for {levels} decomposition levels")]
    TooManyLevels { len: usize, levels: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported layout: {0}")]
    Layout(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns `log2(n)` when `n` is a power of two.
pub(crate) fn log2_exact(n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

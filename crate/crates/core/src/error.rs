use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulation order {0} is not a power of two >= 2")]
    InvalidModOrder(usize),
    #[error("sequence length {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    LengthNotMultiple { len: usize, bits_per_symbol: usize },
    #[error("symbol index {symbol} out of range for {bits_per_symbol} bits per symbol")]
    SymbolOutOfRange { symbol: usize, bits_per_symbol: usize },
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("constellation of {size} points exceeds the enumeration cap of {cap}")]
    EnumerationCap { size: u128, cap: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("curve does not cross BER {target}: {reason}")]
    NoCrossing { target: f64, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

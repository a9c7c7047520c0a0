use thiserror::Error;

/// Errors produced by the modem, channel, detector and theory routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spreading factor {0} is not supported")]
    InvalidSpreadingFactor(u32),

    #[error("amplitude must be finite and positive, got {0}")]
    InvalidAmplitude(f64),

    #[error("symbol {symbol} is out of range for alphabet size {m}")]
    SymbolOutOfRange { symbol: usize, m: usize },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("curve `{curve}` does not cross BER {target:e} within its SNR range")]
    NotBracketed { curve: String, target: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

use crate::measure::RadiusCertificate;

/// Errors raised by the library.
///
/// "Not yet known" outcomes (an `Unknown` symbol, an undecided orbit point, an
/// inconclusive cover membership) are reported in return values, never here.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("required precision {needed} exceeds the configured cap {cap}")]
    PrecisionBlowup { needed: u64, cap: u64 },

    #[error("combined support of {0} points exceeds the brute-force bound of 20")]
    SupportTooLarge(usize),

    #[error("radius search stalled at depth {depth}")]
    StallAtDepth { depth: usize, partial: Box<RadiusCertificate> },

    #[error("almost-decidability witness failed at precision {0}")]
    InvalidWitness(u32),

    #[error("no positive lower bound on the conditioning mass within budget {0}")]
    ZeroMassCondition(u32),

    #[error("unknown symbol at position {0}")]
    UnknownSymbol(usize),

    #[error("symbol reconstruction stalled at position {0}")]
    Stalled(usize),

    #[error("position {pos} out of range for a word of length {len}")]
    PositionOutOfRange { pos: usize, len: usize },

    #[error("decode error: {0}")]
    Decode(String),

    #[error("cylinder has measure zero")]
    ZeroMeasure,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

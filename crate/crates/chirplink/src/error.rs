//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by waveform generation, demodulation and the collision
/// engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A numerology or configuration value is out of its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A time instant falls outside the `[0, T_s)` symbol window.
    #[error("time {t} s outside symbol window [0, {window} s)")]
    OutsideSymbolWindow { t: f64, window: f64 },

    /// An input buffer has the wrong shape for the requested operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A receiver sample fell outside the interferer timeline. This violates
    /// the full-overlap construction and indicates an internal bug.
    #[error(
        "interferer coverage violated: sample {sample} maps to symbol {symbol} \
         but the interfering packet has only {available} symbols"
    )]
    CoverageViolation {
        sample: usize,
        symbol: usize,
        available: usize,
    },

    /// File I/O failure, with the offending path.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON in a config or result file.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

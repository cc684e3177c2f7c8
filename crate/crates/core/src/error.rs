use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid dimensions differ: expected {}x{}, found {}x{}", expected.0, expected.1, found.0, found.1)]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// Foreground and background intensity constants coincide, so the fitting
    /// term is identically zero.
    #[error("degenerate fitting: c1 = c2 = {0}")]
    DegenerateFitting(f64),

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("malformed marker list, line {line}: {reason}")]
    Markers { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A potential failed semantic validation.
    #[error("invalid potential: {0}")]
    Validation(String),

    /// A potential document could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An energy lies above the range covered by a zone table.
    #[error("energy {energy} is above the scanned ceiling {ceiling}")]
    OutOfRange { energy: f64, ceiling: f64 },

    /// The zone scan could not settle on a stable zone count.
    #[error("zone scan did not converge; suspect intervals: {suspects:?}")]
    ScanDiverged { suspects: Vec<(f64, f64)> },

    /// Compose formulas are singular at a band edge.
    #[error("band edge: |sin phi| = {sin_phi:e} is below the guard")]
    BandEdge { sin_phi: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

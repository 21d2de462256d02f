use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frequency {omega} eV is outside the tabulated range [{min}, {max}] eV")]
    OutOfRange { omega: f64, min: f64, max: f64 },

    #[error("point index {index} is not registered (provider has {count} points)")]
    UnknownPoint { index: usize, count: usize },

    #[error("no Green's function data for point pair ({0}, {1})")]
    MissingPair(String, String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent Green's function data: {0}")]
    DataConsistency(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("norm drift {drift:.3e} exceeds {limit:.1e} at t = {time_fs} fs; use a smaller dt")]
    StepSize { drift: f64, limit: f64, time_fs: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

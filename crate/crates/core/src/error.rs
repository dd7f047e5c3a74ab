use std::path::PathBuf;

use crate::field::SpectralField;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(String, String),

    #[error("quadrature not resolved at x = {x:?}: {coarse} vs {fine}")]
    ResolutionInsufficient { x: [f64; 2], coarse: f64, fine: f64 },

    #[error("integration blew up at t = {time}")]
    Blowup { time: f64, last_valid: Box<SpectralField> },

    #[error("rank deficient frame at vector {index}")]
    RankDeficient { index: usize },

    #[error("tangent ensemble collapsed (Gram condition {condition:.3e}); lower the re-orthonormalization interval")]
    EnsembleCollapse { condition: f64 },

    #[error("CFL violated: dt = {dt} exceeds {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

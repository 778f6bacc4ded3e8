//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block requested at zero frequency")]
    ZeroFrequency,
    #[error("grid too coarse: Nyquist frequency {nyquist} admits no corona")]
    GridTooCoarse { nyquist: f64 },
    #[error("annulus outer radius {outer} must be below Nyquist/4 = {limit}")]
    AnnulusTooWide { outer: f64, limit: f64 },
    #[error("packet at |xi| = {freq} reaches {reach}, beyond Nyquist {nyquist}")]
    ScaleOverflow { freq: f64, reach: f64, nyquist: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("{nodes} nodes exceed the dense-matrix cap {cap}")]
    TooLarge { nodes: usize, cap: usize },
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },
    #[error("operator is not positive definite (curvature {curvature:e})")]
    NotPositiveDefinite { curvature: f64 },
    #[error("matrix is singular to tolerance (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error("cone {0} has no shell samples")]
    ConeEmpty(usize),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Exit-code class used by the command-line front end:
    /// 1 for I/O, 3 for convergence failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::NoConvergence { .. } | Error::NotPositiveDefinite { .. } => 3,
            _ => 2,
        }
    }
}

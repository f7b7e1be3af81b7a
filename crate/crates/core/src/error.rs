use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve has {count} vertices, at least {min} are required")]
    TooFewVertices { count: usize, min: usize },

    #[error("vertex {index} has a non-finite coordinate")]
    NonFinite { index: usize },

    #[error("edge {index} has zero length")]
    DegenerateEdge { index: usize },

    #[error("curve is not positively oriented (signed area {area:e})")]
    Orientation { area: f64 },

    #[error("curve is not embedded: edges {first} and {second} intersect")]
    NotEmbedded { first: usize, second: usize },

    #[error("vertices {first} and {second} coincide")]
    CoincidentVertices { first: usize, second: usize },

    #[error("time {t} is outside the domain of the {what}: {reason}")]
    TimeDomain {
        what: &'static str,
        t: f64,
        reason: &'static str,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate gauge at grid point {index}: 1 - k*u = {value:e}")]
    DegenerateGauge { index: usize, value: f64 },

    #[error("curve is not convex (kappa = {kappa:e} at vertex {index})")]
    NotConvex { index: usize, kappa: f64 },

    #[error("time {t} is outside the trajectory span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("spacetime center time {t0} lies inside the trajectory span ending at {end}")]
    CenterInsideSpan { t0: f64, end: f64 },

    #[error("empty search window: {0}")]
    EmptyWindow(String),

    #[error("degenerate circle fit: {0}")]
    DegenerateFit(&'static str),

    #[error("trajectory did not approach a singularity (stopped by {0})")]
    NoSingularity(&'static str),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that come from the numerical state (as opposed to bad
    /// input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotEmbedded { .. }
                | Error::DegenerateEdge { .. }
                | Error::NonFinite { .. }
                | Error::Orientation { .. }
                | Error::DegenerateGauge { .. }
                | Error::CoincidentVertices { .. }
                | Error::DegenerateFit(_)
        )
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({x}, {y}) lies on the polygon boundary")]
    PointOnBoundary { x: f64, y: f64 },

    #[error("quadrature did not converge within {max_depth} subdivision levels")]
    QuadratureNotConverged { max_depth: usize },

    #[error("invalid quadrature specification: {0}")]
    InvalidQuadrature(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("resampling to {n_target} vertices produced a non-simple polygon")]
    ResampleBrokeSimplicity { n_target: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no level-set contour found (field is numerically zero)")]
    NoContourFound,

    #[error("exterior angle at vertex {vertex} is within tolerance of +-pi")]
    DegenerateAngle { vertex: usize },

    #[error("every trial step down to the minimum step size broke simplicity")]
    StalledAtNonSimple,

    #[error("radial profile assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

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

pub type Result<T> = std::result::Result<T, Error>;

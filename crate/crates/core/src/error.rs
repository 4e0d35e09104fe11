use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("root finder did not converge (max residual {residual:e})")]
    RootsNotConverged { residual: f64 },

    #[error("Newton did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence { iterations: usize, best_residual: f64 },

    #[error("singular Jacobian at residual {residual:e}")]
    SingularJacobian { residual: f64 },

    #[error("map is not numerically post-critically finite within {max_steps} steps")]
    NotPostcriticallyFinite { max_steps: usize },

    #[error("point is outside the marked basin")]
    OutsideBasin,

    #[error("precision loss (achieved residual {residual:e})")]
    PrecisionLoss { residual: f64 },

    #[error("boundary polygon is not simple at this resolution ({intersections} crossings)")]
    NotJordanAtResolution { intersections: usize },

    #[error("gluing is not a homeomorphism at this resolution: {0}")]
    NotHomeomorphismAtResolution(String),

    #[error("charts disagree: {0}")]
    ChartMismatch(String),

    #[error("model evaluation exceeded the correspondence resolution: {0}")]
    ResolutionExceeded(String),

    #[error("malformed merge: budget {found} but degree law requires {expected}")]
    MalformedMerge { expected: usize, found: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no realization: {0}")]
    NoRealization(String),

    #[error("ambiguous region membership (distance {distance:e})")]
    AmbiguousMembership { distance: f64 },

    #[error("curve lift is ambiguous near {0}")]
    LiftAmbiguous(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

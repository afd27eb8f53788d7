//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::engine::StageReport;

/// Errors returned by grid, geometry, solver and certificate operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value at node {node}, component {component}")]
    NonFinite { node: usize, component: usize },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("angle undefined for a zero vector ({0})")]
    DegenerateAngle(String),

    #[error("convexity profile too weak: no epsilon0 exists ({0})")]
    NoEpsilon0(String),

    #[error("operator is not a contraction (Lipschitz constant {0} >= 1)")]
    NotAContraction(f64),

    #[error("no convergence after {iterations} iterations (last residual {last_residual:e})")]
    NoConvergence { iterations: usize, last_residual: f64 },

    #[error("continuation stalled at lambda = {lambda}: {cause}")]
    ContinuationStalled {
        lambda: f64,
        /// Last stage that did converge, if any.
        last_completed: Option<Box<StageReport>>,
        cause: Box<Error>,
    },

    #[error("a-priori bound blows up before T: first bad node {node} (t = {t})")]
    BlowupBeforeT { node: usize, t: f64 },

    #[error("certificate required: {0}")]
    CertificateRequired(String),

    #[error("ball invariance violated: {0}")]
    BallViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short stable name of the variant, used in run manifests.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid-grid",
            Error::InvalidSpace(_) => "invalid-space",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::NonFinite { .. } => "non-finite",
            Error::Range(_) => "range",
            Error::DegenerateAngle(_) => "degenerate-angle",
            Error::NoEpsilon0(_) => "no-epsilon0",
            Error::NotAContraction(_) => "not-a-contraction",
            Error::NoConvergence { .. } => "no-convergence",
            Error::ContinuationStalled { .. } => "continuation-stalled",
            Error::BlowupBeforeT { .. } => "blowup-before-t",
            Error::CertificateRequired(_) => "certificate-required",
            Error::BallViolation(_) => "ball-violation",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

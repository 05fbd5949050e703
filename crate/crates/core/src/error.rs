use thiserror::Error;

use crate::space::SpaceDesc;

pub type Result<T> = std::result::Result<T, KconeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KconeError {
    #[error("not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("stencil leaves domain at coordinate {0}")]
    StencilLeavesDomain(usize),

    #[error("space mismatch: expected {expected}, got {got}")]
    SpaceMismatch { expected: SpaceDesc, got: SpaceDesc },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("outside domain")]
    OutsideDomain,

    #[error("lp stalled after {0} iterations")]
    Stalled(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("domain starvation: no in-domain sample among {0} draws")]
    DomainStarvation(usize),

    #[error("degenerate sample: affine design matrix has rank {rank} < {needed}")]
    DegenerateSample { rank: usize, needed: usize },

    #[error("convert to H-rep first")]
    NeedsHRep,

    #[error("no analytic certificate for map kind {0}")]
    NoAnalyticCertificate(&'static str),

    #[error("no smooth gradient at eigenvalue crossings")]
    NoSmoothGradient,

    #[error("normals are linearly dependent (rank {rank} of {count})")]
    DependentNormals { rank: usize, count: usize },

    #[error("int K empty")]
    EmptyInterior,

    #[error("gradient unavailable at anchor")]
    GradientUnavailable,

    #[error("hypothesis requires pointed K")]
    NotPointed,

    #[error("input not convex along ray (quotient dropped from {prev} to {next} at t = {t})")]
    NotConvexAlongRay { t: f64, prev: f64, next: f64 },

    #[error("zero vector not allowed: {0}")]
    ZeroVector(&'static str),

    #[error("improper composite: no finite value among {0} probes")]
    ImproperComposite(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl KconeError {
    pub fn mismatch(expected: &SpaceDesc, got: &SpaceDesc) -> Self {
        KconeError::SpaceMismatch { expected: *expected, got: *got }
    }
}

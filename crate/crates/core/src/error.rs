use thiserror::Error;

/// Errors raised by the phase-space engine.
///
/// Variant names double as the diagnostic tags printed by the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("InvalidDimension: N = {0} (need N >= 2)")]
    InvalidDimension(usize),

    #[error("SpecMismatch: {what} has {got} samples, expected {expected}")]
    SpecMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("NotHermitian: hermiticity defect {0:e}")]
    NotHermitian(f64),

    #[error("GeometryMismatch: {0}")]
    GeometryMismatch(String),

    #[error("InvalidCutoff: M = {0}")]
    InvalidCutoff(usize),

    #[error("QuadratureFailure: relative change {0:e} after maximum refinement")]
    QuadratureFailure(f64),

    #[error("ThetaSingular: |sin(theta)| = {0:e}")]
    ThetaSingular(f64),

    #[error("NodeCountMismatch: certificate {certificate}, found {found}")]
    NodeCountMismatch { certificate: i64, found: usize },

    #[error("ContourDegenerate: zero within {0:e} of every admissible contour")]
    ContourDegenerate(f64),

    #[error("DegenerateNodeConfiguration: singular values {smallest:e} and {next:e}")]
    DegenerateNodeConfiguration { smallest: f64, next: f64 },

    #[error("ConditioningLimit: clustered packets need N <= 32, got {0}")]
    ConditioningLimit(usize),

    #[error("AmbiguousPeak: top candidates differ by {relative_gap:e} (t = {time})")]
    AmbiguousPeak { relative_gap: f64, time: f64 },

    #[error("TrackingBreakdown: no consistent matching between t = {from} and t = {to}")]
    TrackingBreakdown { from: f64, to: f64 },

    #[error("DegenerateEigenstate: level {index} has gap {gap:e}")]
    DegenerateEigenstate { index: usize, gap: f64 },

    #[error("PairingFailure: no partner for E = {0}")]
    PairingFailure(f64),

    #[error("DegenerateZeroMode: {0} zero modes")]
    DegenerateZeroMode(usize),

    #[error("EvanescentAsymptotics: E = {energy} below outer potential {outer}")]
    EvanescentAsymptotics { energy: f64, outer: f64 },

    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Short tag, e.g. `"NodeCountMismatch"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "InvalidDimension",
            Error::SpecMismatch { .. } => "SpecMismatch",
            Error::NotHermitian(_) => "NotHermitian",
            Error::GeometryMismatch(_) => "GeometryMismatch",
            Error::InvalidCutoff(_) => "InvalidCutoff",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::ThetaSingular(_) => "ThetaSingular",
            Error::NodeCountMismatch { .. } => "NodeCountMismatch",
            Error::ContourDegenerate(_) => "ContourDegenerate",
            Error::DegenerateNodeConfiguration { .. } => "DegenerateNodeConfiguration",
            Error::ConditioningLimit(_) => "ConditioningLimit",
            Error::AmbiguousPeak { .. } => "AmbiguousPeak",
            Error::TrackingBreakdown { .. } => "TrackingBreakdown",
            Error::DegenerateEigenstate { .. } => "DegenerateEigenstate",
            Error::PairingFailure(_) => "PairingFailure",
            Error::DegenerateZeroMode(_) => "DegenerateZeroMode",
            Error::EvanescentAsymptotics { .. } => "EvanescentAsymptotics",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

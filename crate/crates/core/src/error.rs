use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Every variant maps onto a stable string code (see [`GeomError::code`]) which
/// is what ends up in JSON reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("matrix is not symmetric (defect {0:.3e})")]
    Nonsymmetric(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("vectors are linearly dependent under the rank tolerance")]
    DependentBasis,
    #[error("no null partner: {0}")]
    NoPartner(String),
    #[error("subspace is degenerate (radical dimension {0})")]
    DegenerateSubspace(usize),
    #[error("complex structure invalid: J^2 + I defect {0:.3e}")]
    InvalidComplexStructure(f64),
    #[error("bilinear form is not symmetric (defect {0:.3e})")]
    NonsymmetricAlpha(f64),
    #[error("bilinear form is not flat (defect {0:.3e})")]
    NotFlat(f64),
    #[error("dim N(beta) = {dim} exceeds n - 2p - 1 = {bound}")]
    NullityTooLarge { dim: usize, bound: i64 },
    #[error("target inner product has signature {0:?}; need definite or Lorentzian")]
    BadSignature((usize, usize, usize)),
    #[error("radical of S(beta) has odd dimension {0}")]
    OddRadical(usize),
    #[error("S(beta) is nondegenerate although dim N(beta) is below n - 2p")]
    EmptyRadical,
    #[error("assertion failed: {0}")]
    AssertionFailed(String),
    #[error("inconsistent synthetic spec: {0}")]
    InconsistentSpec(String),
    #[error("point {0:?} is outside the chart domain")]
    OutOfDomain(Vec<f64>),
    #[error("tangent plane is degenerate")]
    TangentDegenerate,
    #[error("normal space is degenerate")]
    NormalDegenerate,
    #[error("map is not conformal (defect {0:.3e})")]
    NotConformal(f64),
    #[error("unclassified sample point: {0}")]
    UnclassifiedPoint(String),
    #[error("induced metrics differ (relative deviation {0:.3e})")]
    MetricMismatch(f64),
    #[error("adapted frame is degenerate")]
    FrameDegenerate,
    #[error("no admissible delta: {0}")]
    NoDelta(String),
    #[error("expected a hypersurface, got codimension {0}")]
    BadCodim(usize),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("generation failed: {0}")]
    GenerationFailed(String),
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
}

impl GeomError {
    pub fn code(&self) -> &'static str {
        match self {
            GeomError::Nonsymmetric(_) => "NONSYMMETRIC",
            GeomError::DimensionMismatch(_) => "DIMENSION_MISMATCH",
            GeomError::DependentBasis => "DEPENDENT_BASIS",
            GeomError::NoPartner(_) => "NO_PARTNER",
            GeomError::DegenerateSubspace(_) => "DEGENERATE_SUBSPACE",
            GeomError::InvalidComplexStructure(_) => "INVALID_J",
            GeomError::NonsymmetricAlpha(_) => "NONSYMMETRIC_ALPHA",
            GeomError::NotFlat(_) => "NOT_FLAT",
            GeomError::NullityTooLarge { .. } => "NULLITY_TOO_LARGE",
            GeomError::BadSignature(_) => "BAD_SIGNATURE",
            GeomError::OddRadical(_) => "ODD_S",
            GeomError::EmptyRadical => "EMPTY_RADICAL",
            GeomError::AssertionFailed(_) => "ASSERTION_FAILED",
            GeomError::InconsistentSpec(_) => "INCONSISTENT_SPEC",
            GeomError::OutOfDomain(_) => "OUT_OF_DOMAIN",
            GeomError::TangentDegenerate => "TANGENT_DEGENERATE",
            GeomError::NormalDegenerate => "NORMAL_DEGENERATE",
            GeomError::NotConformal(_) => "NOT_CONFORMAL",
            GeomError::UnclassifiedPoint(_) => "UNCLASSIFIED_POINT",
            GeomError::MetricMismatch(_) => "METRIC_MISMATCH",
            GeomError::FrameDegenerate => "FRAME_DEGENERATE",
            GeomError::NoDelta(_) => "NO_DELTA",
            GeomError::BadCodim(_) => "BAD_CODIM",
            GeomError::BadParams(_) => "BAD_PARAMS",
            GeomError::DomainViolation(_) => "DOMAIN_VIOLATION",
            GeomError::GenerationFailed(_) => "GENERATION_FAILED",
            GeomError::UnknownSuite(_) => "UNKNOWN_SUITE",
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;

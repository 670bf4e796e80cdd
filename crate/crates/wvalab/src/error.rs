use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("pre- and post-selection are orthogonal (overlap {overlap:e})")]
    OrthogonalSelection { overlap: f64 },

    #[error("pre- and post-selection are not orthogonal (overlap {overlap:e})")]
    NotOrthogonal { overlap: f64 },

    #[error("denominator vanishes ({0})")]
    DegenerateDenominator(String),

    #[error("observable annihilates the pre-selected state")]
    NullVector,

    #[error("grid half-width {span} is below the required {required}")]
    InsufficientSpan { span: f64, required: f64 },

    #[error("Fock truncation too tight: tail mass {tail:e} beyond n_max = {n_max}")]
    TruncationTooTight { tail: f64, n_max: usize },

    #[error("meter representation is incompatible with the coupling generator: {0}")]
    IncompatibleMeter(String),

    #[error("post-selection succeeds with probability {p_f:e}; conditioned meter undefined")]
    EmptyPostselection { p_f: f64 },

    #[error("finite-difference probe [{lo}, {hi}] leaves the valid domain")]
    StepTooLarge { lo: f64, hi: f64 },

    #[error("distribution has zero variance")]
    ZeroVariance,

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("no closed form for {scheme} with {case}")]
    UnsupportedCombination { scheme: String, case: String },

    #[error("pixel width {pixel} holds fewer than 8 grid samples of spacing {spacing}")]
    ResolutionTooCoarse { pixel: f64, spacing: f64 },

    #[error("validity ordering violated: {0}")]
    ValidityViolation(String),

    #[error("likelihood is flat: {0}")]
    FlatLikelihood(String),

    #[error("likelihood maximum at grid boundary g = {at}")]
    BoundaryMaximum { at: f64 },

    #[error("operation requires a pure meter state")]
    MixedMeter,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

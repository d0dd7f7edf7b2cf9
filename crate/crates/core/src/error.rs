use thiserror::Error;

use crate::sample::Side;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("treatment column is present on some records and absent on others")]
    MixedTreatmentPresence,

    #[error("insufficient data on the {side} side: {found} usable records, need {needed}")]
    InsufficientSideData {
        side: Side,
        found: usize,
        needed: usize,
    },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("non-binary value in `{field}` at record {index}: {value}")]
    NonBinaryValue {
        field: &'static str,
        index: usize,
        value: f64,
    },

    #[error("non-finite value in `{field}` at record {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("invalid exposure limits: need 0 <= e_minus < e_plus <= 1, got e_minus = {e_minus}, e_plus = {e_plus}")]
    InvalidExposure { e_minus: f64, e_plus: f64 },

    #[error("invalid fit specification: {0}")]
    InvalidSpec(String),

    #[error("singular weighted design on the {side} side")]
    SingularDesign { side: Side },

    #[error("running variable has zero spread")]
    DegenerateRunning,

    #[error("denominator {value} is within epsilon = {epsilon} of zero")]
    WeakDenominator { value: f64, epsilon: f64 },

    #[error("first stage {value} is within epsilon = {epsilon} of zero")]
    WeakFirstStage { value: f64, epsilon: f64 },

    #[error("probability argument out of range: {0}")]
    DomainError(f64),

    #[error("critical value undefined: both standard errors are zero")]
    NoVariance,

    #[error("incoherent analysis plan: {0}")]
    IncoherentPlan(String),

    #[error("infeasible population limits: {0}")]
    Infeasible(String),

    #[error("incoherent inputs: {0}")]
    IncoherentInputs(String),

    #[error("invalid data-generating process: {0}")]
    InvalidDgp(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable identifier for reports and CLI error objects.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Empty(_) => "EMPTY_INPUT",
            Error::MixedTreatmentPresence => "MIXED_TREATMENT_PRESENCE",
            Error::InsufficientSideData { .. } => "INSUFFICIENT_SIDE_DATA",
            Error::ScenarioMismatch(_) => "SCENARIO_MISMATCH",
            Error::NonBinaryValue { .. } => "NON_BINARY_VALUE",
            Error::NonFinite { .. } => "NON_FINITE",
            Error::InvalidExposure { .. } => "INVALID_EXPOSURE",
            Error::InvalidSpec(_) => "INVALID_SPEC",
            Error::SingularDesign { .. } => "SINGULAR_DESIGN",
            Error::DegenerateRunning => "DEGENERATE_RUNNING",
            Error::WeakDenominator { .. } => "WEAK_DENOMINATOR",
            Error::WeakFirstStage { .. } => "WEAK_FIRST_STAGE",
            Error::DomainError(_) => "DOMAIN_ERROR",
            Error::NoVariance => "NO_VARIANCE",
            Error::IncoherentPlan(_) => "INCOHERENT_PLAN",
            Error::Infeasible(_) => "INFEASIBLE",
            Error::IncoherentInputs(_) => "INCOHERENT_INPUTS",
            Error::InvalidDgp(_) => "INVALID_DGP",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid risk profile: {0}")]
    InvalidProfile(String),

    #[error("invalid market scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid sensing distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid reference point: {0}")]
    InvalidReference(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("no pivot outcome: every realization lies on one side of c_s/c_l = {ratio}")]
    PivotOutOfRange { ratio: f64 },

    #[error("no sign change of g_{j} on [{lo}, {hi}]")]
    NoSignChange { j: usize, lo: f64, hi: f64 },

    #[error("results were computed from different inputs")]
    InputMismatch,

    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

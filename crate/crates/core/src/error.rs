use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sample has no class-{class} observations")]
    EmptyClass { class: u8 },

    #[error("left-out size {requested} must be smaller than the class-0 count {available}")]
    InsufficientClass0 { requested: usize, available: usize },

    #[error("logistic fit did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("design matrix is rank-deficient beyond the ridge floor")]
    DegenerateDesign,

    #[error("covariance of class {class} is singular after regularization")]
    SingularCovariance { class: u8 },

    #[error("approach {approach} cannot be combined with method {method}")]
    IncompatibleApproach { approach: String, method: String },

    #[error("resampling would leave zero class-1 rows")]
    EmptyResult,

    #[error("left-out class-0 sample of size {m} is too small; at least {required} rows are needed")]
    MinSampleSize { m: usize, required: usize },

    #[error("{count} rows carry label 1 where only class-0 rows are allowed")]
    NonClass0Rows { count: usize },

    #[error("no candidate cost reaches the target; estimated bounds {profile:?}")]
    NoFeasibleCost { profile: Vec<f64> },

    #[error("classifiers disagree at row {index} (NP score {np_score}, CS score {cs_score})")]
    EquivalenceBroken {
        index: usize,
        np_score: f64,
        cs_score: f64,
    },

    #[error("rebalancing correspondence needs the generative model behind the scorer")]
    MissingModelContext,
}

//! Synthetic distributions and the Monte-Carlo experiment harness.

mod distributions;
mod experiment;

pub use distributions::{
    generate, generate_class, DistributionKind, DistributionSpec, GAUSSIAN_OFF_DIAGONAL, GAUSSIAN_SHIFT,
    T_DOF, T_SHIFT,
};
pub use experiment::{
    run_experiment, summarize, violation_rate, Algorithm, ExperimentConfig, ExperimentReport, GroupSummary,
    LeftoutSize, RepetitionRecord,
};

//! Asymmetric binary classification: Neyman-Pearson umbrella thresholding,
//! cost-sensitive classifiers, bootstrap upper bounds on their type I error,
//! cost selection and a simulation harness.

mod binomial;
pub mod classifiers;
pub mod correspondence;
pub mod data;
pub mod error;
pub mod np;
pub mod seed;
pub mod selectors;
pub mod simgen;
pub mod tube;

pub use classifiers::{CostPair, CsApproach, CsRecipe, Method, ScoringFunction, ThresholdClassifier};
pub use data::LabeledSample;
pub use error::{Error, Result};
pub use seed::Seed;

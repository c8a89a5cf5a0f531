//! Scoring functions, thresholded classifiers and the cost-sensitive
//! construction approaches.

mod cs;
mod generative;
mod logistic;
mod stratify;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cs::{build_cs_classifier, train_scorer, CsRecipe, Learner};
pub use generative::{
    posterior_score, train_generative, train_generative_weighted, ClassDensity, GenerativeMethod,
    GenerativeModel,
};
pub use logistic::{train_logistic, train_logistic_weighted, LogisticModel};
pub use stratify::{stratify, stratify_indices, StratifyMode};

/// Normalized misclassification costs with `c0 + c1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CostPair {
    c0: f64,
}

impl CostPair {
    pub fn new(c0: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0 < 1.0) {
            return Err(Error::InvalidInput(format!("cost c0 = {c0} must lie in (0, 1)")));
        }
        Ok(CostPair { c0 })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c1(&self) -> f64 {
        1.0 - self.c0
    }
}

impl TryFrom<f64> for CostPair {
    type Error = Error;
    fn try_from(c0: f64) -> Result<Self> {
        CostPair::new(c0)
    }
}

impl From<CostPair> for f64 {
    fn from(c: CostPair) -> f64 {
        c.c0
    }
}

/// In-repo base classification methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lr,
    Lda,
    Qda,
    Gnb,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lr, Method::Lda, Method::Qda, Method::Gnb];

    pub fn generative(self) -> Option<GenerativeMethod> {
        match self {
            Method::Lr => None,
            Method::Lda => Some(GenerativeMethod::Lda),
            Method::Qda => Some(GenerativeMethod::Qda),
            Method::Gnb => Some(GenerativeMethod::Gnb),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::Lda => "lda",
            Method::Qda => "qda",
            Method::Gnb => "gnb",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(Method::Lr),
            "lda" => Ok(Method::Lda),
            "qda" => Ok(Method::Qda),
            "gnb" | "nb" | "naive-bayes" => Ok(Method::Gnb),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

/// How costs enter a cost-sensitive classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsApproach {
    /// Pre-training resampling toward the cost ratio.
    Stratification,
    /// Observation weights `(c0, c1)` (logistic regression only).
    Weighting,
    /// Costs replace the class priors of a generative model.
    Rebalancing,
    /// Posterior thresholded at `c0`.
    PostTraining,
}

impl CsApproach {
    pub fn name(self) -> &'static str {
        match self {
            CsApproach::Stratification => "stratification",
            CsApproach::Weighting => "weighting",
            CsApproach::Rebalancing => "rebalancing",
            CsApproach::PostTraining => "post-training",
        }
    }
}

impl fmt::Display for CsApproach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CsApproach {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stratification" | "stratify" => Ok(CsApproach::Stratification),
            "weighting" | "weight" => Ok(CsApproach::Weighting),
            "rebalancing" | "rebalance" => Ok(CsApproach::Rebalancing),
            "post-training" | "posttraining" | "post" => Ok(CsApproach::PostTraining),
            other => Err(Error::InvalidInput(format!("unknown approach '{other}'"))),
        }
    }
}

type ScoreFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A user-supplied, already trained scoring function.
#[derive(Clone)]
pub struct ExternalScorer {
    score: Arc<ScoreFn>,
    posterior: bool,
}

impl fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("posterior", &self.posterior)
            .finish_non_exhaustive()
    }
}

/// A trained map from features to a real score. Probabilistic variants
/// return the estimated posterior `P(Y = 1 | x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoringFunction {
    Logistic(LogisticModel),
    Generative {
        model: GenerativeModel,
        priors: [f64; 2],
    },
    Constant {
        value: f64,
    },
    #[serde(skip)]
    External(ExternalScorer),
}

impl PartialEq for ScoringFunction {
    fn eq(&self, other: &Self) -> bool {
        use ScoringFunction::*;
        match (self, other) {
            (Logistic(a), Logistic(b)) => a == b,
            (
                Generative { model: a, priors: pa },
                Generative { model: b, priors: pb },
            ) => a == b && pa == pb,
            (Constant { value: a }, Constant { value: b }) => a == b,
            (External(a), External(b)) => {
                Arc::ptr_eq(&a.score, &b.score) && a.posterior == b.posterior
            }
            _ => false,
        }
    }
}

impl ScoringFunction {
    pub fn external<F>(score: F, posterior: bool) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScoringFunction::External(ExternalScorer {
            score: Arc::new(score),
            posterior,
        })
    }

    pub fn constant(value: f64) -> Self {
        ScoringFunction::Constant { value }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            ScoringFunction::Logistic(m) => m.posterior(x),
            ScoringFunction::Generative { model, priors } => model.posterior(x, *priors),
            ScoringFunction::Constant { value } => *value,
            ScoringFunction::External(e) => (e.score)(x),
        }
    }

    pub fn is_posterior(&self) -> bool {
        match self {
            ScoringFunction::Logistic(_) | ScoringFunction::Generative { .. } => true,
            ScoringFunction::Constant { value } => (0.0..=1.0).contains(value),
            ScoringFunction::External(e) => e.posterior,
        }
    }

    /// Number of distinct input rows the scorer was fitted on, when known.
    pub fn training_rows(&self) -> Option<usize> {
        match self {
            ScoringFunction::Logistic(m) => Some(m.training_rows),
            ScoringFunction::Generative { model, .. } => Some(model.training_rows),
            _ => None,
        }
    }

    pub fn generative_model(&self) -> Option<&GenerativeModel> {
        match self {
            ScoringFunction::Generative { model, .. } => Some(model),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ScoringFunction::Logistic(_) => "logistic",
            ScoringFunction::Generative { model, .. } => model.method.name(),
            ScoringFunction::Constant { .. } => "constant",
            ScoringFunction::External(_) => "external",
        }
    }
}

/// `predict(x) = 1` iff `score(x) > threshold`; ties go to class 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdClassifier {
    pub scorer: ScoringFunction,
    pub threshold: f64,
}

impl ThresholdClassifier {
    pub fn new(scorer: ScoringFunction, threshold: f64) -> Self {
        ThresholdClassifier { scorer, threshold }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.scorer.score(x) > self.threshold)
    }

    pub fn training_rows(&self) -> Option<usize> {
        self.scorer.training_rows()
    }
}

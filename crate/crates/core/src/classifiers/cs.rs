use serde::{Deserialize, Serialize};

use super::generative::{posterior_score, train_generative_weighted};
use super::logistic::{train_logistic, train_logistic_weighted};
use super::stratify::{multiplicities, stratify_indices, StratifyMode};
use super::{CostPair, CsApproach, Method, ScoringFunction, ThresholdClassifier};
use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::seed::Seed;

/// Where scores come from: an in-repo method trained on demand, or a
/// pre-trained external scorer.
#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Method(Method),
    External(ScoringFunction),
}

impl Learner {
    pub fn name(&self) -> String {
        match self {
            Learner::Method(m) => m.name().to_string(),
            Learner::External(_) => "external".to_string(),
        }
    }
}

impl From<Method> for Learner {
    fn from(m: Method) -> Self {
        Learner::Method(m)
    }
}

/// Everything except the cost needed to build a CS classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsRecipe {
    pub approach: CsApproach,
    pub method: Method,
    #[serde(default)]
    pub stratify_mode: StratifyMode,
}

impl CsRecipe {
    pub fn new(approach: CsApproach, method: Method) -> Self {
        CsRecipe {
            approach,
            method,
            stratify_mode: StratifyMode::Oversample0,
        }
    }

    pub fn check(&self) -> Result<()> {
        check_compatible(self.approach, &Learner::Method(self.method))
    }

    pub fn build(&self, sample: &LabeledSample, costs: CostPair, seed: Seed) -> Result<ThresholdClassifier> {
        build_cs_classifier(
            sample,
            costs,
            self.approach,
            &Learner::Method(self.method),
            self.stratify_mode,
            seed,
        )
    }
}

fn check_compatible(approach: CsApproach, learner: &Learner) -> Result<()> {
    let ok = match (approach, learner) {
        (CsApproach::Stratification, Learner::Method(_)) => true,
        (CsApproach::Weighting, Learner::Method(m)) => *m == Method::Lr,
        (CsApproach::Rebalancing, Learner::Method(m)) => m.generative().is_some(),
        (CsApproach::PostTraining, Learner::Method(_)) => true,
        (CsApproach::PostTraining, Learner::External(s)) => s.is_posterior(),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleApproach {
            approach: approach.to_string(),
            method: learner.name(),
        })
    }
}

fn fit_weighted(sample: &LabeledSample, weights: &[f64], method: Method) -> Result<ScoringFunction> {
    match method.generative() {
        None => Ok(ScoringFunction::Logistic(train_logistic_weighted(sample, weights)?)),
        Some(g) => {
            let model = train_generative_weighted(sample, weights, g)?;
            let priors = (model.priors[0], model.priors[1]);
            posterior_score(&model, priors)
        }
    }
}

/// Plug-in posterior scorer trained on the raw sample with its natural class
/// proportions. External learners are returned as-is.
pub fn train_scorer(sample: &LabeledSample, learner: &Learner) -> Result<ScoringFunction> {
    match learner {
        Learner::Method(Method::Lr) => Ok(ScoringFunction::Logistic(train_logistic(sample, 1.0, 1.0)?)),
        Learner::Method(m) => fit_weighted(sample, &vec![1.0; sample.n()], *m),
        Learner::External(s) => Ok(s.clone()),
    }
}

/// Builds a cost-sensitive classifier.
///
/// * stratification: fit on the stratified sample, threshold 1/2
/// * weighting: logistic fit with row weights `(c0, c1)`, threshold 1/2
/// * rebalancing: generative posterior with priors `(c0, c1)`, threshold 1/2
/// * post-training: plug-in posterior, threshold `c0`
///
/// Stratified fits use row multiplicities as weights, which is the same
/// objective as fitting the materialized resample.
pub fn build_cs_classifier(
    sample: &LabeledSample,
    costs: CostPair,
    approach: CsApproach,
    learner: &Learner,
    stratify_mode: StratifyMode,
    seed: Seed,
) -> Result<ThresholdClassifier> {
    check_compatible(approach, learner)?;
    match (approach, learner) {
        (CsApproach::Stratification, Learner::Method(m)) => {
            let indices = stratify_indices(sample, costs, stratify_mode, seed)?;
            let weights = multiplicities(sample.n(), &indices);
            Ok(ThresholdClassifier::new(fit_weighted(sample, &weights, *m)?, 0.5))
        }
        (CsApproach::Weighting, _) => {
            let model = train_logistic(sample, costs.c0(), costs.c1())?;
            Ok(ThresholdClassifier::new(ScoringFunction::Logistic(model), 0.5))
        }
        (CsApproach::Rebalancing, Learner::Method(m)) => {
            let g = m.generative().expect("checked above");
            let model = train_generative_weighted(sample, &vec![1.0; sample.n()], g)?;
            let scorer = posterior_score(&model, (costs.c0(), costs.c1()))?;
            Ok(ThresholdClassifier::new(scorer, 0.5))
        }
        (CsApproach::PostTraining, _) => {
            let scorer = train_scorer(sample, learner)?;
            Ok(ThresholdClassifier::new(scorer, costs.c0()))
        }
        _ => unreachable!("compatibility checked above"),
    }
}

//! Exact maps from an NP classifier to a CS classifier with the same
//! decision region.
//!
//! * Rebalancing: for a generative scorer with training priors `pi0_hat`,
//!   replacing the priors by `(c0, 1 - c0)` with
//!   `c0 = t pi0 / ((1 - t)(1 - pi0) + t pi0)` and thresholding at 1/2
//!   reproduces `1(eta_hat(x) > t)`.
//! * Post-training: thresholding the same posterior at `c0 = t`.

use serde::{Deserialize, Serialize};

use crate::classifiers::{posterior_score, CsApproach, GenerativeModel, ScoringFunction, ThresholdClassifier};
use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::np::NpResult;

/// Points whose NP score lies this close to the NP threshold are skipped
/// during verification.
pub const BOUNDARY_BAND: f64 = 1e-12;

/// Rebalancing cost reproducing the NP threshold `t_np` on the posterior
/// scale, given the training class-0 proportion.
pub fn rebalance_cost(t_np: f64, pi0_hat: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_np) {
        return Err(Error::InvalidInput(format!("t_np = {t_np} must lie in [0, 1]")));
    }
    if !(pi0_hat > 0.0 && pi0_hat < 1.0) {
        return Err(Error::InvalidInput(format!("pi0_hat = {pi0_hat} must lie in (0, 1)")));
    }
    let num = t_np * pi0_hat;
    Ok(num / ((1.0 - t_np) * (1.0 - pi0_hat) + num))
}

/// Post-training cost: the NP threshold itself.
pub fn posttrain_cost(t_np: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_np) {
        return Err(Error::InvalidInput(format!("t_np = {t_np} must lie in [0, 1]")));
    }
    Ok(t_np)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceResult {
    pub c0: f64,
    pub approach: CsApproach,
    pub cs_classifier: ThresholdClassifier,
    pub equivalence_checked: bool,
    /// Points compared during verification.
    pub verified_points: usize,
    /// Points skipped inside the boundary band.
    pub excluded_points: usize,
}

/// Comparison of two classifiers' labels on a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AgreementCount {
    pub compared: usize,
    pub excluded: usize,
    pub disagreements: usize,
    pub first_disagreement: Option<usize>,
}

/// Compares labels of the NP classifier and its CS counterpart on every row,
/// skipping rows whose NP score is within [`BOUNDARY_BAND`] of its threshold.
pub fn compare_labels(
    np: &ThresholdClassifier,
    cs: &ThresholdClassifier,
    sample: &LabeledSample,
) -> AgreementCount {
    let mut count = AgreementCount::default();
    for (i, x) in sample.rows().enumerate() {
        let s = np.scorer.score(x);
        if (s - np.threshold).abs() < BOUNDARY_BAND {
            count.excluded += 1;
            continue;
        }
        count.compared += 1;
        if u8::from(s > np.threshold) != cs.predict(x) {
            count.disagreements += 1;
            count.first_disagreement.get_or_insert(i);
        }
    }
    count
}

/// CS classifier for `approach` carrying the NP classifier's decision region.
pub fn cs_counterpart(np: &ThresholdClassifier, approach: CsApproach) -> Result<(f64, ThresholdClassifier)> {
    match approach {
        CsApproach::Rebalancing => {
            let (model, priors) = match &np.scorer {
                ScoringFunction::Generative { model, priors } => (model, priors),
                _ => return Err(Error::MissingModelContext),
            };
            let c0 = rebalance_cost(np.threshold.clamp(0.0, 1.0), priors[0])?;
            let scorer = posterior_score(model, (c0, 1.0 - c0))?;
            Ok((c0, ThresholdClassifier::new(scorer, 0.5)))
        }
        CsApproach::PostTraining => {
            if !np.scorer.is_posterior() {
                return Err(Error::MissingModelContext);
            }
            let c0 = posttrain_cost(np.threshold.clamp(0.0, 1.0))?;
            Ok((c0, ThresholdClassifier::new(np.scorer.clone(), c0)))
        }
        other => Err(Error::IncompatibleApproach {
            approach: other.to_string(),
            method: np.scorer.kind().to_string(),
        }),
    }
}

/// Maps an NP classifier to its CS counterpart and checks label equality on
/// `verify_on`.
pub fn np_to_cs(np: &NpResult, approach: CsApproach, verify_on: &LabeledSample) -> Result<CorrespondenceResult> {
    let (c0, cs) = cs_counterpart(&np.classifier, approach)?;
    let count = compare_labels(&np.classifier, &cs, verify_on);
    if let Some(index) = count.first_disagreement {
        let x = verify_on.row(index);
        return Err(Error::EquivalenceBroken {
            index,
            np_score: np.classifier.scorer.score(x),
            cs_score: cs.scorer.score(x),
        });
    }
    Ok(CorrespondenceResult {
        c0,
        approach,
        cs_classifier: cs,
        equivalence_checked: true,
        verified_points: count.compared,
        excluded_points: count.excluded,
    })
}

/// The three equivalent statements behind the rebalancing map at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RebalanceChain {
    /// Rebalanced posterior above 1/2.
    pub rebalanced: bool,
    /// `log f1(x) - log f0(x)` above `log(c0 / (1 - c0))`.
    pub density_ratio: bool,
    /// Plug-in posterior above `t_np`.
    pub posterior: bool,
    /// Gap between the log density ratio and its cut-off.
    pub log_margin: f64,
}

pub fn rebalance_chain(model: &GenerativeModel, pi0_hat: f64, t_np: f64, x: &[f64]) -> Result<RebalanceChain> {
    let c0 = rebalance_cost(t_np, pi0_hat)?;
    let (l0, l1) = model.log_densities(x);
    let log_margin = (l1 - l0) - (c0 / (1.0 - c0)).ln();
    Ok(RebalanceChain {
        rebalanced: model.posterior(x, [c0, 1.0 - c0]) > 0.5,
        density_ratio: log_margin > 0.0,
        posterior: model.posterior(x, [pi0_hat, 1.0 - pi0_hat]) > t_np,
        log_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train_generative, train_scorer, GenerativeMethod, Learner, Method};
    use crate::np::{np_classifier, NpSettings};
    use crate::seed::Seed;
    use rand::Rng;

    #[test]
    fn cost_examples() {
        assert_eq!(rebalance_cost(0.5, 0.5).unwrap(), 0.5);
        for t in [0.0, 0.1, 0.37, 0.9, 1.0] {
            assert!((rebalance_cost(t, 0.5).unwrap() - t).abs() < 1e-15);
        }
        assert!((rebalance_cost(0.8, 0.3).unwrap() - 0.24 / 0.38).abs() < 1e-15);
        assert_eq!(posttrain_cost(0.73).unwrap(), 0.73);
        assert_eq!(posttrain_cost(0.0).unwrap(), 0.0);
        assert!(rebalance_cost(0.5, 0.0).is_err());
        assert!(posttrain_cost(1.5).is_err());
    }

    fn gaussian_pair(n: usize, seed: u64) -> LabeledSample {
        let mut rng = Seed::new(seed).rng();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let y = u8::from(i % 3 == 0);
            let x0: f64 = rng.random::<f64>() + f64::from(y) * 0.8;
            let x1: f64 = rng.random::<f64>() * (1.0 + f64::from(y));
            xs.extend([x0, x1]);
            ys.push(y);
        }
        LabeledSample::new(xs, ys, 2).unwrap()
    }

    #[test]
    fn np_to_cs_roundtrip_all_methods() {
        let train = gaussian_pair(600, 1);
        let left = {
            let s = gaussian_pair(900, 2);
            s.select(&s.class_indices(0)).unwrap()
        };
        let verify = gaussian_pair(2000, 3);
        let settings = NpSettings::new(0.1, 0.1).unwrap();
        for (method, approach) in [
            (Method::Lda, CsApproach::Rebalancing),
            (Method::Qda, CsApproach::Rebalancing),
            (Method::Gnb, CsApproach::Rebalancing),
            (Method::Lr, CsApproach::PostTraining),
            (Method::Qda, CsApproach::PostTraining),
        ] {
            let scorer = train_scorer(&train, &Learner::Method(method)).unwrap();
            let np = np_classifier(&scorer, &left, settings).unwrap();
            let r = np_to_cs(&np, approach, &verify).unwrap();
            assert!(r.equivalence_checked);
            assert_eq!(r.verified_points + r.excluded_points, verify.n());
        }
    }

    #[test]
    fn rebalancing_needs_generative_scorer() {
        let train = gaussian_pair(200, 4);
        let scorer = train_scorer(&train, &Learner::Method(Method::Lr)).unwrap();
        let np = ThresholdClassifier::new(scorer, 0.7);
        assert_eq!(cs_counterpart(&np, CsApproach::Rebalancing), Err(Error::MissingModelContext));
        let raw = ThresholdClassifier::new(ScoringFunction::external(|x: &[f64]| x[0] * 10.0, false), 3.0);
        assert_eq!(cs_counterpart(&raw, CsApproach::PostTraining), Err(Error::MissingModelContext));
    }

    #[test]
    fn zero_threshold_predicts_one_where_posterior_positive() {
        let train = gaussian_pair(300, 5);
        let model = train_generative(&train, GenerativeMethod::Lda).unwrap();
        let balanced = posterior_score(&model, (0.5, 0.5)).unwrap();
        let np = ThresholdClassifier::new(balanced, 0.0);
        let (c0, cs) = cs_counterpart(&np, CsApproach::Rebalancing).unwrap();
        assert_eq!(c0, 0.0);
        for x in train.rows() {
            if np.scorer.score(x) > BOUNDARY_BAND {
                assert_eq!(cs.predict(x), 1);
            }
        }
    }

    #[test]
    fn chain_statements_agree() {
        let train = gaussian_pair(500, 6);
        let probe = gaussian_pair(3000, 7);
        for method in [GenerativeMethod::Lda, GenerativeMethod::Qda, GenerativeMethod::Gnb] {
            let model = train_generative(&train, method).unwrap();
            let pi0 = model.priors[0];
            for t in [0.2, 0.5, 0.8, 0.95] {
                for x in probe.rows() {
                    let c = rebalance_chain(&model, pi0, t, x).unwrap();
                    if c.log_margin.abs() > 1e-10 {
                        assert_eq!(c.rebalanced, c.density_ratio);
                        assert_eq!(c.density_ratio, c.posterior);
                    }
                }
            }
        }
    }
}

//! High-probability upper bounds on the population type I error of a fixed
//! cost-sensitive classifier.
//!
//! For a classifier `1(s(x) > t)` and a left-out class-0 sample of size `m`,
//! the surrogate classifier thresholded at the largest left-out score `<= t`
//! has a type I error at least as large as the classifier's, and exceeds
//! `alpha` with probability at most `(1 - alpha + u)^m - u^m` with
//! `u = 1 - F(t)`. Solving that bound for `alpha` at level `delta`, with `F(t)`
//! estimated, gives the estimators here:
//!
//! * [`plugin_alpha`] / [`plugin_estimate`]: `F(t)` from the left-out scores.
//! * [`tubec`]: the `(1 - delta)`-quantile over bootstrap resamples.
//! * [`tube`]: no left-out sample; the training-sample empirical error is
//!   corrected by the average TUBEc-minus-empirical gap over random splits.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{CostPair, CsRecipe, ThresholdClassifier};
use crate::data::{empirical_type1, leftout_count, split_class0, LabeledSample};
use crate::error::{Error, Result};
use crate::np::check_unit;
use crate::seed::Seed;

pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_SPLITS: usize = 30;
pub const DEFAULT_LEFTOUT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Tubec,
    Tube,
    PlugIn,
    Empirical,
}

/// Per-split pieces of a TUBE estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitComponent {
    /// TUBEc estimate of the split classifier on its left-out rows.
    pub tubec: f64,
    /// Empirical type I error of the split classifier on its training rows.
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    pub delta: Option<f64>,
    pub bootstrap: Option<usize>,
    pub splits: Option<usize>,
    /// Per-replicate bounds (TUBEc only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bootstrap_values: Vec<f64>,
    /// Training-sample empirical type I error of the full classifier (TUBE only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_sample_empirical: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub split_components: Vec<SplitComponent>,
}

impl AlphaEstimate {
    fn simple(value: f64, kind: EstimateKind, delta: Option<f64>) -> Self {
        AlphaEstimate {
            value,
            kind,
            delta,
            bootstrap: None,
            splits: None,
            bootstrap_values: Vec::new(),
            full_sample_empirical: None,
            split_components: Vec::new(),
        }
    }
}

/// Bound on the surrogate violation probability given `F(t)`.
pub fn surrogate_delta(f_at_t: f64, m: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_at_t) {
        return Err(Error::InvalidInput(format!("F(t) = {f_at_t} must lie in [0, 1]")));
    }
    check_unit("alpha", alpha)?;
    if m == 0 {
        return Err(Error::InvalidInput("m must be positive".into()));
    }
    if f_at_t < 1.0 - alpha {
        return Ok(1.0);
    }
    let u = 1.0 - f_at_t;
    let m = m as i32;
    Ok((1.0 - alpha + u).powi(m) - u.powi(m))
}

/// `2 - F - (delta + (1 - F)^m)^(1/m)`, clamped into `[0, 1]`.
pub fn plugin_alpha(f_hat: f64, m: usize, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_hat) {
        return Err(Error::InvalidInput(format!("F = {f_hat} must lie in [0, 1]")));
    }
    check_unit("delta", delta)?;
    if m == 0 {
        return Err(Error::InvalidInput("m must be positive".into()));
    }
    Ok(plugin_unchecked(f_hat, m, delta))
}

fn plugin_unchecked(f_hat: f64, m: usize, delta: f64) -> f64 {
    let u = 1.0 - f_hat;
    // (delta + u^m)^(1/m) = exp(L / m); 2 - F - exp(L / m) = u - expm1(L / m).
    let log_root = (delta + u.powi(m as i32)).ln() / m as f64;
    (u - log_root.exp_m1()).clamp(0.0, 1.0)
}

/// Bound from a count of left-out scores `<= t`; no score at or below the
/// threshold gives 1.
fn bound_from_count(below: usize, m: usize, delta: f64) -> f64 {
    if below == 0 {
        1.0
    } else {
        plugin_unchecked(below as f64 / m as f64, m, delta)
    }
}

/// Order statistic at 1-based index `ceil((1 - delta) B)` of the sorted values.
pub(crate) fn upper_quantile(values: &[f64], delta: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len();
    let idx = (((1.0 - delta) * b as f64) - 1e-9).ceil() as usize;
    sorted[idx.clamp(1, b) - 1]
}

fn below_threshold(classifier: &ThresholdClassifier, leftout0: &LabeledSample) -> Result<Vec<bool>> {
    leftout0.require_class0_only()?;
    Ok(leftout0
        .rows()
        .map(|x| classifier.scorer.score(x) <= classifier.threshold)
        .collect())
}

/// Empirical type I error of the classifier on class-0 rows.
pub fn empirical_alpha(classifier: &ThresholdClassifier, class0: &LabeledSample) -> Result<AlphaEstimate> {
    let below = below_threshold(classifier, class0)?;
    let above = below.iter().filter(|b| !**b).count();
    Ok(AlphaEstimate::simple(
        above as f64 / below.len() as f64,
        EstimateKind::Empirical,
        None,
    ))
}

/// Plug-in bound with `F(t)` estimated on the un-resampled left-out scores.
pub fn plugin_estimate(
    classifier: &ThresholdClassifier,
    leftout0: &LabeledSample,
    delta: f64,
) -> Result<AlphaEstimate> {
    check_unit("delta", delta)?;
    let below = below_threshold(classifier, leftout0)?;
    let count = below.iter().filter(|b| **b).count();
    Ok(AlphaEstimate::simple(
        bound_from_count(count, below.len(), delta),
        EstimateKind::PlugIn,
        Some(delta),
    ))
}

/// TUBEc: bootstrap estimate of a `(1 - delta)`-probability upper bound on
/// the classifier's population type I error from left-out class-0 rows.
pub fn tubec(
    classifier: &ThresholdClassifier,
    leftout0: &LabeledSample,
    delta: f64,
    bootstrap: usize,
    seed: Seed,
) -> Result<AlphaEstimate> {
    check_unit("delta", delta)?;
    if bootstrap == 0 {
        return Err(Error::InvalidInput("bootstrap count must be positive".into()));
    }
    let below = below_threshold(classifier, leftout0)?;
    let m = below.len();
    // The largest order with T(k) <= t equals the number of resampled scores <= t.
    let counts: Vec<usize> = (0..bootstrap)
        .into_par_iter()
        .with_min_len(32)
        .map(|b| {
            let mut rng = seed.derive(b as u64).rng();
            (0..m).filter(|_| below[rng.random_range(0..m)]).count()
        })
        .collect();
    Ok(tubec_from_counts(&counts, m, delta))
}

pub(crate) fn tubec_from_counts(counts: &[usize], m: usize, delta: f64) -> AlphaEstimate {
    let values: Vec<f64> = counts.iter().map(|&c| bound_from_count(c, m, delta)).collect();
    AlphaEstimate {
        value: upper_quantile(&values, delta),
        kind: EstimateKind::Tubec,
        delta: Some(delta),
        bootstrap: Some(counts.len()),
        splits: None,
        bootstrap_values: values,
        full_sample_empirical: None,
        split_components: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeSettings {
    pub delta: f64,
    pub bootstrap: usize,
    pub splits: usize,
    pub leftout_fraction: f64,
}

impl TubeSettings {
    pub fn new(delta: f64) -> Self {
        TubeSettings {
            delta,
            bootstrap: DEFAULT_BOOTSTRAP,
            splits: DEFAULT_SPLITS,
            leftout_fraction: DEFAULT_LEFTOUT_FRACTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("delta", self.delta)?;
        check_unit("leftout_fraction", self.leftout_fraction)?;
        if self.bootstrap == 0 || self.splits == 0 {
            return Err(Error::InvalidInput("bootstrap and split counts must be positive".into()));
        }
        Ok(())
    }
}

/// TUBE: bound for the CS classifier trained on the whole sample.
///
/// Returns the estimate together with that full-sample classifier. Split
/// classifiers reuse the same recipe and cost.
pub fn tube(
    sample: &LabeledSample,
    costs: CostPair,
    recipe: &CsRecipe,
    settings: &TubeSettings,
    seed: Seed,
) -> Result<(AlphaEstimate, ThresholdClassifier)> {
    settings.validate()?;
    recipe.check()?;
    sample.require_both_classes()?;
    let m = leftout_count(sample.n0(), settings.leftout_fraction);

    let full = recipe.build(sample, costs, seed.derive(0))?;
    let full_empirical = empirical_type1(&full, sample)?;

    let components = (0..settings.splits)
        .into_par_iter()
        .map(|b| {
            let s = seed.derive(1 + b as u64);
            let (mixed, leftout) = split_class0(sample, m, s.derive(0))?;
            let classifier = recipe.build(&mixed, costs, s.derive(1))?;
            let bound = tubec(&classifier, &leftout, settings.delta, settings.bootstrap, s.derive(2))?;
            Ok(SplitComponent {
                tubec: bound.value,
                empirical: empirical_type1(&classifier, &mixed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let correction =
        components.iter().map(|c| c.tubec - c.empirical).sum::<f64>() / components.len() as f64;
    let estimate = AlphaEstimate {
        value: (full_empirical + correction).clamp(0.0, 1.0),
        kind: EstimateKind::Tube,
        delta: Some(settings.delta),
        bootstrap: Some(settings.bootstrap),
        splits: Some(settings.splits),
        bootstrap_values: Vec::new(),
        full_sample_empirical: Some(full_empirical),
        split_components: components,
    };
    Ok((estimate, full))
}

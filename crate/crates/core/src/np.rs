//! Neyman-Pearson umbrella thresholding.
//!
//! A scorer trained without the left-out class-0 rows is thresholded at the
//! `k*`-th smallest left-out score, where `k*` is the smallest order whose
//! binomial violation bound is at most `delta`. Orders are 1-based.

use serde::{Deserialize, Serialize};

use crate::binomial::{upper_tail, upper_tails, DIRECT_SUM_LIMIT};
use crate::classifiers::{ScoringFunction, ThresholdClassifier};
use crate::data::LabeledSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpSettings {
    /// Target upper bound on the type I error.
    pub alpha: f64,
    /// Target probability of exceeding `alpha`.
    pub delta: f64,
}

impl NpSettings {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        check_unit("alpha", alpha)?;
        check_unit("delta", delta)?;
        Ok(NpSettings { alpha, delta })
    }
}

pub(crate) fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {v} must lie in (0, 1)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpResult {
    pub classifier: ThresholdClassifier,
    /// Left-out sample size.
    pub m: usize,
    /// 1-based order of the chosen threshold.
    pub k_star: usize,
    pub threshold: f64,
    /// `v(k_star)`.
    pub bound: f64,
}

/// `v(k) = sum_{j=k}^{m} C(m, j) (1 - alpha)^j alpha^(m - j)`, the upper bound
/// on `P(R0 > alpha)` when thresholding at the `k`-th order statistic.
pub fn violation_bound(k: usize, m: usize, alpha: f64) -> Result<f64> {
    if k == 0 || k > m {
        return Err(Error::InvalidInput(format!("order k = {k} must lie in [1, {m}]")));
    }
    check_unit("alpha", alpha)?;
    if k == 1 {
        return Ok(1.0 - alpha.powi(m as i32));
    }
    Ok(upper_tail(k, m, 1.0 - alpha))
}

/// Smallest `m` with `(1 - alpha)^m <= delta`.
pub fn min_sample_size(alpha: f64, delta: f64) -> usize {
    let q = 1.0 - alpha;
    let mut m = (delta.ln() / q.ln()).ceil().max(1.0) as usize;
    while q.powi(m as i32) > delta {
        m += 1;
    }
    while m > 1 && q.powi(m as i32 - 1) <= delta {
        m -= 1;
    }
    m
}

/// `k* = min{k in 1..=m : v(k) <= delta}`.
pub fn np_order(m: usize, alpha: f64, delta: f64) -> Result<usize> {
    check_unit("alpha", alpha)?;
    check_unit("delta", delta)?;
    if m == 0 {
        return Err(Error::InvalidInput("left-out sample is empty".into()));
    }
    if (1.0 - alpha).powi(m as i32) > delta {
        return Err(Error::MinSampleSize {
            m,
            required: min_sample_size(alpha, delta),
        });
    }
    if m <= DIRECT_SUM_LIMIT {
        let tails = upper_tails(m, 1.0 - alpha);
        let k = (1..=m)
            .find(|&k| if k == 1 { 1.0 - alpha.powi(m as i32) <= delta } else { tails[k] <= delta })
            .unwrap_or(m);
        return Ok(k);
    }
    // v(k) is non-increasing in k: binary search for the first feasible order.
    let (mut lo, mut hi) = (1usize, m);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if upper_tail(mid, m, 1.0 - alpha) <= delta {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Scores the left-out class-0 rows and thresholds at the `k*`-th order
/// statistic. Ties keep their stable-sort order.
pub fn np_classifier(
    scorer: &ScoringFunction,
    leftout0: &LabeledSample,
    settings: NpSettings,
) -> Result<NpResult> {
    leftout0.require_class0_only()?;
    let m = leftout0.n();
    let k_star = np_order(m, settings.alpha, settings.delta)?;
    let mut scores: Vec<f64> = leftout0.rows().map(|x| scorer.score(x)).collect();
    scores.sort_by(f64::total_cmp);
    let threshold = scores[k_star - 1];
    Ok(NpResult {
        classifier: ThresholdClassifier::new(scorer.clone(), threshold),
        m,
        k_star,
        threshold,
        bound: violation_bound(k_star, m, settings.alpha)?,
    })
}

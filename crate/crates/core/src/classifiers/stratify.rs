//! Pre-training stratification: resample so that the class-count ratio
//! `n0' / n1'` matches `(c0 n0) / (c1 n1)`.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CostPair;
use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::seed::Seed;

/// Slack applied before rounding so that ratios such as `0.7 / 0.3` land on
/// the intended integer.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StratifyMode {
    /// Class 0 is resampled to `ceil(n0 c0 / c1)` rows; class 1 is untouched.
    #[default]
    Oversample0,
    /// Class 1 is subsampled to `floor(n1 c1 / c0)` rows; class 0 is untouched.
    Downsample1,
}

impl FromStr for StratifyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oversample0" | "oversample" => Ok(StratifyMode::Oversample0),
            "downsample1" | "downsample" => Ok(StratifyMode::Downsample1),
            other => Err(Error::InvalidInput(format!("unknown stratification mode '{other}'"))),
        }
    }
}

/// Row indices of the stratified sample.
///
/// Rows kept from the original sample come first in their original order;
/// rows added by sampling with replacement follow in draw order. When the
/// target count is below the class size the class is subsampled without
/// replacement instead, so neutral costs return the input unchanged.
pub fn stratify_indices(
    sample: &LabeledSample,
    costs: CostPair,
    mode: StratifyMode,
    seed: Seed,
) -> Result<Vec<usize>> {
    sample.require_both_classes()?;
    let ratio = costs.c0() / costs.c1();
    let (resampled_class, target) = match mode {
        StratifyMode::Oversample0 => {
            (0u8, (sample.n0() as f64 * ratio - ROUNDING_SLACK).ceil() as usize)
        }
        StratifyMode::Downsample1 => {
            (1u8, (sample.n1() as f64 / ratio + ROUNDING_SLACK).floor() as usize)
        }
    };
    if target == 0 {
        return Err(Error::EmptyResult);
    }

    let mut rng = seed.rng();
    let mut members = sample.class_indices(resampled_class);
    let available = members.len();
    let mut keep = vec![true; sample.n()];
    let mut extra = Vec::new();
    if target < available {
        let (_, dropped) = members.partial_shuffle(&mut rng, target);
        for &i in dropped.iter() {
            keep[i] = false;
        }
    } else {
        extra.extend((available..target).map(|_| members[rng.random_range(0..available)]));
    }
    let mut indices: Vec<usize> = (0..sample.n()).filter(|&i| keep[i]).collect();
    indices.extend(extra);
    Ok(indices)
}

pub fn stratify(
    sample: &LabeledSample,
    costs: CostPair,
    mode: StratifyMode,
    seed: Seed,
) -> Result<LabeledSample> {
    let indices = stratify_indices(sample, costs, mode, seed)?;
    sample.select(&indices)
}

/// Per-row multiplicities of a stratified index list.
pub(crate) fn multiplicities(n: usize, indices: &[usize]) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    for &i in indices {
        counts[i] += 1.0;
    }
    counts
}

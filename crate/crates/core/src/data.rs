//! Labeled samples, class-0 splitting and empirical error rates.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classifiers::ThresholdClassifier;
use crate::error::{Error, Result};
use crate::seed::Seed;

/// Dense feature matrix (row-major) with binary labels. Class 0 is the class
/// whose misclassification is the more severe error.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    features: Vec<f64>,
    labels: Vec<u8>,
    d: usize,
    n0: usize,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, labels: Vec<u8>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("feature dimension must be at least 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidInput("sample must contain at least one row".into()));
        }
        if features.len() != labels.len() * d {
            return Err(Error::InvalidInput(format!(
                "{} feature values do not form {} rows of dimension {}",
                features.len(),
                labels.len(),
                d
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidInput(format!("label {bad} is not 0 or 1")));
        }
        let n0 = labels.iter().filter(|&&y| y == 0).count();
        Ok(LabeledSample {
            features,
            labels,
            d,
            n0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("rows have unequal lengths".into()));
        }
        Self::new(rows.concat(), labels, d)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn n1(&self) -> usize {
        self.labels.len() - self.n0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.d)
    }

    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == class).collect()
    }

    /// New sample made of the given rows, in the given order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(features, labels, self.d)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(Error::EmptyClass { class: 0 });
        }
        if self.n1() == 0 {
            return Err(Error::EmptyClass { class: 1 });
        }
        Ok(())
    }

    pub fn require_class0_only(&self) -> Result<()> {
        match self.n1() {
            0 => Ok(()),
            count => Err(Error::NonClass0Rows { count }),
        }
    }
}

/// Empirical type I/II and overall error with the sample's class proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub type1: f64,
    pub type2: f64,
    pub overall: f64,
    pub pi0_hat: f64,
    pub pi1_hat: f64,
}

pub fn class_priors(sample: &LabeledSample) -> (f64, f64) {
    let n = sample.n() as f64;
    let pi0 = sample.n0() as f64 / n;
    (pi0, 1.0 - pi0)
}

pub fn empirical_errors(
    classifier: &ThresholdClassifier,
    sample: &LabeledSample,
) -> Result<ErrorReport> {
    sample.require_both_classes()?;
    let (mut false_pos, mut false_neg) = (0usize, 0usize);
    for (x, &y) in sample.rows().zip(sample.labels()) {
        let pred = classifier.predict(x);
        match (y, pred) {
            (0, 1) => false_pos += 1,
            (1, 0) => false_neg += 1,
            _ => {}
        }
    }
    let type1 = false_pos as f64 / sample.n0() as f64;
    let type2 = false_neg as f64 / sample.n1() as f64;
    let (pi0_hat, pi1_hat) = class_priors(sample);
    Ok(ErrorReport {
        type1,
        type2,
        overall: pi0_hat * type1 + pi1_hat * type2,
        pi0_hat,
        pi1_hat,
    })
}

/// Fraction of class-0 rows predicted as class 1.
pub fn empirical_type1(classifier: &ThresholdClassifier, sample: &LabeledSample) -> Result<f64> {
    if sample.n0() == 0 {
        return Err(Error::EmptyClass { class: 0 });
    }
    let false_pos = sample
        .rows()
        .zip(sample.labels())
        .filter(|(x, &y)| y == 0 && classifier.predict(x) == 1)
        .count();
    Ok(false_pos as f64 / sample.n0() as f64)
}

/// Randomly withholds `leftout_size` class-0 rows.
///
/// Returns `(mixed, leftout0)`: `mixed` keeps every class-1 row and the
/// remaining class-0 rows in their original order.
pub fn split_class0(
    sample: &LabeledSample,
    leftout_size: usize,
    seed: Seed,
) -> Result<(LabeledSample, LabeledSample)> {
    if leftout_size == 0 {
        return Err(Error::InvalidInput("left-out size must be positive".into()));
    }
    if leftout_size >= sample.n0() {
        return Err(Error::InsufficientClass0 {
            requested: leftout_size,
            available: sample.n0(),
        });
    }
    let mut class0 = sample.class_indices(0);
    let mut rng = seed.rng();
    let (chosen, _) = class0.partial_shuffle(&mut rng, leftout_size);
    let mut leftout: Vec<usize> = chosen.to_vec();
    leftout.sort_unstable();

    let mut held = vec![false; sample.n()];
    for &i in &leftout {
        held[i] = true;
    }
    let mixed: Vec<usize> = (0..sample.n()).filter(|&i| !held[i]).collect();
    Ok((sample.select(&mixed)?, sample.select(&leftout)?))
}

/// Left-out size for a fraction of the class-0 rows, kept inside `[1, n0 - 1]`.
pub fn leftout_count(n0: usize, fraction: f64) -> usize {
    let m = (n0 as f64 * fraction).floor() as usize;
    m.clamp(1, n0.saturating_sub(1).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ScoringFunction, ThresholdClassifier};

    fn tiny() -> LabeledSample {
        LabeledSample::new(vec![0.2, 0.9, 0.4, 0.8], vec![0, 0, 1, 1], 1).unwrap()
    }

    fn identity_classifier(threshold: f64) -> ThresholdClassifier {
        ThresholdClassifier::new(ScoringFunction::external(|x: &[f64]| x[0], true), threshold)
    }

    #[test]
    fn constant_classifiers() {
        let s = tiny();
        let ones = ThresholdClassifier::new(ScoringFunction::constant(1.0), 0.5);
        let r = empirical_errors(&ones, &s).unwrap();
        assert_eq!((r.type1, r.type2, r.overall), (1.0, 0.0, 0.5));
        let zeros = ThresholdClassifier::new(ScoringFunction::constant(0.0), 0.5);
        let r = empirical_errors(&zeros, &s).unwrap();
        assert_eq!((r.type1, r.type2, r.overall), (0.0, 1.0, 0.5));
    }

    #[test]
    fn hand_counted_errors() {
        let r = empirical_errors(&identity_classifier(0.5), &tiny()).unwrap();
        assert_eq!(r.type1, 0.5);
        assert_eq!(r.type2, 0.5);
    }

    #[test]
    fn ties_predict_zero() {
        let s = LabeledSample::new(vec![0.5, 0.7], vec![0, 1], 1).unwrap();
        let r = empirical_errors(&identity_classifier(0.5), &s).unwrap();
        assert_eq!(r.type1, 0.0);
        assert_eq!(r.type2, 0.0);
    }

    #[test]
    fn missing_class_is_an_error() {
        let s = LabeledSample::new(vec![0.1, 0.2], vec![1, 1], 1).unwrap();
        assert_eq!(
            empirical_errors(&identity_classifier(0.5), &s),
            Err(Error::EmptyClass { class: 0 })
        );
    }

    #[test]
    fn priors() {
        assert_eq!(class_priors(&tiny()), (0.5, 0.5));
        let s = LabeledSample::new(vec![0.0; 4], vec![0, 1, 1, 1], 1).unwrap();
        assert_eq!(class_priors(&s), (0.25, 0.75));
        let mut labels = vec![0u8; 278];
        labels.extend(std::iter::repeat_n(1, 3090 - 278));
        let s = LabeledSample::new(vec![0.0; 3090], labels, 1).unwrap();
        let (pi0, _) = class_priors(&s);
        assert!((pi0 - 0.09).abs() < 0.005);
    }

    #[test]
    fn construction_checks() {
        assert!(LabeledSample::new(vec![0.0; 3], vec![0, 1], 1).is_err());
        assert!(LabeledSample::new(vec![0.0; 2], vec![0, 2], 1).is_err());
        assert!(LabeledSample::new(vec![], vec![], 1).is_err());
        assert!(LabeledSample::new(vec![0.0; 2], vec![0, 1], 0).is_err());
    }

    fn sample_with(n0: usize, n1: usize) -> LabeledSample {
        let n = n0 + n1;
        let features: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let labels = (0..n).map(|i| u8::from(i >= n0)).collect();
        LabeledSample::new(features, labels, 1).unwrap()
    }

    #[test]
    fn split_sizes_and_partition() {
        let s = sample_with(300, 250);
        let (mixed, left) = split_class0(&s, 200, Seed::new(3)).unwrap();
        assert_eq!(left.n(), 200);
        assert_eq!(left.n1(), 0);
        assert_eq!(mixed.n0(), 100);
        assert_eq!(mixed.n1(), 250);
        let mut all: Vec<f64> = mixed.features().iter().chain(left.features()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, s.features());
    }

    #[test]
    fn split_is_deterministic() {
        let s = sample_with(50, 10);
        let a = split_class0(&s, 20, Seed::new(9)).unwrap();
        let b = split_class0(&s, 20, Seed::new(9)).unwrap();
        assert_eq!(a, b);
        let c = split_class0(&s, 20, Seed::new(10)).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn split_rejects_bad_sizes() {
        let s = sample_with(5, 5);
        assert_eq!(
            split_class0(&s, 5, Seed::new(0)),
            Err(Error::InsufficientClass0 {
                requested: 5,
                available: 5
            })
        );
        assert!(split_class0(&s, 0, Seed::new(0)).is_err());
    }
}

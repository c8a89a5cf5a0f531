//! Gaussian class-conditional models: LDA (shared covariance), QDA (per-class
//! covariance) and Gaussian naive Bayes (per-class diagonal covariance).

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ScoringFunction;
use crate::data::LabeledSample;
use crate::error::{Error, Result};

/// Relative ridge added to every covariance estimate: `1e-6 * trace / d`.
const RELATIVE_RIDGE: f64 = 1e-6;
/// Used when the estimated covariance is identically zero.
const ABSOLUTE_RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerativeMethod {
    Lda,
    Qda,
    Gnb,
}

impl GenerativeMethod {
    pub fn name(self) -> &'static str {
        match self {
            GenerativeMethod::Lda => "lda",
            GenerativeMethod::Qda => "qda",
            GenerativeMethod::Gnb => "gnb",
        }
    }
}

impl fmt::Display for GenerativeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One fitted Gaussian density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "covariance", rename_all = "snake_case")]
pub enum ClassDensity {
    /// Lower Cholesky factor of the (regularized) covariance, row-major.
    Full {
        mean: Vec<f64>,
        cholesky: Vec<f64>,
        log_det: f64,
    },
    Diagonal {
        mean: Vec<f64>,
        variance: Vec<f64>,
        log_det: f64,
    },
}

impl ClassDensity {
    pub fn mean(&self) -> &[f64] {
        match self {
            ClassDensity::Full { mean, .. } | ClassDensity::Diagonal { mean, .. } => mean,
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let (quad, log_det) = match self {
            ClassDensity::Full {
                mean,
                cholesky,
                log_det,
            } => {
                // Forward substitution L y = x - mean; quad = |y|^2.
                let mut y = [0.0f64; 64];
                let mut heap;
                let y: &mut [f64] = if d <= 64 {
                    &mut y[..d]
                } else {
                    heap = vec![0.0; d];
                    &mut heap
                };
                let mut quad = 0.0;
                for i in 0..d {
                    let row = &cholesky[i * d..i * d + i];
                    let acc: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
                    let yi = (x[i] - mean[i] - acc) / cholesky[i * d + i];
                    y[i] = yi;
                    quad += yi * yi;
                }
                (quad, *log_det)
            }
            ClassDensity::Diagonal {
                mean,
                variance,
                log_det,
            } => {
                let quad = x
                    .iter()
                    .zip(mean)
                    .zip(variance)
                    .map(|((v, m), s)| (v - m) * (v - m) / s)
                    .sum();
                (quad, *log_det)
            }
        };
        -0.5 * (quad + log_det + d as f64 * (2.0 * PI).ln())
    }
}

/// Estimated class-conditional densities plus the training class proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeModel {
    pub method: GenerativeMethod,
    pub d: usize,
    pub class0: ClassDensity,
    pub class1: ClassDensity,
    /// Weighted training proportions `(pi0_hat, pi1_hat)`.
    pub priors: [f64; 2],
    pub training_rows: usize,
}

impl GenerativeModel {
    /// `(log f0(x), log f1(x))`.
    pub fn log_densities(&self, x: &[f64]) -> (f64, f64) {
        (self.class0.log_density(x), self.class1.log_density(x))
    }

    /// `f1 p1 / (f0 p0 + f1 p1)` evaluated in log space.
    pub fn posterior(&self, x: &[f64], priors: [f64; 2]) -> f64 {
        let (l0, l1) = self.log_densities(x);
        posterior_from_log_densities(l0, l1, priors)
    }
}

pub(crate) fn posterior_from_log_densities(l0: f64, l1: f64, priors: [f64; 2]) -> f64 {
    let [p0, p1] = priors;
    if p1 <= 0.0 {
        return 0.0;
    }
    if p0 <= 0.0 {
        return 1.0;
    }
    let a = l0 + p0.ln();
    let b = l1 + p1.ln();
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return p1;
    }
    let t = b - a;
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn train_generative(sample: &LabeledSample, method: GenerativeMethod) -> Result<GenerativeModel> {
    train_generative_weighted(sample, &vec![1.0; sample.n()], method)
}

/// Weighted Gaussian maximum-likelihood fit; integer weights act as row
/// multiplicities.
pub fn train_generative_weighted(
    sample: &LabeledSample,
    weights: &[f64],
    method: GenerativeMethod,
) -> Result<GenerativeModel> {
    sample.require_both_classes()?;
    if weights.len() != sample.n() {
        return Err(Error::InvalidInput("one weight per row is required".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
    }
    let d = sample.d();
    let mut totals = [0.0f64; 2];
    let mut means = [vec![0.0; d], vec![0.0; d]];
    for ((x, &y), &w) in sample.rows().zip(sample.labels()).zip(weights) {
        let k = usize::from(y);
        totals[k] += w;
        for (m, v) in means[k].iter_mut().zip(x) {
            *m += w * v;
        }
    }
    for k in 0..2 {
        if totals[k] <= 0.0 {
            return Err(Error::EmptyClass { class: k as u8 });
        }
        means[k].iter_mut().for_each(|m| *m /= totals[k]);
    }
    let priors = [totals[0] / (totals[0] + totals[1]), totals[1] / (totals[0] + totals[1])];

    let [mean0, mean1] = means;
    let (class0, class1) = match method {
        GenerativeMethod::Gnb => {
            let mut vars = [vec![0.0; d], vec![0.0; d]];
            for ((x, &y), &w) in sample.rows().zip(sample.labels()).zip(weights) {
                let k = usize::from(y);
                let mean = if k == 0 { &mean0 } else { &mean1 };
                for j in 0..d {
                    let c = x[j] - mean[j];
                    vars[k][j] += w * c * c;
                }
            }
            let [v0, v1] = vars;
            (
                diagonal(mean0, v0, totals[0])?,
                diagonal(mean1, v1, totals[1])?,
            )
        }
        GenerativeMethod::Qda => {
            let mut covs = [vec![0.0; d * d], vec![0.0; d * d]];
            scatter(sample, weights, [&mean0, &mean1], |k| k, &mut covs);
            let [s0, s1] = covs;
            (
                full(mean0, s0, totals[0], 0)?,
                full(mean1, s1, totals[1], 1)?,
            )
        }
        GenerativeMethod::Lda => {
            let mut covs = [vec![0.0; d * d], vec![]];
            scatter(sample, weights, [&mean0, &mean1], |_| 0, &mut covs);
            let [pooled, _] = covs;
            let total = totals[0] + totals[1];
            let shared = full(mean0, pooled, total, 0)?;
            let (cholesky, log_det) = match &shared {
                ClassDensity::Full {
                    cholesky, log_det, ..
                } => (cholesky.clone(), *log_det),
                ClassDensity::Diagonal { .. } => unreachable!(),
            };
            (
                shared,
                ClassDensity::Full {
                    mean: mean1,
                    cholesky,
                    log_det,
                },
            )
        }
    };

    Ok(GenerativeModel {
        method,
        d,
        class0,
        class1,
        priors,
        training_rows: sample.n(),
    })
}

/// Accumulates weighted outer products of centred rows into `covs[slot(k)]`.
fn scatter(
    sample: &LabeledSample,
    weights: &[f64],
    means: [&Vec<f64>; 2],
    slot: impl Fn(usize) -> usize,
    covs: &mut [Vec<f64>; 2],
) {
    let d = sample.d();
    let mut c = vec![0.0; d];
    for ((x, &y), &w) in sample.rows().zip(sample.labels()).zip(weights) {
        if w == 0.0 {
            continue;
        }
        let k = usize::from(y);
        for j in 0..d {
            c[j] = x[j] - means[k][j];
        }
        let cov = &mut covs[slot(k)];
        for a in 0..d {
            let wa = w * c[a];
            let row = &mut cov[a * d..(a + 1) * d];
            for b in a..d {
                row[b] += wa * c[b];
            }
        }
    }
}

fn ridge(trace: f64, d: usize) -> f64 {
    let lambda = RELATIVE_RIDGE * trace / d as f64;
    if lambda > 0.0 {
        lambda
    } else {
        ABSOLUTE_RIDGE
    }
}

fn full(mean: Vec<f64>, mut scatter: Vec<f64>, total: f64, class: u8) -> Result<ClassDensity> {
    let d = mean.len();
    for a in 0..d {
        for b in a..d {
            scatter[a * d + b] /= total;
            scatter[b * d + a] = scatter[a * d + b];
        }
    }
    let trace: f64 = (0..d).map(|j| scatter[j * d + j]).sum();
    let lambda = ridge(trace, d);
    for j in 0..d {
        scatter[j * d + j] += lambda;
    }
    let chol = DMatrix::from_row_slice(d, d, &scatter)
        .cholesky()
        .ok_or(Error::SingularCovariance { class })?;
    let l = chol.l();
    let mut cholesky = vec![0.0; d * d];
    let mut log_det = 0.0;
    for i in 0..d {
        for j in 0..=i {
            cholesky[i * d + j] = l[(i, j)];
        }
        log_det += 2.0 * l[(i, i)].ln();
    }
    if !log_det.is_finite() {
        return Err(Error::SingularCovariance { class });
    }
    Ok(ClassDensity::Full {
        mean,
        cholesky,
        log_det,
    })
}

fn diagonal(mean: Vec<f64>, mut variance: Vec<f64>, total: f64) -> Result<ClassDensity> {
    let d = mean.len();
    variance.iter_mut().for_each(|v| *v /= total);
    let lambda = ridge(variance.iter().sum(), d);
    variance.iter_mut().for_each(|v| *v += lambda);
    let log_det = variance.iter().map(|v| v.ln()).sum();
    Ok(ClassDensity::Diagonal {
        mean,
        variance,
        log_det,
    })
}

/// Posterior scorer `f1 p1 / (f0 p0 + f1 p1)` with the given priors. Passing
/// the training proportions gives the plug-in posterior; passing `(c0, c1)`
/// gives the rebalanced posterior.
pub fn posterior_score(model: &GenerativeModel, priors: (f64, f64)) -> Result<ScoringFunction> {
    let (p0, p1) = priors;
    if !(p0 >= 0.0 && p1 >= 0.0 && (p0 + p1 - 1.0).abs() < 1e-12) {
        return Err(Error::InvalidInput(format!(
            "priors ({p0}, {p1}) must be non-negative and sum to 1"
        )));
    }
    Ok(ScoringFunction::Generative {
        model: model.clone(),
        priors: [p0, p1],
    })
}

//! Weighted logistic regression fitted by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::LabeledSample;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const STEP_TOLERANCE: f64 = 1e-10;
const RIDGE: f64 = 1e-8;
const GRADIENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub training_rows: usize,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn posterior(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Fits with every class-0 row weighted `weight0` and every class-1 row
/// weighted `weight1`.
pub fn train_logistic(
    sample: &LabeledSample,
    weight0: f64,
    weight1: f64,
) -> Result<LogisticModel> {
    if !(weight0 > 0.0 && weight1 > 0.0) {
        return Err(Error::InvalidInput("class weights must be positive".into()));
    }
    let weights: Vec<f64> = sample
        .labels()
        .iter()
        .map(|&y| if y == 0 { weight0 } else { weight1 })
        .collect();
    train_logistic_weighted(sample, &weights)
}

/// Fits with one non-negative weight per row. Integer weights are equivalent
/// to replicating rows.
pub fn train_logistic_weighted(sample: &LabeledSample, weights: &[f64]) -> Result<LogisticModel> {
    sample.require_both_classes()?;
    if weights.len() != sample.n() {
        return Err(Error::InvalidInput("one weight per row is required".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
    }
    if sample.features().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("features must be finite".into()));
    }

    let d = sample.d();
    let p = d + 1;
    let rows: Vec<(usize, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i, w))
        .collect();

    let total_weight: f64 = rows.iter().map(|(_, w)| w).sum();
    let mut beta = vec![0.0; p];
    let mut objective = penalized_nll(sample, &rows, &beta);
    let mut hess = vec![0.0; p * p];
    let mut grad = vec![0.0; p];
    let mut z = vec![0.0; p];
    z[0] = 1.0;

    for iteration in 1..=MAX_ITERATIONS {
        hess.iter_mut().for_each(|h| *h = 0.0);
        for a in 0..p {
            hess[a * p + a] = RIDGE;
            grad[a] = -RIDGE * beta[a];
        }
        for &(i, w) in &rows {
            z[1..].copy_from_slice(sample.row(i));
            let eta: f64 = beta.iter().zip(&z).map(|(b, v)| b * v).sum();
            let mu = sigmoid(eta);
            let resid = w * (f64::from(sample.label(i)) - mu);
            let s = w * mu * (1.0 - mu);
            for a in 0..p {
                grad[a] += resid * z[a];
                let sa = s * z[a];
                let row = &mut hess[a * p..(a + 1) * p];
                for b in a..p {
                    row[b] += sa * z[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                hess[a * p + b] = hess[b * p + a];
            }
        }

        let max_grad = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if max_grad < GRADIENT_TOLERANCE * total_weight.max(1.0) {
            return Ok(LogisticModel {
                intercept: beta[0],
                coef: beta[1..].to_vec(),
                training_rows: sample.n(),
                iterations: iteration,
            });
        }

        let h = DMatrix::from_row_slice(p, p, &hess);
        let chol = h.cholesky().ok_or(Error::DegenerateDesign)?;
        let step = chol.solve(&DVector::from_column_slice(&grad));
        let max_step = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if !max_step.is_finite() {
            return Err(Error::DegenerateDesign);
        }

        // Backtrack on the penalized objective; full Newton steps are the norm.
        let mut scale = 1.0;
        let mut candidate: Vec<f64>;
        loop {
            candidate = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let value = penalized_nll(sample, &rows, &candidate);
            if value <= objective + 1e-12 * objective.abs().max(1.0) || scale < 1e-10 {
                objective = value;
                break;
            }
            scale *= 0.5;
        }
        beta = candidate;

        if max_step < STEP_TOLERANCE {
            return Ok(LogisticModel {
                intercept: beta[0],
                coef: beta[1..].to_vec(),
                training_rows: sample.n(),
                iterations: iteration,
            });
        }
    }

    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        grad_norm,
    })
}

fn penalized_nll(sample: &LabeledSample, rows: &[(usize, f64)], beta: &[f64]) -> f64 {
    let mut total = 0.5 * RIDGE * beta.iter().map(|b| b * b).sum::<f64>();
    for &(i, w) in rows {
        let x = sample.row(i);
        let eta = beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
        total += w * (softplus(eta) - f64::from(sample.label(i)) * eta);
    }
    total
}

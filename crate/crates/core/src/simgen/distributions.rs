use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::seed::{Seed, SimRng};

/// Mean shift of the first two class-1 Gaussian coordinates.
pub const GAUSSIAN_SHIFT: f64 = 1.5;
/// Off-diagonal entry of the tridiagonal class-1 Gaussian covariance.
pub const GAUSSIAN_OFF_DIAGONAL: f64 = 0.5;
/// Location of the class-0 t coordinates.
pub const T_SHIFT: f64 = 2.5;
pub const T_DOF: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionKind {
    /// Class 0 `N(0, I)`; class 1 `N((1.5, 1.5, 0, ...), tridiag(0.5, 1, 0.5))`.
    Gaussian,
    /// Coordinates 1-2 are `t_3` located at `(0, 0)` for class 1 and
    /// `(2.5, 2.5)` for class 0; the rest are standard normal.
    MultivariateT,
    /// Class 0 `N(mu, I)/2 + N(-mu, I)/2`; class 1 `N(mu, I)`; `mu = (a, ..., a)`
    /// with `a = 2 / sqrt(d)`.
    Mixture,
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistributionKind::Gaussian => "gaussian",
            DistributionKind::MultivariateT => "multivariate-t",
            DistributionKind::Mixture => "mixture",
        })
    }
}

impl FromStr for DistributionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(DistributionKind::Gaussian),
            "multivariate-t" | "t" | "mvt" => Ok(DistributionKind::MultivariateT),
            "mixture" => Ok(DistributionKind::Mixture),
            other => Err(Error::InvalidInput(format!("unknown distribution '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub d: usize,
    /// Give each t coordinate its own chi-square denominator instead of one
    /// shared by both.
    #[serde(default)]
    pub independent_t: bool,
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind, d: usize) -> Result<Self> {
        let spec = DistributionSpec {
            kind,
            d,
            independent_t: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let min = match self.kind {
            DistributionKind::MultivariateT => 3,
            _ => 2,
        };
        if self.d < min {
            return Err(Error::InvalidInput(format!("{} needs d >= {min}, got {}", self.kind, self.d)));
        }
        Ok(())
    }

    /// `a = 2 / sqrt(d)` of the mixture setting.
    pub fn mixture_offset(&self) -> f64 {
        2.0 / (self.d as f64).sqrt()
    }

    fn fill_row(&self, class: u8, chol: &[(f64, f64)], rng: &mut SimRng, row: &mut [f64]) {
        match self.kind {
            DistributionKind::Gaussian => {
                fill_normal(rng, row);
                if class == 1 {
                    let mut prev = row[0];
                    for i in 1..row.len() {
                        let z = row[i];
                        let (sub, diag) = chol[i];
                        row[i] = sub * prev + diag * z;
                        prev = z;
                    }
                    row[0] += GAUSSIAN_SHIFT;
                    row[1] += GAUSSIAN_SHIFT;
                }
            }
            DistributionKind::MultivariateT => {
                fill_normal(rng, row);
                let shift = if class == 0 { T_SHIFT } else { 0.0 };
                let w = chi_square(rng);
                let w2 = if self.independent_t { chi_square(rng) } else { w };
                let dof = T_DOF as f64;
                row[0] = shift + row[0] / (w / dof).sqrt();
                row[1] = shift + row[1] / (w2 / dof).sqrt();
            }
            DistributionKind::Mixture => {
                fill_normal(rng, row);
                let a = self.mixture_offset();
                let centre = if class == 1 || rng.random::<bool>() { a } else { -a };
                row.iter_mut().for_each(|v| *v += centre);
            }
        }
    }

    /// Rows of the bidiagonal Cholesky factor of the class-1 Gaussian
    /// covariance as `(sub-diagonal, diagonal)`.
    fn cholesky(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.d);
        let mut diag = 1.0f64;
        out.push((0.0, 1.0));
        for _ in 1..self.d {
            let sub = GAUSSIAN_OFF_DIAGONAL / diag;
            diag = (1.0 - sub * sub).sqrt();
            out.push((sub, diag));
        }
        out
    }
}

fn fill_normal(rng: &mut SimRng, row: &mut [f64]) {
    row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
}

fn chi_square(rng: &mut SimRng) -> f64 {
    (0..T_DOF).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum()
}

/// `n` rows with labels drawn with `P(Y = 0) = 1/2`.
pub fn generate(spec: &DistributionSpec, n: usize, seed: Seed) -> Result<LabeledSample> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let chol = spec.cholesky();
    let mut rng = seed.rng();
    let mut features = vec![0.0; n * spec.d];
    let mut labels = Vec::with_capacity(n);
    for row in features.chunks_exact_mut(spec.d) {
        let y = u8::from(rng.random::<bool>());
        spec.fill_row(y, &chol, &mut rng, row);
        labels.push(y);
    }
    LabeledSample::new(features, labels, spec.d)
}

/// `n` rows of a single class.
pub fn generate_class(spec: &DistributionSpec, class: u8, n: usize, seed: Seed) -> Result<LabeledSample> {
    spec.validate()?;
    if n == 0 || class > 1 {
        return Err(Error::InvalidInput("n must be positive and class 0 or 1".into()));
    }
    let chol = spec.cholesky();
    let mut rng = seed.rng();
    let mut features = vec![0.0; n * spec.d];
    for row in features.chunks_exact_mut(spec.d) {
        spec.fill_row(class, &chol, &mut rng, row);
    }
    LabeledSample::new(features, vec![class; n], spec.d)
}

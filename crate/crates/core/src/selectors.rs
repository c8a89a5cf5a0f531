//! Choosing the type I error cost `c0` from a grid so that the resulting
//! CS classifier targets type I error at most `alpha`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{CostPair, CsRecipe, ThresholdClassifier};
use crate::data::{leftout_count, split_class0, LabeledSample};
use crate::error::{Error, Result};
use crate::seed::Seed;
use crate::tube::{empirical_alpha, tube, tubec, TubeSettings};

/// Strictly increasing candidate costs in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CostGrid(Vec<f64>);

impl CostGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("cost grid is empty".into()));
        }
        if values.iter().any(|c| !(*c > 0.0 && *c < 1.0)) {
            return Err(Error::InvalidInput("grid costs must lie in (0, 1)".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("grid costs must be strictly increasing".into()));
        }
        Ok(CostGrid(values))
    }

    /// `start, start + step, ...` up to `end` inclusive (with rounding slack).
    pub fn range(start: f64, step: f64, end: f64) -> Result<Self> {
        if step.is_nan() || step <= 0.0 || end < start {
            return Err(Error::InvalidInput(format!("bad grid range {start}:{step}:{end}")));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        // Snap to 12 decimals.
        let values = (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect();
        CostGrid::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn costs(&self) -> impl Iterator<Item = CostPair> + '_ {
        self.0.iter().map(|&c| CostPair::new(c).expect("validated grid"))
    }
}

impl Default for CostGrid {
    fn default() -> Self {
        CostGrid::range(0.51, 0.02, 0.99).expect("valid default grid")
    }
}

impl TryFrom<Vec<f64>> for CostGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        CostGrid::new(v)
    }
}

impl From<CostGrid> for Vec<f64> {
    fn from(g: CostGrid) -> Self {
        g.0
    }
}

/// Parses `start:step:end` or a comma-separated list.
impl FromStr for CostGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad grid value '{t}'")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [start, step, end] => CostGrid::range(parse(start)?, parse(step)?, parse(end)?),
            [list] => CostGrid::new(list.split(',').map(parse).collect::<Result<_>>()?),
            _ => Err(Error::InvalidInput(format!("bad grid '{s}', expected start:step:end"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    Vanilla,
    TubeCs,
    TubecCs,
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectorKind::Vanilla => "vanilla-cs",
            SelectorKind::TubeCs => "tube-cs",
            SelectorKind::TubecCs => "tubec-cs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateDiagnostic {
    pub c0: f64,
    /// Empirical type I error (vanilla) or estimated upper bound.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selector: SelectorKind,
    pub classifier: ThresholdClassifier,
    pub chosen_c0: f64,
    /// 0-based position of `chosen_c0` in the grid.
    pub chosen_index: usize,
    /// False when vanilla-CS fell back to the largest cost.
    pub feasible: bool,
    pub candidates: Vec<CandidateDiagnostic>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} must lie in (0, 1]")))
    }
}

fn first_feasible(estimates: &[f64], alpha: f64) -> Option<usize> {
    estimates.iter().position(|&e| e <= alpha)
}

/// Builds one classifier per candidate on `mixed` and returns them in grid order.
fn candidate_classifiers(
    mixed: &LabeledSample,
    grid: &CostGrid,
    recipe: &CsRecipe,
    seed: Seed,
) -> Result<Vec<ThresholdClassifier>> {
    let costs: Vec<CostPair> = grid.costs().collect();
    costs
        .par_iter()
        .enumerate()
        .map(|(i, &c)| recipe.build(mixed, c, seed.derive(i as u64)))
        .collect()
}

fn diagnostics(grid: &CostGrid, estimates: &[f64]) -> Vec<CandidateDiagnostic> {
    grid.values()
        .iter()
        .zip(estimates)
        .map(|(&c0, &estimate)| CandidateDiagnostic { c0, estimate })
        .collect()
}

/// Vanilla-CS: half of class 0 is held out; each candidate's empirical type I
/// error on it decides. Takes the smallest cost with `r <= alpha` when the
/// largest cost is feasible, and the largest cost otherwise.
pub fn vanilla_cs(
    sample: &LabeledSample,
    alpha: f64,
    grid: &CostGrid,
    recipe: &CsRecipe,
    seed: Seed,
) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    recipe.check()?;
    sample.require_both_classes()?;
    if sample.n0() < 2 {
        return Err(Error::InsufficientClass0 {
            requested: 1,
            available: sample.n0(),
        });
    }
    let (mixed, leftout) = split_class0(sample, leftout_count(sample.n0(), 0.5), seed.derive(0))?;
    let mut classifiers = candidate_classifiers(&mixed, grid, recipe, seed.derive(1))?;
    let rates = classifiers
        .iter()
        .map(|c| Ok(empirical_alpha(c, &leftout)?.value))
        .collect::<Result<Vec<f64>>>()?;

    let last = grid.len() - 1;
    let (index, feasible) = if rates[last] <= alpha {
        (first_feasible(&rates, alpha).expect("last is feasible"), true)
    } else {
        (last, false)
    };
    Ok(SelectionResult {
        selector: SelectorKind::Vanilla,
        classifier: classifiers.swap_remove(index),
        chosen_c0: grid.values()[index],
        chosen_index: index,
        feasible,
        candidates: diagnostics(grid, &rates),
    })
}

/// TUBE-CS: a TUBE estimate for every candidate, then the smallest feasible
/// cost. The returned classifier is trained on the whole sample.
pub fn tube_cs(
    sample: &LabeledSample,
    alpha: f64,
    grid: &CostGrid,
    recipe: &CsRecipe,
    settings: &TubeSettings,
    seed: Seed,
) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    recipe.check()?;
    settings.validate()?;
    let costs: Vec<CostPair> = grid.costs().collect();
    let mut runs = costs
        .par_iter()
        .enumerate()
        .map(|(i, &c)| tube(sample, c, recipe, settings, seed.derive(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<f64> = runs.iter().map(|(e, _)| e.value).collect();
    let index = first_feasible(&estimates, alpha).ok_or(Error::NoFeasibleCost {
        profile: estimates.clone(),
    })?;
    Ok(SelectionResult {
        selector: SelectorKind::TubeCs,
        classifier: runs.swap_remove(index).1,
        chosen_c0: grid.values()[index],
        chosen_index: index,
        feasible: true,
        candidates: diagnostics(grid, &estimates),
    })
}

/// TUBEc-CS: one class-0 split shared by all candidates; TUBEc on the
/// held-out half decides and the chosen candidate is returned as trained.
pub fn tubec_cs(
    sample: &LabeledSample,
    alpha: f64,
    grid: &CostGrid,
    recipe: &CsRecipe,
    delta: f64,
    bootstrap: usize,
    seed: Seed,
) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    recipe.check()?;
    sample.require_both_classes()?;
    let (mixed, leftout) = split_class0(sample, leftout_count(sample.n0(), 0.5), seed.derive(0))?;
    let mut classifiers = candidate_classifiers(&mixed, grid, recipe, seed.derive(1))?;
    let bootstrap_seed = seed.derive(2);
    let estimates = classifiers
        .par_iter()
        .enumerate()
        .map(|(i, c)| Ok(tubec(c, &leftout, delta, bootstrap, bootstrap_seed.derive(i as u64))?.value))
        .collect::<Result<Vec<f64>>>()?;
    let index = first_feasible(&estimates, alpha).ok_or(Error::NoFeasibleCost {
        profile: estimates.clone(),
    })?;
    Ok(SelectionResult {
        selector: SelectorKind::TubecCs,
        classifier: classifiers.swap_remove(index),
        chosen_c0: grid.values()[index],
        chosen_index: index,
        feasible: true,
        candidates: diagnostics(grid, &estimates),
    })
}

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distributions::{generate, generate_class, DistributionSpec};
use crate::classifiers::{
    train_scorer, CostPair, CsApproach, CsRecipe, Learner, Method, ScoringFunction, StratifyMode,
    ThresholdClassifier,
};
use crate::correspondence::{compare_labels, cs_counterpart};
use crate::data::{empirical_errors, empirical_type1, leftout_count, split_class0, LabeledSample};
use crate::error::{Error, Result};
use crate::np::{np_classifier, NpSettings};
use crate::seed::Seed;
use crate::selectors::{tube_cs, tubec_cs, vanilla_cs, CostGrid, SelectionResult};
use crate::tube::{empirical_alpha, plugin_estimate, tube, tubec, TubeSettings};

/// Size of the left-out class-0 sample for NP-type algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeftoutSize {
    Fraction(f64),
    Size(usize),
}

impl LeftoutSize {
    pub fn resolve(&self, n0: usize) -> usize {
        match *self {
            LeftoutSize::Fraction(f) => leftout_count(n0, f),
            LeftoutSize::Size(m) => m,
        }
    }
}

impl Default for LeftoutSize {
    fn default() -> Self {
        LeftoutSize::Fraction(0.5)
    }
}

/// What each repetition runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Algorithm {
    /// NP umbrella on a plug-in posterior scorer.
    Np,
    VanillaCs,
    TubeCs,
    TubecCs,
    /// NP classifier and its exact CS counterpart: rebalancing for generative
    /// methods, post-training for logistic regression.
    Correspondence,
    /// A CS classifier per cost, scored by TUBEc, plug-in and empirical
    /// estimates on fresh left-out class-0 samples of each size.
    TubecEstimators { c0s: Vec<f64>, leftout_sizes: Vec<usize> },
    /// A full-sample CS classifier per cost, scored by TUBE and its
    /// training-sample empirical type I error.
    TubeEstimators { c0s: Vec<f64> },
    /// Predicts `label` everywhere.
    Constant { label: u8 },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Np => "np",
            Algorithm::VanillaCs => "vanilla-cs",
            Algorithm::TubeCs => "tube-cs",
            Algorithm::TubecCs => "tubec-cs",
            Algorithm::Correspondence => "correspondence",
            Algorithm::TubecEstimators { .. } => "tubec-estimators",
            Algorithm::TubeEstimators { .. } => "tube-estimators",
            Algorithm::Constant { label: 0 } => "constant0",
            Algorithm::Constant { .. } => "constant1",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub distribution: DistributionSpec,
    pub n_train: usize,
    pub n_eval: usize,
    pub reps: usize,
    pub alpha: f64,
    pub delta: f64,
    pub methods: Vec<Method>,
    pub approach: CsApproach,
    #[serde(default)]
    pub stratify_mode: StratifyMode,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub grid: CostGrid,
    #[serde(default)]
    pub leftout: LeftoutSize,
    pub bootstrap: usize,
    pub splits: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        NpSettings::new(self.alpha, self.delta)?;
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        if self.n_train == 0 || self.n_eval < 10 * self.n_train {
            return Err(Error::InvalidInput(format!(
                "n_eval = {} must be at least 10 * n_train = {}",
                self.n_eval,
                10 * self.n_train
            )));
        }
        if self.methods.is_empty() || self.algorithms.is_empty() {
            return Err(Error::InvalidInput("at least one method and one algorithm are required".into()));
        }
        if self.bootstrap == 0 || self.splits == 0 {
            return Err(Error::InvalidInput("bootstrap and split counts must be positive".into()));
        }
        for a in &self.algorithms {
            let costs = match a {
                Algorithm::TubecEstimators { c0s, leftout_sizes } => {
                    if leftout_sizes.is_empty() || leftout_sizes.contains(&0) {
                        return Err(Error::InvalidInput("left-out sizes must be positive".into()));
                    }
                    c0s
                }
                Algorithm::TubeEstimators { c0s } => c0s,
                Algorithm::Constant { label } if *label > 1 => {
                    return Err(Error::InvalidInput("constant label must be 0 or 1".into()));
                }
                _ => continue,
            };
            if costs.is_empty() {
                return Err(Error::InvalidInput(format!("{a} needs at least one cost")));
            }
            for &c in costs {
                CostPair::new(c)?;
            }
        }
        Ok(())
    }

    fn recipe(&self, method: Method) -> CsRecipe {
        CsRecipe {
            approach: self.approach,
            method,
            stratify_mode: self.stratify_mode,
        }
    }

    fn tube_settings(&self) -> TubeSettings {
        TubeSettings {
            delta: self.delta,
            bootstrap: self.bootstrap,
            splits: self.splits,
            leftout_fraction: match self.leftout {
                LeftoutSize::Fraction(f) => f,
                LeftoutSize::Size(_) => 0.5,
            },
        }
    }
}

/// One algorithm/method/setting outcome in one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub rep: usize,
    pub algorithm: String,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<String>,
    pub chosen_c0: Option<f64>,
    pub threshold: Option<f64>,
    pub empirical_type1: Option<f64>,
    /// Type I error on the evaluation sample.
    pub population_type1: Option<f64>,
    pub population_type2: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub estimates: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disagreements: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RepetitionRecord {
    fn new(rep: usize, algorithm: &Algorithm, method: Method, setting: Option<String>) -> Self {
        RepetitionRecord {
            rep,
            algorithm: algorithm.name().to_string(),
            method,
            setting,
            chosen_c0: None,
            threshold: None,
            empirical_type1: None,
            population_type1: None,
            population_type2: None,
            estimates: BTreeMap::new(),
            disagreements: None,
            error: None,
        }
    }

    fn failed(mut self, e: &Error) -> Self {
        self.error = Some(e.to_string());
        self
    }

    fn with_eval(mut self, classifier: &ThresholdClassifier, eval: &LabeledSample) -> Result<Self> {
        let e = empirical_errors(classifier, eval)?;
        self.population_type1 = Some(e.type1);
        self.population_type2 = Some(e.type2);
        self.threshold = Some(classifier.threshold);
        Ok(self)
    }
}

/// Aggregates for one (algorithm, method, setting) group. Rates use the
/// repetitions that finished without error as denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub algorithm: String,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<String>,
    pub reps: usize,
    pub failures: usize,
    pub population_violation_rate: Option<f64>,
    pub empirical_violation_rate: Option<f64>,
    pub mean_population_type1: Option<f64>,
    pub median_population_type2: Option<f64>,
    pub mean_chosen_c0: Option<f64>,
    /// Per estimate: fraction of repetitions whose evaluation type I error
    /// exceeds the estimate.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exceedance_rates: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_disagreements: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<RepetitionRecord>,
    pub summaries: Vec<GroupSummary>,
}

impl ExperimentReport {
    pub fn summary(&self, algorithm: &str, method: Method, setting: Option<&str>) -> Option<&GroupSummary> {
        self.summaries
            .iter()
            .find(|s| s.algorithm == algorithm && s.method == method && s.setting.as_deref() == setting)
    }

    pub fn failed_records(&self) -> impl Iterator<Item = &RepetitionRecord> {
        self.records.iter().filter(|r| r.error.is_some())
    }
}

/// `#{e > alpha} / len`.
pub fn violation_rate(errors: &[f64], alpha: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::InvalidInput("no errors to summarize".into()));
    }
    Ok(errors.iter().filter(|&&e| e > alpha).count() as f64 / errors.len() as f64)
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn summarize(records: &[RepetitionRecord], alpha: f64) -> Vec<GroupSummary> {
    let mut groups: Vec<(String, Method, Option<String>)> = Vec::new();
    for r in records {
        let key = (r.algorithm.clone(), r.method, r.setting.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    groups
        .into_iter()
        .map(|(algorithm, method, setting)| {
            let members: Vec<&RepetitionRecord> = records
                .iter()
                .filter(|r| r.algorithm == algorithm && r.method == method && r.setting == setting)
                .collect();
            let ok: Vec<&RepetitionRecord> = members.iter().copied().filter(|r| r.error.is_none()).collect();
            let collect = |f: &dyn Fn(&RepetitionRecord) -> Option<f64>| -> Vec<f64> {
                ok.iter().filter_map(|r| f(r)).collect()
            };
            let pop1 = collect(&|r| r.population_type1);
            let emp1 = collect(&|r| r.empirical_type1);
            let mut pop2 = collect(&|r| r.population_type2);
            let c0s = collect(&|r| r.chosen_c0);

            let mut exceedance_rates = BTreeMap::new();
            let keys: Vec<String> = ok
                .iter()
                .flat_map(|r| r.estimates.keys().cloned())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            for key in keys {
                let pairs: Vec<(f64, f64)> = ok
                    .iter()
                    .filter_map(|r| Some((r.population_type1?, *r.estimates.get(&key)?)))
                    .collect();
                if !pairs.is_empty() {
                    let above = pairs.iter().filter(|(p, e)| p > e).count();
                    exceedance_rates.insert(key, above as f64 / pairs.len() as f64);
                }
            }
            let disagreements: Vec<usize> = ok.iter().filter_map(|r| r.disagreements).collect();

            GroupSummary {
                algorithm,
                method,
                setting,
                reps: members.len(),
                failures: members.len() - ok.len(),
                population_violation_rate: violation_rate(&pop1, alpha).ok(),
                empirical_violation_rate: violation_rate(&emp1, alpha).ok(),
                mean_population_type1: mean(&pop1),
                median_population_type2: median(&mut pop2),
                mean_chosen_c0: mean(&c0s),
                exceedance_rates,
                total_disagreements: (!disagreements.is_empty()).then(|| disagreements.iter().sum()),
            }
        })
        .collect()
}

/// Runs every repetition (in parallel, one derived seed each) and aggregates.
/// Failures inside a repetition are recorded, not raised.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let base = Seed::new(config.seed);
    let per_rep = (0..config.reps)
        .into_par_iter()
        .map(|rep| run_repetition(config, rep, base.derive(rep as u64)))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<RepetitionRecord> = per_rep.into_iter().flatten().collect();
    let summaries = summarize(&records, config.alpha);
    Ok(ExperimentReport {
        config: config.clone(),
        records,
        summaries,
    })
}

fn run_repetition(config: &ExperimentConfig, rep: usize, seed: Seed) -> Result<Vec<RepetitionRecord>> {
    let train = generate(&config.distribution, config.n_train, seed.derive(0))?;
    let eval = generate(&config.distribution, config.n_eval, seed.derive(1))?;
    let mut out = Vec::new();
    for (a, algorithm) in config.algorithms.iter().enumerate() {
        for (j, &method) in config.methods.iter().enumerate() {
            let s = seed.derive(2).derive(a as u64).derive(j as u64);
            let ctx = RepContext {
                config,
                rep,
                algorithm,
                method,
                train: &train,
                eval: &eval,
                seed: s,
            };
            ctx.run(&mut out);
        }
    }
    Ok(out)
}

struct RepContext<'a> {
    config: &'a ExperimentConfig,
    rep: usize,
    algorithm: &'a Algorithm,
    method: Method,
    train: &'a LabeledSample,
    eval: &'a LabeledSample,
    seed: Seed,
}

impl RepContext<'_> {
    fn record(&self, setting: Option<String>) -> RepetitionRecord {
        RepetitionRecord::new(self.rep, self.algorithm, self.method, setting)
    }

    fn run(&self, out: &mut Vec<RepetitionRecord>) {
        match self.algorithm {
            Algorithm::TubecEstimators { c0s, leftout_sizes } => {
                for (i, &c0) in c0s.iter().enumerate() {
                    for (k, &m) in leftout_sizes.iter().enumerate() {
                        let base = self.record(Some(format!("c0={c0} m={m}")));
                        let seeds = (self.seed.derive(i as u64), self.seed.derive(1000 + k as u64));
                        out.push(self.tubec_estimators(base.clone(), c0, m, seeds).unwrap_or_else(|e| base.failed(&e)));
                    }
                }
            }
            Algorithm::TubeEstimators { c0s } => {
                for (i, &c0) in c0s.iter().enumerate() {
                    let base = self.record(Some(format!("c0={c0}")));
                    out.push(self.tube_estimators(base.clone(), c0, self.seed.derive(i as u64)).unwrap_or_else(|e| base.failed(&e)));
                }
            }
            _ => {
                let base = self.record(None);
                out.push(self.single(base.clone()).unwrap_or_else(|e| base.failed(&e)));
            }
        }
    }

    fn single(&self, mut rec: RepetitionRecord) -> Result<RepetitionRecord> {
        let cfg = self.config;
        let recipe = cfg.recipe(self.method);
        let from_selection = |mut rec: RepetitionRecord, sel: SelectionResult| -> Result<RepetitionRecord> {
            rec.chosen_c0 = Some(sel.chosen_c0);
            rec.estimates.insert("selected".into(), sel.candidates[sel.chosen_index].estimate);
            rec.with_eval(&sel.classifier, self.eval)
        };
        match self.algorithm {
            Algorithm::Np => {
                let (scorer, left) = self.np_scorer()?;
                let np = np_classifier(&scorer, &left, NpSettings::new(cfg.alpha, cfg.delta)?)?;
                rec.empirical_type1 = Some(empirical_alpha(&np.classifier, &left)?.value);
                rec.with_eval(&np.classifier, self.eval)
            }
            Algorithm::VanillaCs => {
                let sel = vanilla_cs(self.train, cfg.alpha, &cfg.grid, &recipe, self.seed)?;
                rec.empirical_type1 = Some(sel.candidates[sel.chosen_index].estimate);
                from_selection(rec, sel)
            }
            Algorithm::TubeCs => {
                let sel = tube_cs(self.train, cfg.alpha, &cfg.grid, &recipe, &cfg.tube_settings(), self.seed)?;
                rec.empirical_type1 = Some(empirical_type1(&sel.classifier, self.train)?);
                from_selection(rec, sel)
            }
            Algorithm::TubecCs => {
                let sel = tubec_cs(self.train, cfg.alpha, &cfg.grid, &recipe, cfg.delta, cfg.bootstrap, self.seed)?;
                rec.empirical_type1 = Some(empirical_type1(&sel.classifier, self.train)?);
                from_selection(rec, sel)
            }
            Algorithm::Correspondence => {
                let (scorer, left) = self.np_scorer()?;
                let np = np_classifier(&scorer, &left, NpSettings::new(cfg.alpha, cfg.delta)?)?;
                let approach = if self.method.generative().is_some() {
                    CsApproach::Rebalancing
                } else {
                    CsApproach::PostTraining
                };
                let (c0, cs) = cs_counterpart(&np.classifier, approach)?;
                let np_eval = empirical_errors(&np.classifier, self.eval)?;
                rec.estimates.insert("np_population_type1".into(), np_eval.type1);
                rec.estimates.insert("np_population_type2".into(), np_eval.type2);
                rec.disagreements = Some(compare_labels(&np.classifier, &cs, self.eval).disagreements);
                rec.chosen_c0 = Some(c0);
                rec.empirical_type1 = Some(empirical_alpha(&cs, &left)?.value);
                rec.with_eval(&cs, self.eval)
            }
            Algorithm::Constant { label } => {
                let c = ThresholdClassifier::new(ScoringFunction::constant(f64::from(*label)), 0.5);
                rec.empirical_type1 = Some(empirical_type1(&c, self.train)?);
                rec.with_eval(&c, self.eval)
            }
            Algorithm::TubecEstimators { .. } | Algorithm::TubeEstimators { .. } => {
                unreachable!("handled per setting")
            }
        }
    }

    fn np_scorer(&self) -> Result<(ScoringFunction, LabeledSample)> {
        let m = self.config.leftout.resolve(self.train.n0());
        let (mixed, left) = split_class0(self.train, m, self.seed.derive(0))?;
        Ok((train_scorer(&mixed, &Learner::Method(self.method))?, left))
    }

    fn tubec_estimators(&self, mut rec: RepetitionRecord, c0: f64, m: usize, seeds: (Seed, Seed)) -> Result<RepetitionRecord> {
        let cfg = self.config;
        let classifier = cfg.recipe(self.method).build(self.train, CostPair::new(c0)?, seeds.0)?;
        let left = generate_class(&cfg.distribution, 0, m, seeds.1.derive(0))?;
        let bound = tubec(&classifier, &left, cfg.delta, cfg.bootstrap, seeds.1.derive(1))?;
        let empirical = empirical_alpha(&classifier, &left)?.value;
        rec.chosen_c0 = Some(c0);
        rec.empirical_type1 = Some(empirical);
        rec.estimates.insert("tubec".into(), bound.value);
        rec.estimates.insert("plug-in".into(), plugin_estimate(&classifier, &left, cfg.delta)?.value);
        rec.estimates.insert("empirical".into(), empirical);
        rec.with_eval(&classifier, self.eval)
    }

    fn tube_estimators(&self, mut rec: RepetitionRecord, c0: f64, seed: Seed) -> Result<RepetitionRecord> {
        let cfg = self.config;
        let (estimate, classifier) = tube(self.train, CostPair::new(c0)?, &cfg.recipe(self.method), &cfg.tube_settings(), seed)?;
        let empirical = estimate.full_sample_empirical.unwrap_or(f64::NAN);
        rec.chosen_c0 = Some(c0);
        rec.empirical_type1 = Some(empirical);
        rec.estimates.insert("tube".into(), estimate.value);
        rec.estimates.insert("empirical".into(), empirical);
        rec.with_eval(&classifier, self.eval)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::DistributionKind;

    fn config(algorithms: Vec<Algorithm>) -> ExperimentConfig {
        ExperimentConfig {
            distribution: DistributionSpec::new(DistributionKind::Gaussian, 3).unwrap(),
            n_train: 200,
            n_eval: 2000,
            reps: 3,
            alpha: 0.1,
            delta: 0.1,
            methods: vec![Method::Lr],
            approach: CsApproach::Stratification,
            stratify_mode: StratifyMode::Oversample0,
            algorithms,
            grid: CostGrid::default(),
            leftout: LeftoutSize::default(),
            bootstrap: 50,
            splits: 2,
            seed: 11,
        }
    }

    #[test]
    fn violation_rate_examples() {
        assert_eq!(violation_rate(&[0.05, 0.15], 0.1).unwrap(), 0.5);
        assert_eq!(violation_rate(&[0.1, 0.1, 0.1], 0.1).unwrap(), 0.0);
        assert_eq!(violation_rate(&[0.11, 0.12, 0.09, 0.10], 0.1).unwrap(), 0.5);
        assert!(violation_rate(&[], 0.1).is_err());
    }

    #[test]
    fn constant_zero_never_violates() {
        let mut cfg = config(vec![Algorithm::Constant { label: 0 }]);
        cfg.reps = 1;
        let report = run_experiment(&cfg).unwrap();
        let s = report.summary("constant0", Method::Lr, None).unwrap();
        assert_eq!(s.population_violation_rate, Some(0.0));
        assert_eq!(report.records[0].population_type1, Some(0.0));
    }

    #[test]
    fn summaries_recompute_from_records() {
        let cfg = config(vec![Algorithm::Np, Algorithm::VanillaCs]);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.records.len(), 6);
        for s in &report.summaries {
            let pops: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.algorithm == s.algorithm)
                .filter_map(|r| r.population_type1)
                .collect();
            assert_eq!(s.population_violation_rate, violation_rate(&pops, cfg.alpha).ok());
        }
        assert_eq!(report, run_experiment(&cfg).unwrap());
    }

    #[test]
    fn estimator_settings_are_grouped() {
        let cfg = config(vec![
            Algorithm::TubecEstimators { c0s: vec![0.7], leftout_sizes: vec![30, 60] },
            Algorithm::TubeEstimators { c0s: vec![0.7, 0.8] },
        ]);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.summaries.len(), 4);
        let s = report.summary("tubec-estimators", Method::Lr, Some("c0=0.7 m=30")).unwrap();
        assert_eq!(s.reps, 3);
        assert!(s.exceedance_rates.contains_key("tubec"));
        assert!(report.summary("tube-estimators", Method::Lr, Some("c0=0.8")).is_some());
    }

    #[test]
    fn failures_are_recorded() {
        let mut cfg = config(vec![Algorithm::Np]);
        cfg.leftout = LeftoutSize::Size(5);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.failed_records().count(), 3);
        assert_eq!(report.summaries[0].failures, 3);
        assert_eq!(report.summaries[0].population_violation_rate, None);
    }

    #[test]
    fn eval_size_is_checked() {
        let mut cfg = config(vec![Algorithm::Np]);
        cfg.n_eval = 1999;
        assert!(run_experiment(&cfg).is_err());
    }
}

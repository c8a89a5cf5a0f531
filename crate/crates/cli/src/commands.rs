//! Subcommand execution. Each command maps a resolved configuration to a
//! result tree, tables and warnings; nothing here touches stdout.

use npcs::classifiers::{train_scorer, Learner};
use npcs::correspondence::np_to_cs;
use npcs::data::{empirical_errors, split_class0, ErrorReport};
use npcs::np::{np_classifier, NpResult, NpSettings};
use npcs::selectors::{tube_cs, tubec_cs, vanilla_cs, SelectionResult};
use npcs::simgen::{generate, run_experiment, violation_rate, ExperimentConfig, LeftoutSize};
use npcs::tube::{empirical_alpha, plugin_estimate, tube, tubec, TubeSettings};
use npcs::{CostPair, CsRecipe, LabeledSample, Method, ScoringFunction, Seed, ThresholdClassifier};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, CsvSource, RunConfig};
use crate::error::{usage, CliError, CliResult};
use crate::ingest::ingest_csv;
use crate::presets::{dataset_shape, expand, parse_algorithm, LabeledExperiment};
use crate::report::Table;

/// What a command produces before it is wrapped into a report.
#[derive(Debug, Default)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

const DATA_STREAM: u64 = 0;
const RUN_STREAM: u64 = 1;

pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    match cfg.command {
        Command::NpTrain => np_train(cfg),
        Command::VanillaCs | Command::TubeCs | Command::TubecCs => select(cfg),
        Command::Tubec => tubec_command(cfg),
        Command::Tube => tube_command(cfg),
        Command::Correspond => correspond(cfg),
        Command::Simulate => simulate(cfg),
        Command::Evaluate => evaluate(cfg),
        Command::Compare => compare(cfg),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn read_csv(src: &CsvSource) -> CliResult<LabeledSample> {
    Ok(ingest_csv(&src.path, &src.label_column, &src.class0_value)?)
}

/// Training data from the CSV file or the synthetic generator.
fn load_data(cfg: &RunConfig) -> CliResult<LabeledSample> {
    if let Some(src) = &cfg.data {
        return read_csv(src);
    }
    let syn = cfg
        .synthetic
        .as_ref()
        .ok_or_else(|| usage(format!("{} needs --data or --distribution", cfg.command)))?;
    Ok(generate(&syn.spec()?, syn.n, Seed::new(cfg.seed).derive(DATA_STREAM))?)
}

fn run_seed(cfg: &RunConfig) -> Seed {
    Seed::new(cfg.seed).derive(RUN_STREAM)
}

fn recipe(cfg: &RunConfig) -> CliResult<CsRecipe> {
    Ok(CsRecipe {
        approach: cfg.approach,
        method: cfg.single_method()?,
        stratify_mode: cfg.stratify_mode,
    })
}

fn leftout_size(cfg: &RunConfig, sample: &LabeledSample) -> usize {
    cfg.leftout.resolve(sample.n0())
}

fn tube_settings(cfg: &RunConfig, sample: &LabeledSample) -> TubeSettings {
    let leftout_fraction = match cfg.leftout {
        LeftoutSize::Fraction(f) => f,
        // floor(n0 * fraction) recovers m
        LeftoutSize::Size(m) => ((m as f64 + 0.5) / sample.n0().max(1) as f64).min(0.99),
    };
    TubeSettings {
        delta: cfg.delta,
        bootstrap: cfg.bootstrap,
        splits: cfg.splits,
        leftout_fraction,
    }
}

fn errors_value(e: &ErrorReport) -> Value {
    to_value(e)
}

/// NP umbrella on a fresh class-0 split of the sample.
fn train_np(cfg: &RunConfig, sample: &LabeledSample, method: Method, seed: Seed) -> CliResult<(NpResult, LabeledSample)> {
    sample.require_both_classes()?;
    let (mixed, leftout) = split_class0(sample, leftout_size(cfg, sample), seed.derive(0))?;
    let scorer = train_scorer(&mixed, &Learner::Method(method))?;
    let np = np_classifier(&scorer, &leftout, NpSettings::new(cfg.alpha, cfg.delta)?)?;
    Ok((np, leftout))
}

fn np_train(cfg: &RunConfig) -> CliResult<Outcome> {
    let sample = load_data(cfg)?;
    let (np, leftout) = train_np(cfg, &sample, cfg.single_method()?, run_seed(cfg))?;
    let result = json!({
        "m": np.m,
        "k_star": np.k_star,
        "threshold": np.threshold,
        "bound": np.bound,
        "leftout_empirical_type1": empirical_alpha(&np.classifier, &leftout)?.value,
        "training_errors": errors_value(&empirical_errors(&np.classifier, &sample)?),
        "classifier": to_value(&np.classifier),
    });
    Ok(Outcome {
        result,
        ..Outcome::default()
    })
}

fn candidates_table(sel: &SelectionResult) -> Table {
    let mut t = Table::new("candidates", &["index", "c0", "estimate", "chosen"]);
    for (i, c) in sel.candidates.iter().enumerate() {
        t.push(vec![json!(i), json!(c.c0), json!(c.estimate), json!(i == sel.chosen_index)]);
    }
    t
}

fn select(cfg: &RunConfig) -> CliResult<Outcome> {
    let sample = load_data(cfg)?;
    let recipe = recipe(cfg)?;
    let seed = run_seed(cfg);
    let sel = match cfg.command {
        Command::VanillaCs => vanilla_cs(&sample, cfg.alpha, &cfg.grid, &recipe, seed)?,
        Command::TubeCs => tube_cs(&sample, cfg.alpha, &cfg.grid, &recipe, &tube_settings(cfg, &sample), seed)?,
        _ => tubec_cs(&sample, cfg.alpha, &cfg.grid, &recipe, cfg.delta, cfg.bootstrap, seed)?,
    };
    let mut warnings = Vec::new();
    if !sel.feasible {
        warnings.push(format!(
            "no cost met alpha = {}; returned the largest cost c0 = {}",
            cfg.alpha, sel.chosen_c0
        ));
    }
    let result = json!({
        "selector": sel.selector.to_string(),
        "chosen_c0": sel.chosen_c0,
        "chosen_index": sel.chosen_index,
        "feasible": sel.feasible,
        "estimate": sel.candidates[sel.chosen_index].estimate,
        "training_errors": errors_value(&empirical_errors(&sel.classifier, &sample)?),
        "classifier": to_value(&sel.classifier),
    });
    Ok(Outcome {
        result,
        tables: vec![candidates_table(&sel)],
        warnings,
    })
}

fn tubec_command(cfg: &RunConfig) -> CliResult<Outcome> {
    let sample = load_data(cfg)?;
    sample.require_both_classes()?;
    let recipe = recipe(cfg)?;
    let seed = run_seed(cfg);
    let (mixed, leftout) = split_class0(&sample, leftout_size(cfg, &sample), seed.derive(0))?;
    let classifier = recipe.build(&mixed, CostPair::new(cfg.c0)?, seed.derive(1))?;
    let mut estimate = tubec(&classifier, &leftout, cfg.delta, cfg.bootstrap, seed.derive(2))?;
    estimate.bootstrap_values.clear();
    let result = json!({
        "c0": cfg.c0,
        "m": leftout.n(),
        "tubec": to_value(&estimate),
        "plug_in": plugin_estimate(&classifier, &leftout, cfg.delta)?.value,
        "leftout_empirical_type1": empirical_alpha(&classifier, &leftout)?.value,
        "classifier": to_value(&classifier),
    });
    Ok(Outcome {
        result,
        ..Outcome::default()
    })
}

fn tube_command(cfg: &RunConfig) -> CliResult<Outcome> {
    let sample = load_data(cfg)?;
    let settings = tube_settings(cfg, &sample);
    let (mut estimate, classifier) = tube(&sample, CostPair::new(cfg.c0)?, &recipe(cfg)?, &settings, run_seed(cfg))?;
    let mut splits = Table::new("splits", &["split", "tubec", "empirical"]);
    for (b, c) in estimate.split_components.iter().enumerate() {
        splits.push(vec![json!(b), json!(c.tubec), json!(c.empirical)]);
    }
    estimate.split_components.clear();
    let result = json!({
        "c0": cfg.c0,
        "tube": to_value(&estimate),
        "classifier": to_value(&classifier),
    });
    Ok(Outcome {
        result,
        tables: vec![splits],
        warnings: Vec::new(),
    })
}

fn correspond(cfg: &RunConfig) -> CliResult<Outcome> {
    let sample = load_data(cfg)?;
    let (np, _) = train_np(cfg, &sample, cfg.single_method()?, run_seed(cfg))?;
    let verify = match &cfg.verify {
        Some(src) => read_csv(src)?,
        None => sample,
    };
    let mapped = np_to_cs(&np, cfg.approach, &verify)?;
    let result = json!({
        "np": {
            "m": np.m,
            "k_star": np.k_star,
            "threshold": np.threshold,
            "bound": np.bound,
            "classifier": to_value(&np.classifier),
        },
        "approach": mapped.approach,
        "c0": mapped.c0,
        "equivalence_checked": mapped.equivalence_checked,
        "verified_points": mapped.verified_points,
        "excluded_points": mapped.excluded_points,
        "classifier": to_value(&mapped.cs_classifier),
    });
    Ok(Outcome {
        result,
        ..Outcome::default()
    })
}

fn custom_experiment(cfg: &RunConfig) -> CliResult<LabeledExperiment> {
    let syn = cfg
        .synthetic
        .as_ref()
        .ok_or_else(|| usage("simulate needs --preset or --distribution"))?;
    if cfg.algorithms.is_empty() {
        return Err(usage("simulate without a preset needs --algorithm"));
    }
    let algorithms = cfg
        .algorithms
        .iter()
        .map(|a| parse_algorithm(a, cfg))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(LabeledExperiment {
        label: syn.distribution.to_string(),
        config: ExperimentConfig {
            distribution: syn.spec()?,
            n_train: syn.n,
            n_eval: cfg.n_eval,
            reps: cfg.reps,
            alpha: cfg.alpha,
            delta: cfg.delta,
            methods: cfg.methods.clone(),
            approach: cfg.approach,
            stratify_mode: cfg.stratify_mode,
            algorithms,
            grid: cfg.grid.clone(),
            leftout: cfg.leftout,
            bootstrap: cfg.bootstrap,
            splits: cfg.splits,
            seed: cfg.seed,
        },
    })
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

fn simulate(cfg: &RunConfig) -> CliResult<Outcome> {
    let experiments = match cfg.preset {
        Some(p) => {
            if cfg.data.is_some() || cfg.synthetic.is_some() {
                return Err(usage("--preset fixes its own data; drop --data/--distribution"));
            }
            expand(p, cfg)
        }
        None => vec![custom_experiment(cfg)?],
    };
    let mut summaries = Table::new(
        "summaries",
        &[
            "experiment",
            "algorithm",
            "method",
            "setting",
            "reps",
            "failures",
            "population_violation_rate",
            "empirical_violation_rate",
            "mean_population_type1",
            "median_population_type2",
            "mean_chosen_c0",
            "exceedance_rates",
            "total_disagreements",
        ],
    );
    let mut records = Table::new(
        "records",
        &[
            "experiment",
            "rep",
            "algorithm",
            "method",
            "setting",
            "chosen_c0",
            "threshold",
            "empirical_type1",
            "population_type1",
            "population_type2",
            "estimates",
            "disagreements",
            "error",
        ],
    );
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for e in &experiments {
        e.config.validate()?;
        let report = run_experiment(&e.config)?;
        for s in &report.summaries {
            summaries.push(vec![
                json!(e.label),
                json!(s.algorithm),
                json!(s.method),
                json!(s.setting),
                json!(s.reps),
                json!(s.failures),
                opt(s.population_violation_rate),
                opt(s.empirical_violation_rate),
                opt(s.mean_population_type1),
                opt(s.median_population_type2),
                opt(s.mean_chosen_c0),
                Value::String(to_value(&s.exceedance_rates).to_string()),
                json!(s.total_disagreements),
            ]);
            if s.failures > 0 {
                warnings.push(format!(
                    "{}: {} {} {}: {} of {} repetitions failed",
                    e.label,
                    s.algorithm,
                    s.method,
                    s.setting.as_deref().unwrap_or(""),
                    s.failures,
                    s.reps
                ));
            }
        }
        for r in &report.records {
            records.push(vec![
                json!(e.label),
                json!(r.rep),
                json!(r.algorithm),
                json!(r.method),
                json!(r.setting),
                opt(r.chosen_c0),
                opt(r.threshold),
                opt(r.empirical_type1),
                opt(r.population_type1),
                opt(r.population_type2),
                Value::String(to_value(&r.estimates).to_string()),
                json!(r.disagreements),
                json!(r.error),
            ]);
        }
        results.push(json!({
            "label": e.label,
            "experiment": to_value(&e.config),
            "summaries": to_value(&report.summaries),
        }));
    }
    Ok(Outcome {
        result: json!({ "preset": cfg.preset, "experiments": results }),
        tables: vec![summaries, records],
        warnings,
    })
}

fn stored_classifier(path: &std::path::Path) -> CliResult<ThresholdClassifier> {
    let doc = crate::report::ReportDocument::read(path)?;
    let c = doc
        .result
        .get("classifier")
        .ok_or_else(|| usage(format!("{} holds no classifier", path.display())))?;
    serde_json::from_value(c.clone()).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn evaluate(cfg: &RunConfig) -> CliResult<Outcome> {
    let classifier = match (cfg.constant, &cfg.model) {
        (Some(label), None) => ThresholdClassifier::new(ScoringFunction::constant(f64::from(label)), 0.5),
        (None, Some(path)) => stored_classifier(path)?,
        _ => return Err(usage("evaluate needs exactly one of --model or --constant")),
    };
    let sample = load_data(cfg)?;
    let errors = empirical_errors(&classifier, &sample)?;
    let result = json!({
        "n": sample.n(),
        "n0": sample.n0(),
        "type1": errors.type1,
        "type2": errors.type2,
        "overall": errors.overall,
        "pi0_hat": errors.pi0_hat,
    });
    Ok(Outcome {
        result,
        ..Outcome::default()
    })
}

/// Random split with both classes on each side, stratified by class.
fn random_halves(sample: &LabeledSample, eval_fraction: f64, seed: Seed) -> CliResult<(LabeledSample, LabeledSample)> {
    let mut rng = seed.rng();
    let (mut train, mut eval) = (Vec::new(), Vec::new());
    for class in [0u8, 1] {
        let mut idx = sample.class_indices(class);
        idx.shuffle(&mut rng);
        let k = ((idx.len() as f64 * eval_fraction).round() as usize).clamp(1, idx.len().saturating_sub(1).max(1));
        eval.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    eval.sort_unstable();
    Ok((sample.select(&train)?, sample.select(&eval)?))
}

struct SplitOutcome {
    chosen_c0: f64,
    errors: ErrorReport,
}

fn compare(cfg: &RunConfig) -> CliResult<Outcome> {
    let sample = load_data(cfg)?;
    sample.require_both_classes()?;
    let mut warnings = Vec::new();
    if let Some(name) = &cfg.dataset {
        match dataset_shape(name) {
            Some((n, d, ratio)) => {
                let observed = sample.n0() as f64 / sample.n() as f64;
                if sample.n() != n || sample.d() != d || (observed - ratio).abs() > 0.015 {
                    warnings.push(format!(
                        "{name}: expected n = {n}, d = {d}, n0/n = {ratio}; file has n = {}, d = {}, n0/n = {observed:.3}",
                        sample.n(),
                        sample.d()
                    ));
                }
            }
            None => warnings.push(format!("unknown dataset name '{name}'; shape not checked")),
        }
    }
    let recipe = recipe(cfg)?;
    let seed = run_seed(cfg);
    let outcomes: Vec<[CliResult<SplitOutcome>; 2]> = (0..cfg.reps)
        .into_par_iter()
        .map(|s| {
            let s_seed = seed.derive(s as u64);
            let halves = random_halves(&sample, cfg.eval_fraction, s_seed.derive(0));
            let run = |which: usize| -> CliResult<SplitOutcome> {
                let (train, eval) = halves.as_ref().map_err(|e| CliError::Internal(e.to_string()))?;
                let sel = if which == 0 {
                    vanilla_cs(train, cfg.alpha, &cfg.grid, &recipe, s_seed.derive(1))?
                } else {
                    tube_cs(train, cfg.alpha, &cfg.grid, &recipe, &tube_settings(cfg, train), s_seed.derive(2))?
                };
                Ok(SplitOutcome {
                    chosen_c0: sel.chosen_c0,
                    errors: empirical_errors(&sel.classifier, eval)?,
                })
            };
            [run(0), run(1)]
        })
        .collect();

    let names = ["vanilla-cs", "tube-cs"];
    let mut table = Table::new("splits", &["split", "selector", "chosen_c0", "type1", "type2", "error"]);
    let mut per_selector = Vec::new();
    for (which, name) in names.iter().enumerate() {
        let mut type1 = Vec::new();
        let mut type2 = Vec::new();
        let mut failures = 0;
        for (s, pair) in outcomes.iter().enumerate() {
            match &pair[which] {
                Ok(o) => {
                    type1.push(o.errors.type1);
                    type2.push(o.errors.type2);
                    table.push(vec![
                        json!(s),
                        json!(name),
                        json!(o.chosen_c0),
                        json!(o.errors.type1),
                        json!(o.errors.type2),
                        Value::Null,
                    ]);
                }
                Err(e) => {
                    failures += 1;
                    table.push(vec![json!(s), json!(name), Value::Null, Value::Null, Value::Null, json!(e.to_string())]);
                }
            }
        }
        let summary = if type1.is_empty() {
            json!({ "selector": name, "failures": failures })
        } else {
            json!({
                "selector": name,
                "failures": failures,
                "violation_rate": violation_rate(&type1, cfg.alpha)?,
                "mean_type1": type1.iter().sum::<f64>() / type1.len() as f64,
                "median_type2": median(&mut type2),
            })
        };
        per_selector.push(summary);
    }
    Ok(Outcome {
        result: json!({ "splits": cfg.reps, "selectors": per_selector }),
        tables: vec![table],
        warnings,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

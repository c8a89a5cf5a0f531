use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use npcs::classifiers::{CsApproach, Method, StratifyMode};
use npcs::selectors::CostGrid;
use npcs::simgen::{DistributionKind, LeftoutSize};

use crate::config::{load_config_value, with_file, Command, CsvSource, RunConfig, SyntheticSource};
use crate::error::{usage, CliResult};
use crate::presets::Preset;

#[derive(Debug, Parser)]
#[command(name = "npcs", version, about = "Type I error control for cost-sensitive and Neyman-Pearson classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Train an NP umbrella classifier.
    NpTrain(CommonArgs),
    /// Select a cost by held-out empirical type I error.
    VanillaCs(CommonArgs),
    /// Bound the type I error of a CS classifier from a left-out class-0 sample.
    Tubec(CommonArgs),
    /// Bound the type I error of a CS classifier trained on all data.
    Tube(CommonArgs),
    /// Select a cost by TUBE estimates.
    TubeCs(CommonArgs),
    /// Select a cost by TUBEc estimates on one class-0 split.
    TubecCs(CommonArgs),
    /// Map an NP classifier to an equivalent CS classifier.
    Correspond(CommonArgs),
    /// Run Monte-Carlo experiments.
    Simulate(CommonArgs),
    /// Type I/II errors of a stored or constant classifier on a dataset.
    Evaluate(CommonArgs),
    /// Vanilla-CS against TUBE-CS over random half splits of a dataset.
    Compare(CommonArgs),
    /// Re-run the configuration embedded in a report and check the result.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub report: PathBuf,
    /// Write the replayed report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON config (or report) supplying defaults; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the label column [default: label].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Label value of the class whose misclassification is more severe.
    #[arg(long)]
    pub class0_value: Option<String>,
    /// Synthetic data instead of a file: gaussian, multivariate-t or mixture.
    #[arg(long)]
    pub distribution: Option<DistributionKind>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Separate chi-square denominators for the two t coordinates.
    #[arg(long)]
    pub independent_t: bool,
    /// One method, or a comma list for simulate: lr, lda, qda, nb.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<Method>>,
    #[arg(long)]
    pub approach: Option<CsApproach>,
    #[arg(long)]
    pub stratify_mode: Option<StratifyMode>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// start:step:end or a comma list.
    #[arg(long)]
    pub c0_grid: Option<CostGrid>,
    /// Type I error cost; a comma list for simulated estimator runs.
    #[arg(long, value_delimiter = ',')]
    pub c0: Option<Vec<f64>>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub splits: Option<usize>,
    #[arg(long, conflicts_with = "leftout_fraction")]
    pub leftout_size: Option<usize>,
    #[arg(long)]
    pub leftout_fraction: Option<f64>,
    /// Left-out sizes for simulated TUBEc estimator runs.
    #[arg(long, value_delimiter = ',')]
    pub leftout_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Evaluation sample size for simulations.
    #[arg(long)]
    pub eval: Option<usize>,
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Comma list: np, vanilla-cs, tube-cs, tubec-cs, correspondence,
    /// tubec-estimators, tube-estimators, constant0, constant1.
    #[arg(long, value_delimiter = ',')]
    pub algorithm: Option<Vec<String>>,
    /// Report whose `result.classifier` is evaluated.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Evaluate the classifier that always predicts this label.
    #[arg(long)]
    pub constant: Option<u8>,
    /// CSV used to verify an NP-to-CS correspondence.
    #[arg(long)]
    pub verify: Option<PathBuf>,
    #[arg(long)]
    pub eval_fraction: Option<f64>,
    /// Known dataset name, used to check the file's shape.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Write the JSON report here, plus CSV tables beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Sub {
    pub fn split(&self) -> Option<(Command, &CommonArgs)> {
        let c = match self {
            Sub::NpTrain(a) => (Command::NpTrain, a),
            Sub::VanillaCs(a) => (Command::VanillaCs, a),
            Sub::Tubec(a) => (Command::Tubec, a),
            Sub::Tube(a) => (Command::Tube, a),
            Sub::TubeCs(a) => (Command::TubeCs, a),
            Sub::TubecCs(a) => (Command::TubecCs, a),
            Sub::Correspond(a) => (Command::Correspond, a),
            Sub::Simulate(a) => (Command::Simulate, a),
            Sub::Evaluate(a) => (Command::Evaluate, a),
            Sub::Compare(a) => (Command::Compare, a),
            Sub::Replay(_) => return None,
        };
        Some(c)
    }
}

fn csv_source(path: PathBuf, args: &CommonArgs, previous: Option<&CsvSource>) -> CliResult<CsvSource> {
    let label_column = args
        .label_column
        .clone()
        .or_else(|| previous.map(|p| p.label_column.clone()))
        .unwrap_or_else(|| "label".to_string());
    let class0_value = args
        .class0_value
        .clone()
        .or_else(|| previous.map(|p| p.class0_value.clone()))
        .ok_or_else(|| usage("--class0-value is required with a CSV file"))?;
    Ok(CsvSource {
        path,
        label_column,
        class0_value,
    })
}

/// Defaults, then the config file, then flags.
pub fn resolve(command: Command, args: &CommonArgs) -> CliResult<RunConfig> {
    let file = args.config.as_deref().map(load_config_value).transpose()?;
    let mut cfg = with_file(command, file)?;

    if let Some(path) = &args.data {
        cfg.data = Some(csv_source(path.clone(), args, cfg.data.as_ref())?);
        cfg.synthetic = None;
    } else if let Some(d) = cfg.data.as_mut() {
        if let Some(l) = &args.label_column {
            d.label_column = l.clone();
        }
        if let Some(v) = &args.class0_value {
            d.class0_value = v.clone();
        }
    }
    if let Some(path) = &args.verify {
        cfg.verify = Some(csv_source(path.clone(), args, cfg.data.as_ref())?);
    }
    if args.distribution.is_some() || args.dim.is_some() || args.n_train.is_some() || args.independent_t {
        if args.data.is_some() {
            return Err(usage("--data and --distribution are mutually exclusive"));
        }
        let prev = cfg.synthetic;
        let distribution = args
            .distribution
            .or(prev.map(|p| p.distribution))
            .ok_or_else(|| usage("--distribution is required for synthetic data"))?;
        cfg.synthetic = Some(SyntheticSource {
            distribution,
            dim: args.dim.or(prev.map(|p| p.dim)).unwrap_or(30),
            n: args.n_train.or(prev.map(|p| p.n)).unwrap_or(1000),
            independent_t: args.independent_t || prev.is_some_and(|p| p.independent_t),
        });
        cfg.data = None;
    }

    if let Some(m) = &args.method {
        cfg.methods = m.clone();
    }
    macro_rules! set {
        ($($field:ident <- $arg:ident),* $(,)?) => {
            $(if let Some(v) = args.$arg.clone() { cfg.$field = v; })*
        };
    }
    set!(
        approach <- approach,
        stratify_mode <- stratify_mode,
        alpha <- alpha,
        delta <- delta,
        grid <- c0_grid,
        bootstrap <- bootstrap,
        splits <- splits,
        seed <- seed,
        reps <- reps,
        n_eval <- eval,
        leftout_sizes <- leftout_sizes,
        eval_fraction <- eval_fraction,
    );
    if let Some(c) = &args.c0 {
        cfg.c0 = *c.first().ok_or_else(|| usage("--c0 needs a value"))?;
        cfg.c0s = c.clone();
    }
    if let Some(m) = args.leftout_size {
        cfg.leftout = LeftoutSize::Size(m);
    }
    if let Some(f) = args.leftout_fraction {
        cfg.leftout = LeftoutSize::Fraction(f);
    }
    if let Some(p) = args.preset {
        cfg.preset = Some(p);
    }
    if let Some(a) = &args.algorithm {
        cfg.algorithms = a.clone();
    }
    if let Some(m) = &args.model {
        cfg.model = Some(m.clone());
    }
    if let Some(c) = args.constant {
        if c > 1 {
            return Err(usage("--constant must be 0 or 1"));
        }
        cfg.constant = Some(c);
    }
    if let Some(d) = &args.dataset {
        cfg.dataset = Some(d.clone());
    }
    if command == Command::Correspond && !matches!(cfg.approach, CsApproach::Rebalancing | CsApproach::PostTraining) {
        cfg.approach = match cfg.methods.first().and_then(|m| m.generative()) {
            Some(_) => CsApproach::Rebalancing,
            None => CsApproach::PostTraining,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

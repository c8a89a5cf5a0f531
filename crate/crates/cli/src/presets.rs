//! Named simulation setups and real-data dataset expectations.

use std::fmt;
use std::str::FromStr;

use npcs::classifiers::{CsApproach, Method, StratifyMode};
use npcs::selectors::CostGrid;
use npcs::simgen::{Algorithm, DistributionKind, DistributionSpec, ExperimentConfig, LeftoutSize};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{usage, CliError, CliResult};

const ALL_KINDS: [DistributionKind; 3] = [
    DistributionKind::Gaussian,
    DistributionKind::MultivariateT,
    DistributionKind::Mixture,
];
const DIM: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Vanilla-CS with stratification, alpha = 0.1, three distributions.
    Figure1,
    /// NP umbrella, alpha = 0.1, three distributions.
    Figure2,
    /// NP classifiers and their CS counterparts, m = 200, alpha = 0.05.
    Figure3,
    /// TUBE against the training-sample empirical error, Gaussian,
    /// c0 in {0.7, 0.8, 0.9}, n in {250, 500, 1000}.
    Figure4,
    /// TUBEc, plug-in and empirical estimators, c0 = 0.7, m in {50, 100, 200}.
    Figure5,
    /// Vanilla-CS, TUBE-CS, TUBEc-CS and NP, alpha = 0.05, Gaussian.
    Figure6,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Figure1,
        Preset::Figure2,
        Preset::Figure3,
        Preset::Figure4,
        Preset::Figure5,
        Preset::Figure6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Figure1 => "figure1",
            Preset::Figure2 => "figure2",
            Preset::Figure3 => "figure3",
            Preset::Figure4 => "figure4",
            Preset::Figure5 => "figure5",
            Preset::Figure6 => "figure6",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| usage(format!("unknown preset '{s}'")))
    }
}

/// One experiment of a simulation run with a display label.
pub struct LabeledExperiment {
    pub label: String,
    pub config: ExperimentConfig,
}

fn base(run: &RunConfig, kind: DistributionKind, n_train: usize, index: usize) -> ExperimentConfig {
    ExperimentConfig {
        distribution: DistributionSpec::new(kind, DIM).expect("preset dimension is valid"),
        n_train,
        n_eval: run.n_eval,
        reps: run.reps,
        alpha: 0.1,
        delta: 0.1,
        methods: vec![Method::Lr],
        approach: CsApproach::Stratification,
        stratify_mode: StratifyMode::Oversample0,
        algorithms: vec![Algorithm::Np],
        grid: CostGrid::default(),
        leftout: LeftoutSize::Fraction(0.5),
        bootstrap: run.bootstrap,
        splits: run.splits,
        seed: run.seed.wrapping_add(1_000_003 * index as u64),
    }
}

pub fn expand(preset: Preset, run: &RunConfig) -> Vec<LabeledExperiment> {
    let per_kind = |f: &dyn Fn(ExperimentConfig) -> ExperimentConfig, n_train: usize| -> Vec<LabeledExperiment> {
        ALL_KINDS
            .iter()
            .enumerate()
            .map(|(i, &kind)| LabeledExperiment {
                label: kind.to_string(),
                config: f(base(run, kind, n_train, i)),
            })
            .collect()
    };
    match preset {
        Preset::Figure1 => per_kind(
            &|c| ExperimentConfig {
                methods: vec![Method::Lda, Method::Lr, Method::Gnb],
                algorithms: vec![Algorithm::VanillaCs],
                ..c
            },
            1000,
        ),
        Preset::Figure2 => per_kind(
            &|c| ExperimentConfig {
                methods: vec![Method::Lda, Method::Lr, Method::Gnb],
                algorithms: vec![Algorithm::Np],
                ..c
            },
            1000,
        ),
        Preset::Figure3 => per_kind(
            &|c| ExperimentConfig {
                alpha: 0.05,
                methods: vec![Method::Lda, Method::Qda, Method::Gnb, Method::Lr],
                algorithms: vec![Algorithm::Correspondence],
                leftout: LeftoutSize::Size(200),
                ..c
            },
            1000,
        ),
        Preset::Figure4 => [250, 500, 1000]
            .iter()
            .enumerate()
            .map(|(i, &n)| LabeledExperiment {
                label: format!("gaussian n={n}"),
                config: ExperimentConfig {
                    algorithms: vec![Algorithm::TubeEstimators { c0s: vec![0.7, 0.8, 0.9] }],
                    ..base(run, DistributionKind::Gaussian, n, i)
                },
            })
            .collect(),
        Preset::Figure5 => per_kind(
            &|c| ExperimentConfig {
                algorithms: vec![Algorithm::TubecEstimators {
                    c0s: vec![0.7],
                    leftout_sizes: vec![50, 100, 200],
                }],
                ..c
            },
            500,
        ),
        Preset::Figure6 => vec![LabeledExperiment {
            label: "gaussian".into(),
            config: ExperimentConfig {
                alpha: 0.05,
                methods: vec![Method::Lr, Method::Gnb],
                algorithms: vec![Algorithm::VanillaCs, Algorithm::TubeCs, Algorithm::TubecCs, Algorithm::Np],
                ..base(run, DistributionKind::Gaussian, 1000, 0)
            },
        }],
    }
}

/// Parses an algorithm name for custom simulations; estimator algorithms take
/// their costs and left-out sizes from the run configuration.
pub fn parse_algorithm(name: &str, run: &RunConfig) -> CliResult<Algorithm> {
    Ok(match name {
        "np" => Algorithm::Np,
        "vanilla-cs" => Algorithm::VanillaCs,
        "tube-cs" => Algorithm::TubeCs,
        "tubec-cs" => Algorithm::TubecCs,
        "correspondence" => Algorithm::Correspondence,
        "tubec-estimators" => Algorithm::TubecEstimators {
            c0s: run.c0s.clone(),
            leftout_sizes: run.leftout_sizes.clone(),
        },
        "tube-estimators" => Algorithm::TubeEstimators { c0s: run.c0s.clone() },
        "constant0" => Algorithm::Constant { label: 0 },
        "constant1" => Algorithm::Constant { label: 1 },
        other => return Err(usage(format!("unknown algorithm '{other}'"))),
    })
}

/// Published shape of a real dataset: `(n, d, n0 / n)`.
pub fn dataset_shape(name: &str) -> Option<(usize, usize, f64)> {
    match name.to_ascii_lowercase().as_str() {
        "diabetes" => Some((768, 8, 0.35)),
        "thyroid" => Some((3090, 18, 0.09)),
        "breast-cancer" | "breast_cancer" => Some((960, 5, 0.46)),
        "marketing" => Some((4119, 18, 0.11)),
        _ => None,
    }
}

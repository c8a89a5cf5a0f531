//! The fully resolved run configuration embedded in every report.

use std::fmt;
use std::path::{Path, PathBuf};

use npcs::classifiers::{CsApproach, Method, StratifyMode};
use npcs::selectors::CostGrid;
use npcs::simgen::{DistributionKind, DistributionSpec, LeftoutSize};
use npcs::tube::{DEFAULT_BOOTSTRAP, DEFAULT_SPLITS};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliError, CliResult};
use crate::presets::Preset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    NpTrain,
    VanillaCs,
    Tubec,
    Tube,
    TubeCs,
    TubecCs,
    Correspond,
    Simulate,
    Evaluate,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::NpTrain => "np-train",
            Command::VanillaCs => "vanilla-cs",
            Command::Tubec => "tubec",
            Command::Tube => "tube",
            Command::TubeCs => "tube-cs",
            Command::TubecCs => "tubec-cs",
            Command::Correspond => "correspond",
            Command::Simulate => "simulate",
            Command::Evaluate => "evaluate",
            Command::Compare => "compare",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    pub label_column: String,
    pub class0_value: String,
}

/// Synthetic data in place of a file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSource {
    pub distribution: DistributionKind,
    pub dim: usize,
    pub n: usize,
    #[serde(default)]
    pub independent_t: bool,
}

impl SyntheticSource {
    pub fn spec(&self) -> npcs::Result<DistributionSpec> {
        let mut spec = DistributionSpec::new(self.distribution, self.dim)?;
        spec.independent_t = self.independent_t;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// CSV training data (or evaluation data for `evaluate`).
    pub data: Option<CsvSource>,
    /// Synthetic training data; exclusive with `data`.
    pub synthetic: Option<SyntheticSource>,
    pub methods: Vec<Method>,
    pub approach: CsApproach,
    pub stratify_mode: StratifyMode,
    pub alpha: f64,
    pub delta: f64,
    pub grid: CostGrid,
    pub c0: f64,
    pub bootstrap: usize,
    pub splits: usize,
    pub leftout: LeftoutSize,
    pub seed: u64,
    pub preset: Option<Preset>,
    pub algorithms: Vec<String>,
    pub reps: usize,
    pub n_eval: usize,
    pub leftout_sizes: Vec<usize>,
    pub c0s: Vec<f64>,
    pub model: Option<PathBuf>,
    pub constant: Option<u8>,
    pub verify: Option<CsvSource>,
    pub eval_fraction: f64,
    pub dataset: Option<String>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            data: None,
            synthetic: None,
            methods: vec![Method::Lr],
            approach: CsApproach::Stratification,
            stratify_mode: StratifyMode::Oversample0,
            alpha: 0.05,
            delta: 0.1,
            grid: CostGrid::default(),
            c0: 0.7,
            bootstrap: DEFAULT_BOOTSTRAP,
            splits: DEFAULT_SPLITS,
            leftout: LeftoutSize::Fraction(0.5),
            seed: 0,
            preset: None,
            algorithms: Vec::new(),
            reps: if command == Command::Compare { 50 } else { 200 },
            n_eval: 100_000,
            leftout_sizes: vec![50, 100, 200],
            c0s: vec![0.7],
            model: None,
            constant: None,
            verify: None,
            eval_fraction: 0.5,
            dataset: None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.data.is_some() && self.synthetic.is_some() {
            return Err(usage("--data and --distribution are mutually exclusive"));
        }
        for (name, v) in [("alpha", self.alpha), ("delta", self.delta), ("c0", self.c0)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(usage(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(usage("eval fraction must lie in (0, 1)"));
        }
        if self.methods.is_empty() {
            return Err(usage("at least one method is required"));
        }
        if let LeftoutSize::Fraction(f) = self.leftout {
            if !(f > 0.0 && f < 1.0) {
                return Err(usage("left-out fraction must lie in (0, 1)"));
            }
        }
        let needs_data = !matches!(self.command, Command::Simulate);
        if needs_data && self.data.is_none() && self.synthetic.is_none() {
            return Err(usage(format!("{} needs --data or --distribution", self.command)));
        }
        if self.command == Command::Compare && self.data.is_none() {
            return Err(usage("compare needs a CSV file via --data"));
        }
        Ok(())
    }

    pub fn single_method(&self) -> CliResult<Method> {
        match self.methods.as_slice() {
            [m] => Ok(*m),
            _ => Err(usage(format!("{} takes exactly one --method", self.command))),
        }
    }
}

/// Reads a configuration file: either a bare (possibly partial) config or a
/// report embedding one.
pub fn load_config_value(path: &Path) -> CliResult<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })?;
    Ok(match value.get("config") {
        Some(c) if value.get("schema_version").is_some() => c.clone(),
        _ => value,
    })
}

/// Defaults for `command` overlaid with the keys present in `file`.
pub fn with_file(command: Command, file: Option<serde_json::Value>) -> CliResult<RunConfig> {
    let mut base = serde_json::to_value(RunConfig::defaults(command)).expect("config serializes");
    if let Some(file) = file {
        let serde_json::Value::Object(entries) = file else {
            return Err(usage("config file must hold a JSON object"));
        };
        if let Some(c) = entries.get("command") {
            if c.as_str() != Some(command.name()) {
                return Err(usage(format!("config file is for {c}, not {command}")));
            }
        }
        let target = base.as_object_mut().expect("config is an object");
        for (k, v) in entries {
            if !target.contains_key(&k) {
                return Err(usage(format!("unknown config key '{k}'")));
            }
            target.insert(k, v);
        }
    }
    serde_json::from_value(base).map_err(|e| usage(format!("invalid config: {e}")))
}

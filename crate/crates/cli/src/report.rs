//! Report documents: JSON with a schema version, the resolved configuration,
//! results, tabular sections and a volatile `run_metadata` block.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "npcs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let internal = |e: csv::Error| CliError::Internal(e.to_string());
        w.write_record(&self.columns).map_err(internal)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).map_err(internal)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Fields that change between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub timestamp: String,
    pub elapsed_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub result: Value,
    #[serde(default)]
    pub tables: Vec<Table>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub run_metadata: RunMetadata,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The document without `run_metadata`; equal for reproducible runs.
    pub fn stable_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("report is an object").remove("run_metadata");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    /// Writes the JSON document to `path` and each table next to it as
    /// `<stem>.<table>.csv`. Returns the CSV paths.
    pub fn write(&self, path: &Path) -> CliResult<Vec<PathBuf>> {
        let io = |p: &Path| {
            let p = p.display().to_string();
            move |source| CliError::Io { path: p, source }
        };
        std::fs::write(path, self.to_json()).map_err(io(path))?;
        let stem = path.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
        let dir = path.parent().unwrap_or_else(|| Path::new(""));
        let mut written = Vec::new();
        for t in &self.tables {
            let p = dir.join(format!("{stem}.{}.csv", t.name));
            std::fs::write(&p, t.to_csv()?).map_err(io(&p))?;
            written.push(p);
        }
        Ok(written)
    }
}

/// First differing line of two texts, for mismatch messages.
pub fn first_difference(a: &str, b: &str) -> Option<String> {
    let (mut la, mut lb) = (a.lines(), b.lines());
    for line in 1.. {
        match (la.next(), lb.next()) {
            (None, None) => return None,
            (x, y) if x == y => continue,
            (x, y) => {
                return Some(format!(
                    "line {line}: recorded {:?}, replayed {:?}",
                    x.unwrap_or("<end>"),
                    y.unwrap_or("<end>")
                ))
            }
        }
    }
    unreachable!()
}

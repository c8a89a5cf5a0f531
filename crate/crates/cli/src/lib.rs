//! Command-line front end: argument and config resolution, CSV ingestion,
//! subcommand execution and report documents.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod presets;
pub mod report;

pub use error::{exit, CliError, CliResult};

use std::time::Instant;

use config::RunConfig;
use report::{ReportDocument, RunMetadata, SCHEMA_VERSION, TOOL};

/// Runs a resolved configuration and wraps the outcome into a report.
pub fn run(cfg: RunConfig) -> CliResult<ReportDocument> {
    let started = Instant::now();
    let outcome = commands::execute(&cfg)?;
    Ok(ReportDocument {
        schema_version: SCHEMA_VERSION,
        tool: TOOL.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg,
        result: outcome.result,
        tables: outcome.tables,
        warnings: outcome.warnings,
        run_metadata: RunMetadata {
            timestamp: chrono::Utc::now().to_rfc3339(),
            elapsed_seconds: started.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        },
    })
}

/// Re-executes the configuration embedded in `recorded` and checks that the
/// new report matches it outside `run_metadata`.
pub fn replay(recorded: &ReportDocument) -> CliResult<ReportDocument> {
    let fresh = run(recorded.config.clone())?;
    let (a, b) = (recorded.stable_json(), fresh.stable_json());
    if a != b {
        let at = report::first_difference(&a, &b).unwrap_or_default();
        return Err(CliError::ReplayMismatch(at));
    }
    Ok(fresh)
}

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use npcs_cli::args::{resolve, Cli, Sub};
use npcs_cli::report::ReportDocument;
use npcs_cli::{exit, replay, run, CliError, CliResult};

/// Environment variable fixing the worker thread count.
const THREADS_VAR: &str = "NPCS_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_VAR} = '{raw}' is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn emit(doc: &ReportDocument, out: Option<&std::path::Path>) -> CliResult<()> {
    for w in &doc.warnings {
        eprintln!("warning: {w}");
    }
    match out {
        Some(path) => {
            doc.write(path)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(doc.to_json().as_bytes())
                .map_err(|e| CliError::Internal(e.to_string()))?;
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Sub::Replay(args) => {
            let recorded = ReportDocument::read(&args.report)?;
            let fresh = replay(&recorded)?;
            match &args.out {
                Some(_) => emit(&fresh, args.out.as_deref()),
                None => {
                    eprintln!("replay matches {}", args.report.display());
                    Ok(())
                }
            }
        }
        sub => {
            let (command, common) = sub.split().expect("replay handled above");
            let cfg = resolve(command, common)?;
            let doc = run(cfg)?;
            emit(&doc, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

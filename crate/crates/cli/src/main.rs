mod commands;
mod config;
mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};
use thermoflux_core::Error;

use commands::{PlotKind, Report, Table};
use config::{Cli, ConfigError, Format, RunConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

enum Failure {
    Config(String),
    Numerical(Error),
    Io(String),
    Verification(Vec<String>),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) | Failure::Verification(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Numerical(_) => "numerical",
            Failure::Io(_) => "io",
            Failure::Verification(_) => "verification",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) | Failure::Io(m) => m.clone(),
            Failure::Numerical(e) => e.to_string(),
            Failure::Verification(names) => format!("failed checks: {}", names.join(", ")),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Library errors split into precondition violations (exit 2) and
/// failures of the numerics themselves (exit 3).
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoBracket(_)
            | Error::QuadratureFailure(_)
            | Error::IllConditioned(_)
            | Error::SingularTime { .. }
            | Error::DegeneratePoint { .. } => Failure::Numerical(e),
            Error::Io(m) => Failure::Io(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("THERMOFLUX_THREADS") else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            return Err(Failure::Config(format!(
                "THERMOFLUX_THREADS = {raw:?} must be a positive integer"
            )))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the thread pool: {e}")))
}

fn csv(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn gnuplot_script(plot: PlotKind, table: &Table, data: &Path) -> Option<String> {
    let file = data.display();
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    match plot {
        PlotKind::Lines { last_column } => {
            s.push_str(&format!("set xlabel '{}'\nplot ", table.header[0]));
            let curves: Vec<String> = (2..=last_column)
                .map(|c| format!("'{file}' using 1:{c} with lines"))
                .collect();
            s.push_str(&curves.join(", \\\n     "));
        }
        PlotKind::Surface => {
            s.push_str("set xlabel 'x'\nset ylabel 'y'\nset pm3d map\n");
            s.push_str(&format!("splot '{file}' using 1:2:3 with pm3d notitle"));
        }
        PlotKind::None => return None,
    }
    s.push('\n');
    Some(s)
}

fn envelope(cfg: &RunConfig, report: &Report) -> Value {
    json!({
        "config": cfg,
        "results": report.results,
        "diagnostics": report.diagnostics,
        "version": VERSION,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn emit(cfg: &RunConfig, report: &Report) -> Result<(), Failure> {
    let doc = envelope(cfg, report);
    let artifact = match cfg.format {
        Format::Csv => csv(&report.table),
        Format::Json => pretty(&doc),
    };
    let mut stdout = io::stdout().lock();
    match &cfg.output {
        Some(path) => {
            fs::write(path, &artifact).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            if cfg.json {
                stdout.write_all(pretty(&doc).as_bytes())?;
            }
        }
        None if cfg.json && cfg.format == Format::Csv => stdout.write_all(pretty(&doc).as_bytes())?,
        None => stdout.write_all(artifact.as_bytes())?,
    }
    if let (Some(script), Some(data)) = (&cfg.gnuplot, &cfg.output) {
        match gnuplot_script(report.plot, &report.table, data) {
            Some(text) => {
                fs::write(script, text).map_err(|e| Failure::Io(format!("{}: {e}", script.display())))?
            }
            None => eprintln!(
                "thermoflux: {} has nothing to plot; no gnuplot script written",
                cfg.command.name()
            ),
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> (Option<RunConfig>, Result<(), Failure>) {
    let cfg = match RunConfig::resolve(cli.command, cli.flags) {
        Ok(c) => c,
        Err(e) => return (None, Err(e.into())),
    };
    let result = configure_threads()
        .and_then(|()| commands::run(&cfg).map_err(Failure::from))
        .and_then(|report| {
            emit(&cfg, &report)?;
            if report.failures.is_empty() {
                Ok(())
            } else {
                Err(Failure::Verification(report.failures))
            }
        });
    (Some(cfg), result)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_errors = cli.flags.json;
    let (cfg, result) = execute(cli);
    let Err(failure) = result else {
        return ExitCode::SUCCESS;
    };
    eprintln!("thermoflux: {} error: {}", failure.kind(), failure.message());
    if json_errors && !matches!(failure, Failure::Verification(_)) {
        let doc = json!({
            "config": cfg,
            "error": { "kind": failure.kind(), "message": failure.message(), "exit_code": failure.code() },
            "version": VERSION,
        });
        print!("{}", pretty(&doc));
    }
    ExitCode::from(failure.code())
}

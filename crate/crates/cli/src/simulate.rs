//! `noisy-draws simulate`: Monte Carlo experiments from a JSON config.

use std::path::{Path, PathBuf};

use clap::Args;
use noisy_draws::runner::run_experiment;
use noisy_draws::{Experiment, McReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::failure::{CliResult, Failure, EXIT_EXCLUDED};
use crate::output;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON config with a `schema` version and a list of experiments.
    #[arg(long)]
    pub config: PathBuf,
    /// Write all reports as one JSON document.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write all reports as one CSV table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Override the replication count of every experiment.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Reject unknown config fields and fail when replications were excluded.
    #[arg(long)]
    pub strict: bool,
    /// Skip the text table on stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub schema: u32,
    pub experiments: Vec<Experiment>,
}

#[derive(Debug, Serialize)]
struct Reports<'a> {
    schema: u32,
    reports: &'a [McReport],
}

/// Dotted paths of keys present in `given` but not in `known`.
fn unknown_fields(given: &Value, known: &Value, path: &str, out: &mut Vec<String>) {
    match (given, known) {
        (Value::Object(g), Value::Object(k)) => {
            for (key, value) in g {
                let here = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                match k.get(key) {
                    Some(inner) => unknown_fields(value, inner, &here, out),
                    None => out.push(here),
                }
            }
        }
        (Value::Array(g), Value::Array(k)) => {
            for (i, (a, b)) in g.iter().zip(k).enumerate() {
                unknown_fields(a, b, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

pub fn load_config(path: &Path, strict: bool) -> CliResult<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| Failure::io(path, e))?;
    let config: Config = serde_json::from_value(raw.clone()).map_err(|e| Failure::io(path, e))?;
    if config.schema != SCHEMA_VERSION {
        return Err(Failure::input(format!(
            "{}: unsupported schema {}, expected {SCHEMA_VERSION}",
            path.display(),
            config.schema
        )));
    }
    if config.experiments.is_empty() {
        return Err(Failure::input(format!("{}: no experiments", path.display())));
    }
    if strict {
        let known = serde_json::to_value(&config).expect("config serializes");
        let mut unknown = Vec::new();
        unknown_fields(&raw, &known, "", &mut unknown);
        if !unknown.is_empty() {
            return Err(Failure::input(format!(
                "{}: unknown fields: {}",
                path.display(),
                unknown.join(", ")
            )));
        }
    }
    Ok(config)
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let config = load_config(&args.config, args.strict)?;
    let mut reports = Vec::with_capacity(config.experiments.len());
    for mut exp in config.experiments {
        if let Some(r) = args.replications {
            exp.replications = r;
        }
        let report = run_experiment(&exp)?;
        if !args.quiet {
            output::write_to(None, |w| output::write_table(w, &report))?;
        }
        reports.push(report);
    }
    if let Some(path) = &args.json {
        let doc = Reports {
            schema: SCHEMA_VERSION,
            reports: &reports,
        };
        let text = serde_json::to_string_pretty(&doc).expect("reports serialize");
        output::write_to(Some(path), |w| writeln!(w, "{text}"))?;
    }
    if let Some(path) = &args.csv {
        output::write_to(Some(path), |w| {
            for (i, report) in reports.iter().enumerate() {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                let text = String::from_utf8(buf).expect("csv is utf-8");
                for (k, line) in text.lines().enumerate() {
                    match (i, k) {
                        (0, 0) => writeln!(w, "experiment,{line}")?,
                        (_, 0) => {}
                        _ => writeln!(w, "{i},{line}")?,
                    }
                }
            }
            Ok(())
        })?;
    }
    let excluded: usize = reports.iter().map(|r| r.excluded).sum();
    if excluded > 0 {
        log::warn!("{excluded} replications were excluded");
        for msg in reports.iter().flat_map(|r| &r.exclusion_messages) {
            log::warn!("  {msg}");
        }
        if args.strict {
            return Err(Failure {
                code: EXIT_EXCLUDED,
                message: format!("{excluded} replications were excluded"),
            });
        }
    }
    Ok(())
}

//! Reading estimate-level and panel CSV files.

use std::collections::HashMap;
use std::path::Path;

use noisy_draws::empirical::reduce_panel;
use noisy_draws::{Error, NoisySample, Panel};

use crate::failure::{CliResult, Failure};

/// Parsed input data. Panels keep their unit labels so errors can name them.
pub enum Input {
    Estimates { sample: NoisySample },
    Panel { panel: Panel, units: Vec<String> },
}

impl Input {
    /// The estimate-level view; panels are reduced to row means and
    /// within-unit variances.
    pub fn sample(&self) -> CliResult<NoisySample> {
        match self {
            Input::Estimates { sample } => Ok(sample.clone()),
            Input::Panel { panel, units } => reduce_panel(panel).map_err(|e| match e {
                Error::ZeroVariance { unit } => {
                    Failure::input(format!("unit '{}' has zero within-unit variance", units[unit]))
                }
                other => other.into(),
            }),
        }
    }

    pub fn panel(&self) -> Option<&Panel> {
        match self {
            Input::Panel { panel, .. } => Some(panel),
            Input::Estimates { .. } => None,
        }
    }
}

fn field(record: &csv::StringRecord, col: usize, name: &str, line: u64) -> CliResult<f64> {
    let raw = record.get(col).unwrap_or("");
    let value: f64 = raw
        .parse()
        .map_err(|_| Failure::input(format!("line {line}: column '{name}' is not a number: '{raw}'")))?;
    if !value.is_finite() {
        return Err(Failure::input(format!("line {line}: column '{name}' is not finite")));
    }
    Ok(value)
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

/// Reads either an estimate-level CSV (`theta_hat`, `sigma2`, which needs
/// `m`) or a long panel CSV (`unit`, `period`, `value`).
pub fn read_input(path: &Path, m: Option<f64>) -> CliResult<Input> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::io(path, e))?;
    let headers = reader.headers().map_err(|e| Failure::io(path, e))?.clone();
    if let (Some(t), Some(s)) = (column(&headers, "theta_hat"), column(&headers, "sigma2")) {
        let m = m.ok_or_else(|| Failure::input("estimate-level input needs --m"))?;
        read_estimates(path, reader, t, s, m)
    } else if let (Some(u), Some(p), Some(v)) = (
        column(&headers, "unit"),
        column(&headers, "period"),
        column(&headers, "value"),
    ) {
        read_panel(path, reader, u, p, v)
    } else {
        Err(Failure::input(format!(
            "{}: line 1: expected columns theta_hat,sigma2 or unit,period,value",
            path.display()
        )))
    }
}

fn records(path: &Path, reader: csv::Reader<std::fs::File>) -> CliResult<Vec<(u64, csv::StringRecord)>> {
    reader
        .into_records()
        .map(|r| {
            r.map(|rec| (rec.position().map_or(0, |p| p.line()), rec))
                .map_err(|e| Failure::io(path, e))
        })
        .collect()
}

fn read_estimates(path: &Path, reader: csv::Reader<std::fs::File>, t: usize, s: usize, m: f64) -> CliResult<Input> {
    let rows = records(path, reader)?;
    let mut draws = Vec::with_capacity(rows.len());
    let mut vars = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        draws.push(field(rec, t, "theta_hat", *line)?);
        let v = field(rec, s, "sigma2", *line)?;
        if v <= 0.0 {
            return Err(Failure::input(format!("line {line}: sigma2 must be positive, got {v}")));
        }
        vars.push(v);
    }
    let sample = NoisySample::new(draws, vars, m)?;
    Ok(Input::Estimates { sample })
}

fn read_panel(path: &Path, reader: csv::Reader<std::fs::File>, u: usize, p: usize, v: usize) -> CliResult<Input> {
    let rows = records(path, reader)?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut units: Vec<String> = Vec::new();
    let mut obs: Vec<Vec<(i64, f64, u64)>> = Vec::new();
    for (line, rec) in &rows {
        let unit = rec.get(u).unwrap_or("").to_string();
        if unit.is_empty() {
            return Err(Failure::input(format!("line {line}: empty unit label")));
        }
        let raw = rec.get(p).unwrap_or("");
        let period: i64 = raw
            .parse()
            .map_err(|_| Failure::input(format!("line {line}: period is not an integer: '{raw}'")))?;
        let value = field(rec, v, "value", *line)?;
        let k = *index.entry(unit.clone()).or_insert_with(|| {
            units.push(unit);
            obs.push(Vec::new());
            units.len() - 1
        });
        obs[k].push((period, value, *line));
    }
    if units.is_empty() {
        return Err(Failure::input(format!("{}: no data rows", path.display())));
    }
    let width = obs[0].len();
    let mut data = Vec::with_capacity(units.len() * width);
    for (label, row) in units.iter().zip(&mut obs) {
        row.sort_by_key(|o| o.0);
        if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Failure::input(format!(
                "line {}: unit '{label}' repeats period {}",
                w[1].2, w[1].0
            )));
        }
        if row.len() != width {
            return Err(Failure::input(format!(
                "unit '{label}' has {} periods but unit '{}' has {width}",
                row.len(),
                units[0]
            )));
        }
        data.extend(row.iter().map(|o| o.1));
    }
    let panel = Panel::new(data, units.len(), width)?;
    Ok(Input::Panel { panel, units })
}

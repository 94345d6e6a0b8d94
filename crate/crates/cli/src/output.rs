//! Table and report writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use noisy_draws::{CdfEstimate, McReport, QuantileEstimate};

use crate::failure::{CliResult, Failure};

/// Runs `write` against `path`, or stdout when `path` is `None`.
pub fn write_to<F>(path: Option<&Path>, write: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let result = match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure::io(p, e))?;
            let mut w = BufWriter::new(file);
            write(&mut w).and_then(|_| w.flush())
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| Failure::input(format!("write failed: {e}")))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_cdf(w: &mut dyn Write, cdf: &CdfEstimate, f_corrected: &[f64]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theta", "f_hat", "bias_hat", "f_corrected", "se"]).map_err(csv_error)?;
    for (k, theta) in cdf.grid.points().iter().enumerate() {
        out.write_record([
            theta.to_string(),
            cdf.f_hat[k].to_string(),
            cdf.bias_hat[k].to_string(),
            f_corrected[k].to_string(),
            cdf.se[k].to_string(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()
}

pub fn write_quantiles(w: &mut dyn Write, rows: &[QuantileEstimate]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["tau", "q_naive", "tau_star", "q_corrected", "ci_lower", "ci_upper"])
        .map_err(csv_error)?;
    for q in rows {
        out.write_record([
            q.tau.to_string(),
            q.q_naive.to_string(),
            opt(q.tau_star),
            q.q_corrected.to_string(),
            opt(q.ci_lower),
            opt(q.ci_upper),
        ])
        .map_err(csv_error)?;
    }
    out.flush()
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

/// Human-readable summary of one report.
pub fn write_table(w: &mut dyn Write, report: &McReport) -> io::Result<()> {
    let d = &report.design;
    writeln!(
        w,
        "{:?} design: n={} m={} psi2={} sigma2={} eta={} seed={}",
        d.kind, d.n, d.m, d.psi2, d.sigma2, d.eta, d.seed
    )?;
    writeln!(
        w,
        "replications: {} completed, {} excluded, {} bandwidth fallbacks",
        report.completed, report.excluded, report.bandwidth_fallbacks
    )?;
    if !report.rows.is_empty() {
        writeln!(
            w,
            "{:<12} {:>6} {:>9} {:>9} {:>9} {:>9} {:>7} {:>9}",
            "estimator", "tau", "truth", "bias", "std", "se/std", "size", "rmse"
        )?;
        for r in &report.rows {
            writeln!(
                w,
                "{:<12} {:>6} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>7} {:>9.4}",
                r.estimator,
                cell(r.tau, 2),
                r.truth,
                r.bias,
                r.std,
                cell(r.se_over_std, 3),
                cell(r.size_5pct, 3),
                r.rmse
            )?;
        }
    }
    if !report.curves.is_empty() {
        writeln!(w, "{:<12} {:>9} {:>9}", "curve", "rmse", "mc_se")?;
        for c in &report.curves {
            writeln!(w, "{:<12} {:>9.4} {:>9.4}", c.estimator, c.rmse, c.rmse_se)?;
        }
    }
    if !report.theta_risk.is_empty() {
        writeln!(w, "{:<12} {:>9} {:>9} {:>9}", "theta risk", "mse", "mc_se", "rmse")?;
        for t in &report.theta_risk {
            writeln!(w, "{:<12} {:>9.4} {:>9.4} {:>9.4}", t.estimator, t.mse, t.mse_se, t.rmse)?;
        }
    }
    writeln!(w)
}

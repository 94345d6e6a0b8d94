//! `noisy-draws bandwidth`: cross-validated bandwidth selection.

use std::path::PathBuf;

use clap::Args;
use noisy_draws::analytic::{self, BandwidthSearch};

use crate::failure::CliResult;
use crate::input::read_input;
use crate::output;

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// Estimate-level CSV (theta_hat,sigma2) or long panel CSV (unit,period,value).
    pub input: PathBuf,
    #[arg(long)]
    pub m: Option<f64>,
    /// Write the scanned `(h, v)` pairs as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Print the rule-of-thumb bandwidth instead of failing when there is no interior minimum.
    #[arg(long)]
    pub fallback: bool,
}

pub fn run(args: &BandwidthArgs) -> CliResult<()> {
    let sample = read_input(&args.input, args.m)?.sample()?;
    let search = BandwidthSearch::for_sample(&sample)?;
    if let Some(path) = &args.trace {
        let trace = analytic::cv_trace(&sample, &search);
        output::write_to(Some(path), |w| {
            writeln!(w, "h,v")?;
            for (h, v) in &trace {
                writeln!(w, "{h},{v}")?;
            }
            Ok(())
        })?;
    }
    let h = match analytic::select_bandwidth(&sample, &search) {
        Ok(h) => h,
        Err(e) if args.fallback => {
            let h = analytic::fallback_bandwidth(&sample);
            log::warn!("{e}; using fallback h = {h}");
            h
        }
        Err(e) => return Err(e.into()),
    };
    println!("{h}");
    Ok(())
}

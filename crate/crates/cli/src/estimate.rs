//! `noisy-draws estimate`: corrected CDF and quantile tables from user data.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use noisy_draws::analytic::{self, BandwidthSearch};
use noisy_draws::empirical::{self, ecdf_se};
use noisy_draws::jackknife::{self, SplitSpec};
use noisy_draws::{CdfEstimate, Method, NoisySample, Panel, QuantileEstimate, ThetaGrid};

use crate::failure::{CliResult, Failure};
use crate::input::{read_input, Input};
use crate::output;

/// Seed used for bootstrap resampling when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 20_240_601;

const AUTO_GRID_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Naive,
    Analytic,
    LambdaJackknife,
    SplitJackknife,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Estimate-level CSV (theta_hat,sigma2) or long panel CSV (unit,period,value).
    pub input: PathBuf,
    /// Observations per unit behind each estimate; required for estimate-level input.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Analytic)]
    pub method: MethodArg,
    /// Fixed bandwidth for the analytic method.
    #[arg(long, conflicts_with = "cv")]
    pub h: Option<f64>,
    /// Choose the analytic bandwidth by cross-validation.
    #[arg(long)]
    pub cv: bool,
    /// Use the rule-of-thumb bandwidth when cross-validation has no interior minimum.
    #[arg(long, requires = "cv")]
    pub fallback: bool,
    /// Noise inflation factor for the lambda-jackknife.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// First-block length for the split-panel jackknife; defaults to ceil(m/2).
    #[arg(long)]
    pub m1: Option<usize>,
    /// Comma-separated quantile levels; produces the quantile table.
    #[arg(long, value_delimiter = ',')]
    pub taus: Vec<f64>,
    /// CDF grid: `auto` or `min:max:count`. Defaults to `auto` unless only quantiles were asked for.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Bootstrap resamples for quantile intervals (analytic method only).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Confidence level of bootstrap intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Clip the reported f_corrected into [0, 1].
    #[arg(long)]
    pub clamp: bool,
    /// CDF table destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Quantile table destination; stdout when absent.
    #[arg(long)]
    pub quantile_out: Option<PathBuf>,
}

/// The automatic grid: 201 points spanning the draws padded by three
/// times the largest noise standard deviation.
pub fn auto_grid(sample: &NoisySample) -> CliResult<ThetaGrid> {
    let lo = sample.draws().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.draws().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_var = sample.noise_var().iter().copied().fold(0.0, f64::max);
    let pad = 3.0 * (max_var / sample.m()).sqrt();
    Ok(ThetaGrid::linspace(lo - pad, hi + pad, AUTO_GRID_POINTS)?)
}

pub fn parse_grid(spec: &str, sample: &NoisySample) -> CliResult<ThetaGrid> {
    if spec == "auto" {
        return auto_grid(sample);
    }
    let bad = || Failure::input(format!("--grid expects 'auto' or 'min:max:count', got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if lo >= hi || lo.is_nan() || hi.is_nan() || count < 2 {
        return Err(bad());
    }
    Ok(ThetaGrid::linspace(lo, hi, count)?)
}

fn bandwidth(args: &EstimateArgs, sample: &NoisySample) -> CliResult<f64> {
    if let Some(h) = args.h {
        return Ok(h);
    }
    if !args.cv {
        return Err(Failure::input("the analytic method needs --h or --cv"));
    }
    if args.fallback {
        return Ok(analytic::select_bandwidth_or_fallback(sample).h);
    }
    let search = BandwidthSearch::for_sample(sample)?;
    Ok(analytic::select_bandwidth(sample, &search)?)
}

fn naive_cdf(sample: &NoisySample, grid: &ThetaGrid) -> CdfEstimate {
    let f_hat = empirical::ecdf(sample, grid);
    CdfEstimate {
        grid: grid.clone(),
        se: ecdf_se(&f_hat, sample.n()),
        bias_hat: vec![0.0; f_hat.len()],
        f_corrected: f_hat.clone(),
        f_hat,
        method: Method::Naive,
    }
}

fn naive_quantile(sample: &NoisySample, tau: f64) -> CliResult<QuantileEstimate> {
    let q = empirical::quantile_plugin(sample, tau)?;
    Ok(QuantileEstimate {
        tau,
        q_naive: q,
        q_corrected: q,
        tau_star: None,
        ci_lower: None,
        ci_upper: None,
        method: Method::Naive,
    })
}

fn split_spec<'a>(args: &EstimateArgs, input: &'a Input) -> CliResult<(&'a Panel, SplitSpec)> {
    let panel = input
        .panel()
        .ok_or_else(|| Failure::input("the split-panel jackknife needs panel input"))?;
    let m = panel.m();
    let split = match args.m1 {
        Some(m1) if m1 < m => SplitSpec::new(m1, m - m1)?,
        Some(m1) => return Err(Failure::input(format!("--m1 {m1} must be below the panel length {m}"))),
        None => SplitSpec::halves(m)?,
    };
    Ok((panel, split))
}

pub fn run(args: &EstimateArgs) -> CliResult<()> {
    let input = read_input(&args.input, args.m)?;
    let sample = input.sample()?;
    if args.bootstrap.is_some() && args.method != MethodArg::Analytic {
        return Err(Failure::input("--bootstrap is only available with --method analytic"));
    }
    let h = match args.method {
        MethodArg::Analytic => Some(bandwidth(args, &sample)?),
        _ => None,
    };
    let split = match args.method {
        MethodArg::SplitJackknife => Some(split_spec(args, &input)?),
        _ => None,
    };
    let want_cdf = args.grid.is_some() || args.taus.is_empty();
    if want_cdf {
        let grid = parse_grid(args.grid.as_deref().unwrap_or("auto"), &sample)?;
        let cdf = match args.method {
            MethodArg::Naive => naive_cdf(&sample, &grid),
            MethodArg::Analytic => analytic::corrected_cdf(&sample, &grid, h.unwrap_or_default())?,
            MethodArg::LambdaJackknife => jackknife::lambda_cdf(&sample, &grid, args.lambda)?,
            MethodArg::SplitJackknife => {
                let (panel, spec) = split.expect("set for the split method");
                jackknife::split_panel_cdf(panel, &spec, &grid)?
            }
        };
        let f_corrected = if args.clamp { cdf.clamped() } else { cdf.f_corrected.clone() };
        output::write_to(args.out.as_deref(), |w| output::write_cdf(w, &cdf, &f_corrected))?;
    }
    if !args.taus.is_empty() {
        let mut rows = Vec::with_capacity(args.taus.len());
        for &tau in &args.taus {
            let est = match (args.method, args.bootstrap) {
                (MethodArg::Naive, _) => naive_quantile(&sample, tau)?,
                (MethodArg::Analytic, Some(b)) => {
                    analytic::bootstrap_quantile_ci(&sample, tau, h.unwrap_or_default(), b, args.level, args.seed)?
                }
                (MethodArg::Analytic, None) => analytic::corrected_quantile(&sample, tau, h.unwrap_or_default())?,
                (MethodArg::LambdaJackknife, _) => jackknife::lambda_quantile(&sample, tau, args.lambda)?,
                (MethodArg::SplitJackknife, _) => {
                    let (panel, spec) = split.expect("set for the split method");
                    jackknife::split_panel_quantile(panel, &spec, tau)?
                }
            };
            rows.push(est);
        }
        output::write_to(args.quantile_out.as_deref(), |w| output::write_quantiles(w, &rows))?;
    }
    if let Some(h) = h {
        log::info!("bandwidth h = {h}");
    }
    Ok(())
}

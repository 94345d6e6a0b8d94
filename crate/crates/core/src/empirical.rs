//! Plug-in estimators that treat the noisy draws as if they were the latent
//! values, plus the reduction of a raw panel to estimate-level data.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::sample::{check_tau, NoisySample, Panel, ThetaGrid};
use crate::stats;

/// Fraction of draws `<= theta` at every grid point.
pub fn ecdf(sample: &NoisySample, grid: &ThetaGrid) -> Vec<f64> {
    ecdf_of(sample.draws(), grid)
}

/// [`ecdf`] over a bare slice of values.
pub fn ecdf_of(values: &[f64], grid: &ThetaGrid) -> Vec<f64> {
    let sorted = stats::sorted(values);
    let n = sorted.len() as f64;
    grid.points()
        .iter()
        .map(|&t| sorted.partition_point(|&x| x <= t) as f64 / n)
        .collect()
}

/// Fraction of `values` that are `<= theta`.
pub fn ecdf_at(values: &[f64], theta: f64) -> f64 {
    values.iter().filter(|&&x| x <= theta).count() as f64 / values.len() as f64
}

/// The `ceil(tau n)`-th order statistic of the draws.
pub fn quantile_plugin(sample: &NoisySample, tau: f64) -> Result<f64> {
    order_quantile(sample.draws(), tau)
}

/// The `ceil(tau n)`-th order statistic of `values`.
pub fn order_quantile(values: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let mut work = values.to_vec();
    Ok(stats::select_kth(&mut work, stats::rank(tau, values.len())))
}

/// Covariance kernel `F(min(a, b)) - F(a) F(b)`.
pub fn sigma_f<F: Fn(f64) -> f64>(cdf: F, theta1: f64, theta2: f64) -> f64 {
    cdf(theta1.min(theta2)) - cdf(theta1) * cdf(theta2)
}

/// Row means over the given column range.
pub fn row_means(panel: &Panel, cols: Range<usize>) -> Vec<f64> {
    let k = cols.len() as f64;
    panel
        .rows()
        .map(|row| row[cols.clone()].iter().sum::<f64>() / k)
        .collect()
}

/// Fixed-effect reduction: row means as draws, unbiased within-row
/// variances as noise variances, and the panel length as `m`.
pub fn reduce_panel(panel: &Panel) -> Result<NoisySample> {
    let draws = row_means(panel, 0..panel.m());
    let mut noise_var = Vec::with_capacity(panel.n());
    for (unit, (row, &mean)) in panel.rows().zip(&draws).enumerate() {
        let ss: f64 = row.iter().map(|x| (x - mean) * (x - mean)).sum();
        let s2 = ss / (panel.m() - 1) as f64;
        if s2 <= 0.0 {
            return Err(Error::ZeroVariance { unit });
        }
        noise_var.push(s2);
    }
    NoisySample::new(draws, noise_var, panel.m() as f64)
}

/// Standard error of the plug-in CDF at each grid point: the sample standard
/// deviation of the indicators over `sqrt(n)`.
pub fn ecdf_se(f_hat: &[f64], n: usize) -> Vec<f64> {
    let nf = n as f64;
    f_hat
        .iter()
        .map(|&f| (f * (1.0 - f) * nf / (nf - 1.0)).max(0.0).sqrt() / nf.sqrt())
        .collect()
}

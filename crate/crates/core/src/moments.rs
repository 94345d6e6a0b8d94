//! Bias-corrected smooth functionals of the latent distribution.
//!
//! For a moment `mu = E phi(theta)` the plug-in `mean phi(x_i)` carries the
//! bias `E(phi''(theta) sigma^2) / (2m)`, removed here with its sample
//! analogue.

use serde::{Deserialize, Serialize};

use crate::empirical;
use crate::error::{Error, Result};
use crate::normal;
use crate::sample::{NoisySample, Panel};
use crate::stats;

/// Divisor of the cross-sectional variance of the unit means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divisor {
    /// `1 / n`; reproduces the reference Monte Carlo tables.
    #[default]
    N,
    /// `1 / (n - 1)`.
    NMinusOne,
}

/// Plug-in and corrected variance of the latent unit effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub psi2_hat: f64,
    pub psi2_check: f64,
    pub se_hat: f64,
    pub se_check: f64,
}

/// [`corrected_variance_with`] using the default [`Divisor::N`].
pub fn corrected_variance(panel: &Panel) -> VarianceEstimate {
    corrected_variance_with(panel, Divisor::default())
}

/// Variance of the unit means, `psi2_hat`, and its correction
/// `psi2_check = psi2_hat - mean(s_i^2) / m` with `s_i^2` the within-unit
/// sample variances.
pub fn corrected_variance_with(panel: &Panel, divisor: Divisor) -> VarianceEstimate {
    let n = panel.n();
    let m = panel.m() as f64;
    let means = empirical::row_means(panel, 0..panel.m());
    let grand = stats::mean(&means);
    let sq: Vec<f64> = means.iter().map(|x| (x - grand) * (x - grand)).collect();
    let corrected: Vec<f64> = panel
        .rows()
        .zip(&means)
        .zip(&sq)
        .map(|((row, &mu), &d2)| {
            let s2 = row.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (m - 1.0);
            d2 - s2 / m
        })
        .collect();
    let denom = match divisor {
        Divisor::N => n as f64,
        Divisor::NMinusOne => (n - 1) as f64,
    };
    VarianceEstimate {
        psi2_hat: sq.iter().sum::<f64>() / denom,
        psi2_check: corrected.iter().sum::<f64>() / denom,
        se_hat: stats::std_error(&sq),
        se_check: stats::std_error(&corrected),
    }
}

/// Plug-in and corrected estimates of `E phi(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mu_hat: f64,
    pub mu_check: f64,
    pub se: f64,
}

/// `mu_check = mean phi(x_i) - mean(phi''(x_i) sigma_i^2) / (2m)`.
///
/// `phi_dd` is the analytic second derivative of `phi`.
pub fn corrected_moment<F, G>(sample: &NoisySample, phi: F, phi_dd: G) -> Result<MomentEstimate>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let m = sample.m();
    let mut plain = Vec::with_capacity(sample.n());
    let mut basis = Vec::with_capacity(sample.n());
    for (index, (&x, &s2)) in sample.draws().iter().zip(sample.noise_var()).enumerate() {
        let (v, dd) = (phi(x), phi_dd(x));
        if !v.is_finite() || !dd.is_finite() {
            return Err(Error::NonFiniteTransform { index });
        }
        plain.push(v);
        basis.push(v - dd * s2 / (2.0 * m));
    }
    Ok(MomentEstimate {
        mu_hat: stats::mean(&plain),
        mu_check: stats::mean(&basis),
        se: stats::std_error(&basis),
    })
}

/// Fraction of replications whose two-sided t-test at `level` rejects
/// `true_value`.
pub fn t_test_size(estimates: &[f64], ses: &[f64], true_value: f64, level: f64) -> Result<f64> {
    if estimates.len() != ses.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: ses.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::BadLevel(level));
    }
    if estimates.is_empty() {
        return Ok(0.0);
    }
    let crit = normal::quantile(1.0 - 0.5 * level);
    let rejections = estimates
        .iter()
        .zip(ses)
        .filter(|&(&e, &s)| rejects(e, s, true_value, crit))
        .count();
    Ok(rejections as f64 / estimates.len() as f64)
}

pub(crate) fn rejects(estimate: f64, se: f64, true_value: f64, crit: f64) -> bool {
    let dev = (estimate - true_value).abs();
    if se > 0.0 {
        dev / se > crit
    } else {
        dev > 0.0
    }
}

//! Jackknife bias corrections.
//!
//! The split-panel jackknife re-estimates every unit's mean on two disjoint
//! column blocks of the panel. The lambda-jackknife instead adds Gaussian
//! noise of relative scale `lambda` to the draws (analytically, by smoothing
//! the ECDF) and extrapolates back to zero noise.

use serde::{Deserialize, Serialize};

use crate::empirical;
use crate::error::{Error, Result};
use crate::normal;
use crate::sample::{check_tau, CdfEstimate, Method, NoisySample, Panel, QuantileEstimate, ThetaGrid};
use crate::stats;

/// A two-block column split `1..=m1`, `m1+1..=m1+m2` of a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    m1: usize,
    m2: usize,
}

impl SplitSpec {
    pub fn new(m1: usize, m2: usize) -> Result<Self> {
        if m1 < 2 || m2 < 2 {
            return Err(Error::BadSplit { m1, m2, m: m1 + m2 });
        }
        Ok(Self { m1, m2 })
    }

    /// Near-equal halves with `m1 = ceil(m / 2)`.
    pub fn halves(m: usize) -> Result<Self> {
        let m1 = m.div_ceil(2);
        Self::new(m1, m.saturating_sub(m1))
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    fn check(&self, panel: &Panel) -> Result<()> {
        if self.m1 + self.m2 != panel.m() {
            return Err(Error::BadSplit {
                m1: self.m1,
                m2: self.m2,
                m: panel.m(),
            });
        }
        Ok(())
    }
}

struct SplitMeans {
    full: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

fn split_means(panel: &Panel, split: &SplitSpec) -> Result<SplitMeans> {
    split.check(panel)?;
    let m = panel.m();
    Ok(SplitMeans {
        full: empirical::row_means(panel, 0..m),
        first: empirical::row_means(panel, 0..split.m1),
        second: empirical::row_means(panel, split.m1..m),
    })
}

/// Split-panel jackknife correction of the ECDF of the row means:
/// `b = m1 F_1 + m2 F_2 - m F` and `F_tilde = F - b / m`.
pub fn split_panel_cdf(panel: &Panel, split: &SplitSpec, grid: &ThetaGrid) -> Result<CdfEstimate> {
    let means = split_means(panel, split)?;
    let m = panel.m() as f64;
    let (w1, w2) = (split.m1 as f64 / m, split.m2 as f64 / m);
    let f_hat = empirical::ecdf_of(&means.full, grid);
    let f1 = empirical::ecdf_of(&means.first, grid);
    let f2 = empirical::ecdf_of(&means.second, grid);

    let mut bias_hat = Vec::with_capacity(grid.len());
    let mut f_corrected = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    let mut basis = vec![0.0; panel.n()];
    for (k, &t) in grid.points().iter().enumerate() {
        let b = split.m1 as f64 * f1[k] + split.m2 as f64 * f2[k] - m * f_hat[k];
        bias_hat.push(b);
        f_corrected.push(f_hat[k] - b / m);
        for (i, slot) in basis.iter_mut().enumerate() {
            let ind = |x: f64| if x <= t { 1.0 } else { 0.0 };
            *slot = 2.0 * ind(means.full[i]) - w1 * ind(means.first[i]) - w2 * ind(means.second[i]);
        }
        se.push(stats::std_error(&basis));
    }
    Ok(CdfEstimate {
        grid: grid.clone(),
        f_hat,
        bias_hat,
        f_corrected,
        se,
        method: Method::SplitJackknife,
    })
}

/// Split-panel jackknife correction of the plug-in quantile:
/// `b = m1 q_1 + m2 q_2 - m q` and `q_tilde = q - b / m`.
pub fn split_panel_quantile(panel: &Panel, split: &SplitSpec, tau: f64) -> Result<QuantileEstimate> {
    check_tau(tau)?;
    let means = split_means(panel, split)?;
    let m = panel.m() as f64;
    let q = empirical::order_quantile(&means.full, tau)?;
    let q1 = empirical::order_quantile(&means.first, tau)?;
    let q2 = empirical::order_quantile(&means.second, tau)?;
    let b = split.m1 as f64 * q1 + split.m2 as f64 * q2 - m * q;
    Ok(QuantileEstimate {
        tau,
        q_naive: q,
        q_corrected: q - b / m,
        tau_star: None,
        ci_lower: None,
        ci_upper: None,
        method: Method::SplitJackknife,
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::BadLambda(lambda))
    }
}

fn smoothed_terms<'a>(sample: &'a NoisySample, theta: f64, lambda: f64) -> impl Iterator<Item = (f64, f64)> + 'a {
    let rm = sample.m().sqrt();
    sample
        .draws()
        .iter()
        .zip(sample.noise_var())
        .map(move |(&x, &s2)| {
            let ind = if x <= theta { 1.0 } else { 0.0 };
            (ind, normal::cdf((theta - x) / (lambda * s2.sqrt() / rm)))
        })
}

/// The noise-inflated ECDF `n^-1 sum Phi((theta - x_i) / (lambda sigma_i / sqrt(m)))`.
pub fn smoothed_cdf(sample: &NoisySample, theta: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(smoothed_terms(sample, theta, lambda).map(|(_, p)| p).sum::<f64>() / sample.n() as f64)
}

fn lambda_basis(sample: &NoisySample, theta: f64, lambda: f64) -> Vec<f64> {
    let l2 = lambda * lambda;
    smoothed_terms(sample, theta, lambda)
        .map(|(ind, p)| ind - (p - ind) / l2)
        .collect()
}

/// Lambda-jackknife correction `F_dot = F - (F_lambda - F) / lambda^2`.
pub fn lambda_cdf(sample: &NoisySample, grid: &ThetaGrid, lambda: f64) -> Result<CdfEstimate> {
    check_lambda(lambda)?;
    let l2 = lambda * lambda;
    let m = sample.m();
    let f_hat = empirical::ecdf(sample, grid);
    let mut bias_hat = Vec::with_capacity(grid.len());
    let mut f_corrected = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    for (&t, &f) in grid.points().iter().zip(&f_hat) {
        let fl = smoothed_cdf(sample, t, lambda)?;
        let b = m * (fl - f) / l2;
        bias_hat.push(b);
        f_corrected.push(f - b / m);
        se.push(stats::std_error(&lambda_basis(sample, t, lambda)));
    }
    Ok(CdfEstimate {
        grid: grid.clone(),
        f_hat,
        bias_hat,
        f_corrected,
        se,
        method: Method::LambdaJackknife,
    })
}

/// Standard error of the lambda-jackknife CDF at `theta`.
pub fn se_lambda_cdf(sample: &NoisySample, theta: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(stats::std_error(&lambda_basis(sample, theta, lambda)))
}

/// Left inverse of [`smoothed_cdf`] at `tau`, by bisection.
pub fn smoothed_quantile(sample: &NoisySample, tau: f64, lambda: f64) -> Result<f64> {
    check_tau(tau)?;
    check_lambda(lambda)?;
    let f = |q: f64| smoothed_terms(sample, q, lambda).map(|(_, p)| p).sum::<f64>() / sample.n() as f64;
    let lo_x = sample.draws().iter().copied().fold(f64::INFINITY, f64::min);
    let hi_x = sample.draws().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_sd = sample.noise_var().iter().copied().fold(0.0, f64::max).sqrt() / sample.m().sqrt();
    let mut pad = 10.0 * max_sd * lambda;
    let (mut lo, mut hi) = (lo_x - pad, hi_x + pad);
    let mut expansions = 0;
    while !(f(lo) <= tau && f(hi) >= tau) {
        if expansions == 2 {
            return Err(Error::BracketFailure { tau });
        }
        pad *= 10.0;
        lo = lo_x - pad;
        hi = hi_x + pad;
        expansions += 1;
    }
    let tol = 1e-10 * (hi_x - lo_x).max(max_sd * lambda);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Lambda-jackknife quantile `((1 + lambda^2) q - q_lambda) / lambda^2`.
pub fn lambda_quantile(sample: &NoisySample, tau: f64, lambda: f64) -> Result<QuantileEstimate> {
    check_tau(tau)?;
    check_lambda(lambda)?;
    let l2 = lambda * lambda;
    let q = empirical::quantile_plugin(sample, tau)?;
    let q_lambda = smoothed_quantile(sample, tau, lambda)?;
    Ok(QuantileEstimate {
        tau,
        q_naive: q,
        q_corrected: (1.0 + l2) / l2 * q - q_lambda / l2,
        tau_star: None,
        ci_lower: None,
        ci_upper: None,
        method: Method::LambdaJackknife,
    })
}

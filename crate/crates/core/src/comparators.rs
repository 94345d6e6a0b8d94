//! Shrinkage estimators of the individual latent values, used as benchmarks.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal;
use crate::sample::{check_bandwidth, NoisySample};
use crate::stats;

const DENSITY_FLOOR: f64 = 1e-300;

/// Shrinkage toward `eta` under a known normal prior:
/// `eta + (1 - (sigma2/m) / (sigma2/m + psi2)) (x_i - eta)`.
pub fn parametric_shrink(sample: &NoisySample, sigma2: f64, psi2: f64, eta: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::BadParams(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(psi2 > 0.0 && psi2.is_finite()) {
        return Err(Error::BadParams(format!("psi2 must be positive, got {psi2}")));
    }
    if !eta.is_finite() {
        return Err(Error::BadParams(format!("eta must be finite, got {eta}")));
    }
    let noise = sigma2 / sample.m();
    let weight = 1.0 - noise / (noise + psi2);
    Ok(sample.draws().iter().map(|x| eta + weight * (x - eta)).collect())
}

/// Silverman's normal-reference bandwidth `1.06 s n^(-1/5)`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    1.06 * stats::sample_std(values) * (values.len() as f64).powf(-0.2)
}

/// Empirical Bayes estimates with a per-unit flag set where the density
/// estimate had to be floored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EbEstimate {
    pub estimates: Vec<f64>,
    pub degenerate: Vec<bool>,
}

/// Tweedie's formula `x_i + (sigma2/m) p'(x_i) / p(x_i)` with `p` a Gaussian
/// kernel density estimate of the draws (each draw included in its own
/// estimate).
pub fn empirical_bayes(sample: &NoisySample, sigma2: f64, h_eb: f64) -> Result<EbEstimate> {
    empirical_bayes_at(sample, sigma2, h_eb, sample.draws())
}

/// [`empirical_bayes`] evaluated at arbitrary points, with the density
/// still estimated from every draw.
pub fn empirical_bayes_at(sample: &NoisySample, sigma2: f64, h_eb: f64, points: &[f64]) -> Result<EbEstimate> {
    check_bandwidth(h_eb)?;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::BadParams(format!("sigma2 must be positive, got {sigma2}")));
    }
    let shrink = sigma2 / sample.m();
    let draws = sample.draws();
    let (estimates, degenerate): (Vec<f64>, Vec<bool>) = points
        .par_iter()
        .map(|&x| {
            let (mut p, mut dp) = (0.0, 0.0);
            for &xj in draws {
                let u = (x - xj) / h_eb;
                let k = normal::pdf(u);
                p += k;
                dp -= u * k;
            }
            // p'/p with the common 1/(n h) factor cancelled.
            let floored = p < DENSITY_FLOOR;
            (x + shrink * dp / (h_eb * p.max(DENSITY_FLOOR)), floored)
        })
        .unzip();
    let flagged = degenerate.iter().filter(|&&d| d).count();
    if flagged > 0 {
        warn!("density estimate floored at {flagged} points");
    }
    Ok(EbEstimate { estimates, degenerate })
}

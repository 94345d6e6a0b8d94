//! Analytic bias correction with a Gaussian kernel.
//!
//! The leading bias of the plug-in CDF is the derivative of
//! `beta(theta) = E(sigma^2 | theta) f(theta) / 2`. It is estimated by
//!
//! ```text
//! b_hat(theta) = (1 / (2 n h^2)) * sum_i sigma_i^2 * u_i * phi(u_i),   u_i = (x_i - theta) / h
//! ```
//!
//! which is `-(2 n h^2)^-1 sum_i sigma_i^2 k'(u_i)` for the Gaussian kernel
//! derivative `k'(u) = -u phi(u)`. The corrected CDF is
//! `F_check = F_hat - b_hat / m`, and the corrected quantile re-targets the
//! order statistic at the adjusted level `tau* = tau + b_hat(q_hat(tau)) / m`.

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical;
use crate::error::{Error, Result};
use crate::normal::{self, FRAC_1_SQRT_2PI};
use crate::rng::{self, Domain};
use crate::sample::{
    check_bandwidth, check_tau, CdfEstimate, Method, NoisySample, QuantileEstimate, ThetaGrid,
};
use crate::stats;

fn bias_at(draws: &[f64], noise_var: &[f64], theta: f64, h: f64) -> f64 {
    let n = draws.len() as f64;
    let sum: f64 = draws
        .iter()
        .zip(noise_var)
        .map(|(&x, &s2)| {
            let u = (x - theta) / h;
            s2 * u * normal::pdf(u)
        })
        .sum();
    sum / (2.0 * n * h * h)
}

/// Kernel estimate of the leading CDF bias at `theta`.
pub fn bias_cdf_hat(sample: &NoisySample, theta: f64, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    Ok(bias_at(sample.draws(), sample.noise_var(), theta, h))
}

/// Per-unit influence terms `1{x_i <= theta} + sigma_i^2 k'((x_i - theta)/h) / (2 m h^2)`.
fn corrected_basis(sample: &NoisySample, theta: f64, h: f64) -> Vec<f64> {
    let scale = 1.0 / (2.0 * sample.m() * h * h);
    sample
        .draws()
        .iter()
        .zip(sample.noise_var())
        .map(|(&x, &s2)| {
            let ind = if x <= theta { 1.0 } else { 0.0 };
            ind + scale * s2 * normal::pdf_deriv((x - theta) / h)
        })
        .collect()
}

/// Standard error of the corrected CDF at `theta`.
pub fn se_corrected_cdf(sample: &NoisySample, theta: f64, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    Ok(stats::std_error(&corrected_basis(sample, theta, h)))
}

/// The analytically corrected CDF on `grid`, with standard errors.
pub fn corrected_cdf(sample: &NoisySample, grid: &ThetaGrid, h: f64) -> Result<CdfEstimate> {
    check_bandwidth(h)?;
    let f_hat = empirical::ecdf(sample, grid);
    let m = sample.m();
    let bias_hat: Vec<f64> = grid
        .points()
        .iter()
        .map(|&t| bias_at(sample.draws(), sample.noise_var(), t, h))
        .collect();
    let f_corrected = f_hat.iter().zip(&bias_hat).map(|(f, b)| f - b / m).collect();
    let se = grid
        .points()
        .iter()
        .map(|&t| stats::std_error(&corrected_basis(sample, t, h)))
        .collect();
    Ok(CdfEstimate {
        grid: grid.clone(),
        f_hat,
        bias_hat,
        f_corrected,
        se,
        method: Method::Analytic,
    })
}

/// Closed form of `int phi'((a - t)/h) phi'((b - t)/h) dt`.
pub fn gaussian_cross_integral(a: f64, b: f64, h: f64) -> f64 {
    let r = std::f64::consts::SQRT_2 * h;
    normal::pdf((a - b) / r) / r * (0.5 * h * h - 0.25 * (a - b) * (a - b))
}

/// The kernel-product shorthand of the cross-validation criterion,
/// written exactly as `(1/4) (1/(sqrt2 h)) phi((a-b)/(sqrt2 h)) (1/2 - (a+b)^2/(4h^2) + ab/h^2)`.
///
/// It equals `gaussian_cross_integral(a, b, h) / (4 h^2)`.
pub fn kernel_product_term(a: f64, b: f64, h: f64) -> f64 {
    let r = std::f64::consts::SQRT_2 * h;
    0.25 / r * normal::pdf((a - b) / r) * (0.5 - (a + b) * (a + b) / (4.0 * h * h) + a * b / (h * h))
}

/// Least-squares cross-validation criterion for the bias-correction bandwidth:
///
/// ```text
/// v(h) = sum_i sum_j (s_i s_j / h^2) K(x_i, x_j; h)
///      + sum_i sum_{j != i} (s_i / h) [ m phi'((x_i - x_j)/h) - (n m / (n - 1)) phi((x_i - x_j)/h) ]
/// ```
///
/// with `s_i = sigma_i^2` and `K` the [`kernel_product_term`]. The double
/// sums run over unordered pairs with a single exponential per pair; pairs
/// further apart than 40 bandwidths contribute below 1e-300 and are skipped.
pub fn cv_objective(sample: &NoisySample, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let n = sample.n();
    let m = sample.m();
    let c = n as f64 * m / (n as f64 - 1.0);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sample.draws()[i].total_cmp(&sample.draws()[j]));
    let x: Vec<f64> = order.iter().map(|&i| sample.draws()[i]).collect();
    let s: Vec<f64> = order.iter().map(|&i| sample.noise_var()[i]).collect();

    let h2 = h * h;
    let r = std::f64::consts::SQRT_2 * h;
    // K(a, a; h) = (1/4)(1/r) phi(0) (1/2).
    let diag_k = 0.125 / r * FRAC_1_SQRT_2PI;
    let mut kernel_sq = s.iter().map(|v| v * v).sum::<f64>() / h2 * diag_k;
    let mut cross = 0.0;
    let cutoff = 40.0 * h;
    for i in 0..n {
        let (xi, si) = (x[i], s[i]);
        for j in (i + 1)..n {
            let gap = x[j] - xi;
            if gap > cutoff {
                break;
            }
            let d = -gap / h;
            let e = (-0.25 * d * d).exp();
            // phi(d / sqrt2) and phi(d) from one exponential.
            let phi_half = FRAC_1_SQRT_2PI * e;
            let phi_d = FRAC_1_SQRT_2PI * e * e;
            let k = 0.25 / r * phi_half * (0.5 - 0.25 * d * d);
            kernel_sq += 2.0 * si * s[j] / h2 * k;
            cross += (si - s[j]) / h * m * (-d * phi_d) - c * (si + s[j]) / h * phi_d;
        }
    }
    Ok(kernel_sq + cross)
}

/// Search window for the cross-validated bandwidth: a log-spaced scan of
/// `resolution` points on `[h_min, h_max]` followed by golden-section
/// refinement around the best scan point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSearch {
    pub h_min: f64,
    pub h_max: f64,
    pub resolution: usize,
    pub refine_iters: usize,
}

impl BandwidthSearch {
    pub fn new(h_min: f64, h_max: f64, resolution: usize, refine_iters: usize) -> Result<Self> {
        if !(h_min > 0.0 && h_min.is_finite() && h_max.is_finite() && h_min < h_max) {
            return Err(Error::BadSearch(format!("need 0 < h_min < h_max, got [{h_min}, {h_max}]")));
        }
        if resolution < 8 {
            return Err(Error::BadSearch(format!("resolution must be >= 8, got {resolution}")));
        }
        Ok(Self {
            h_min,
            h_max,
            resolution,
            refine_iters,
        })
    }

    /// Default window `[0.05 s, 2 s]` with `s` the standard deviation of the
    /// draws, 40 scan points and 30 refinement steps.
    pub fn for_sample(sample: &NoisySample) -> Result<Self> {
        let s = sample.draw_std();
        if s.is_nan() || s <= 0.0 {
            return Err(Error::BadSearch("draws have zero spread".into()));
        }
        Self::new(0.05 * s, 2.0 * s, 40, 30)
    }

    /// The log-spaced scan points.
    pub fn trial_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.h_min.ln(), self.h_max.ln());
        let k = self.resolution - 1;
        (0..self.resolution)
            .map(|i| {
                if i == k {
                    self.h_max
                } else {
                    (lo + (hi - lo) * i as f64 / k as f64).exp()
                }
            })
            .collect()
    }
}

/// `(h, v(h))` over the scan points of `search`.
pub fn cv_trace(sample: &NoisySample, search: &BandwidthSearch) -> Vec<(f64, f64)> {
    search
        .trial_grid()
        .into_iter()
        .map(|h| (h, cv_objective(sample, h).unwrap_or(f64::NAN)))
        .collect()
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// The cross-validated bandwidth.
///
/// Fails with [`Error::NoInteriorMinimum`] when the scan minimum sits on
/// either end of the window.
pub fn select_bandwidth(sample: &NoisySample, search: &BandwidthSearch) -> Result<f64> {
    let trace = cv_trace(sample, search);
    let (k, _) = trace
        .iter()
        .enumerate()
        .min_by(|a, b| finite_or_inf(a.1 .1).total_cmp(&finite_or_inf(b.1 .1)))
        .expect("resolution >= 8");
    if k == 0 || k == trace.len() - 1 {
        return Err(Error::NoInteriorMinimum {
            h: trace[k].0,
            at_lower: k == 0,
        });
    }

    let eval = |h: f64| finite_or_inf(cv_objective(sample, h).unwrap_or(f64::NAN));
    let (mut best_h, mut best_v) = (trace[k].0, finite_or_inf(trace[k].1));
    let (mut a, mut b) = (trace[k - 1].0, trace[k + 1].0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..search.refine_iters {
        for (h, v) in [(c, fc), (d, fd)] {
            if v < best_v {
                best_h = h;
                best_v = v;
            }
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d);
        }
    }
    for (h, v) in [(c, fc), (d, fd)] {
        if v < best_v {
            best_h = h;
            best_v = v;
        }
    }
    Ok(best_h)
}

/// Rule-of-thumb bandwidth `s / sqrt(m)`, used when cross-validation has no
/// interior minimum. For a sample without spread the noise scale
/// `sqrt(mean sigma^2 / m)` stands in for `s / sqrt(m)`.
pub fn fallback_bandwidth(sample: &NoisySample) -> f64 {
    let s = sample.draw_std();
    if s > 0.0 {
        s / sample.m().sqrt()
    } else {
        (stats::mean(sample.noise_var()) / sample.m()).sqrt()
    }
}

/// Outcome of [`select_bandwidth_or_fallback`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthChoice {
    pub h: f64,
    pub fallback: bool,
}

/// Cross-validated bandwidth over the default window, or the
/// [`fallback_bandwidth`] (with a logged warning) when there is no interior
/// minimum.
pub fn select_bandwidth_or_fallback(sample: &NoisySample) -> BandwidthChoice {
    let picked = BandwidthSearch::for_sample(sample).and_then(|s| select_bandwidth(sample, &s));
    match picked {
        Ok(h) => BandwidthChoice { h, fallback: false },
        Err(e) => {
            let h = fallback_bandwidth(sample);
            warn!("bandwidth cross-validation failed ({e}); using fallback h = {h}");
            BandwidthChoice { h, fallback: true }
        }
    }
}

fn corrected_rank_quantile(sorted: &[f64], noise_var: &[f64], draws: &[f64], m: f64, tau: f64, h: f64) -> (f64, f64, f64) {
    let n = sorted.len();
    let q_naive = sorted[stats::rank(tau, n) - 1];
    let tau_star = tau + bias_at(draws, noise_var, q_naive, h) / m;
    let q_corrected = sorted[stats::rank(tau_star, n) - 1];
    (q_naive, tau_star, q_corrected)
}

/// Quantile corrected by shifting the target rank to
/// `tau* = tau + b_hat(q_hat(tau)) / m`; the rank is clamped to `[1, n]`.
pub fn corrected_quantile(sample: &NoisySample, tau: f64, h: f64) -> Result<QuantileEstimate> {
    check_tau(tau)?;
    check_bandwidth(h)?;
    let sorted = stats::sorted(sample.draws());
    let (q_naive, tau_star, q_corrected) =
        corrected_rank_quantile(&sorted, sample.noise_var(), sample.draws(), sample.m(), tau, h);
    Ok(QuantileEstimate {
        tau,
        q_naive,
        q_corrected,
        tau_star: Some(tau_star),
        ci_lower: None,
        ci_upper: None,
        method: Method::Analytic,
    })
}

/// Corrected quantiles of `b` bootstrap resamples of `(draw, sigma^2)` pairs,
/// all at the fixed bandwidth `h`. Resample `i` uses its own random stream,
/// so the output does not depend on the thread count.
pub fn bootstrap_quantile_replicates(
    sample: &NoisySample,
    tau: f64,
    h: f64,
    b: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_tau(tau)?;
    check_bandwidth(h)?;
    let n = sample.n();
    let m = sample.m();
    Ok((0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, Domain::Bootstrap, rep as u64);
            let mut draws = Vec::with_capacity(n);
            let mut vars = Vec::with_capacity(n);
            for _ in 0..n {
                let i = rng.random_range(0..n);
                draws.push(sample.draws()[i]);
                vars.push(sample.noise_var()[i]);
            }
            let sorted = stats::sorted(&draws);
            corrected_rank_quantile(&sorted, &vars, &draws, m, tau, h).2
        })
        .collect())
}

/// Corrected quantile with a percentile bootstrap interval at `level`.
pub fn bootstrap_quantile_ci(
    sample: &NoisySample,
    tau: f64,
    h: f64,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<QuantileEstimate> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::BadLevel(level));
    }
    if b < 100 {
        return Err(Error::BadParams(format!("need at least 100 bootstrap resamples, got {b}")));
    }
    let mut est = corrected_quantile(sample, tau, h)?;
    let reps = stats::sorted(&bootstrap_quantile_replicates(sample, tau, h, b, seed)?);
    let alpha = 1.0 - level;
    est.ci_lower = Some(reps[stats::rank(0.5 * alpha, b) - 1]);
    est.ci_upper = Some(reps[stats::rank(1.0 - 0.5 * alpha, b) - 1]);
    Ok(est)
}

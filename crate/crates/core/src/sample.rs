//! Validated inputs and estimator outputs shared by every estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Estimate-level data: noisy draws of the latent values, their per-unit
/// noise variances, and the effective per-unit sample size `m`.
///
/// The conditional variance of draw `i` is `noise_var[i] / m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisySample {
    draws: Vec<f64>,
    noise_var: Vec<f64>,
    m: f64,
}

/// Validates raw inputs into a [`NoisySample`].
pub fn validate_sample(draws: Vec<f64>, noise_var: Vec<f64>, m: f64) -> Result<NoisySample> {
    NoisySample::new(draws, noise_var, m)
}

impl NoisySample {
    pub fn new(draws: Vec<f64>, noise_var: Vec<f64>, m: f64) -> Result<Self> {
        if draws.len() != noise_var.len() {
            return Err(Error::LengthMismatch {
                left: draws.len(),
                right: noise_var.len(),
            });
        }
        if let Some(index) = draws.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "draw", index });
        }
        if let Some(index) = noise_var.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "noise variance",
                index,
            });
        }
        if let Some(index) = noise_var.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveVariance {
                index,
                value: noise_var[index],
            });
        }
        if draws.len() < 2 {
            return Err(Error::TooFewUnits(draws.len()));
        }
        if !(m.is_finite() && m >= 1.0) {
            return Err(Error::BadM(m));
        }
        Ok(Self { draws, noise_var, m })
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.draws.len()
    }

    /// Sample standard deviation of the draws (divisor `n - 1`).
    pub fn draw_std(&self) -> f64 {
        crate::stats::sample_std(&self.draws)
    }

    /// Draws a new sample by picking the given `(draw, noise_var)` pairs.
    pub fn resample(&self, indices: &[usize]) -> Result<Self> {
        let draws = indices.iter().map(|&i| self.draws[i]).collect();
        let noise_var = indices.iter().map(|&i| self.noise_var[i]).collect();
        Self::new(draws, noise_var, self.m)
    }
}

/// A balanced `n x m` panel of raw observations, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    data: Vec<f64>,
    n: usize,
    m: usize,
}

impl Panel {
    pub fn new(data: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewUnits(n));
        }
        if m < 2 {
            return Err(Error::TooFewPeriods(m));
        }
        if data.len() != n * m {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: n * m,
            });
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "panel entry",
                index,
            });
        }
        Ok(Self { data, n, m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: m,
            });
        }
        Self::new(rows.concat(), rows.len(), m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.m)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Strictly increasing evaluation points for CDF-valued estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThetaGrid {
    points: Vec<f64>,
}

impl ThetaGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::BadGrid("grid is empty".into()));
        }
        if let Some(index) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "grid point",
                index,
            });
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadGrid("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `count` equally spaced points from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::BadGrid("grid is empty".into())),
            1 => Self::new(vec![lo]),
            _ => {
                let step = (hi - lo) / (count - 1) as f64;
                Self::new((0..count).map(|i| lo + step * i as f64).collect())
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ThetaGrid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<ThetaGrid> for Vec<f64> {
    fn from(grid: ThetaGrid) -> Self {
        grid.points
    }
}

/// Which estimator produced a [`CdfEstimate`] or [`QuantileEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Analytic,
    SplitJackknife,
    LambdaJackknife,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Analytic => "analytic",
            Method::SplitJackknife => "split_jackknife",
            Method::LambdaJackknife => "lambda_jackknife",
        }
    }
}

/// A CDF-like curve on a [`ThetaGrid`].
///
/// For the corrective methods `f_corrected = f_hat - bias_hat / m`. The
/// corrected curve is not clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfEstimate {
    pub grid: ThetaGrid,
    pub f_hat: Vec<f64>,
    pub bias_hat: Vec<f64>,
    pub f_corrected: Vec<f64>,
    pub se: Vec<f64>,
    pub method: Method,
}

impl CdfEstimate {
    /// Copy of `f_corrected` clipped into `[0, 1]`, for presentation only.
    pub fn clamped(&self) -> Vec<f64> {
        self.f_corrected.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }
}

/// A point estimate of one quantile, optionally with a bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileEstimate {
    pub tau: f64,
    pub q_naive: f64,
    pub q_corrected: f64,
    /// Adjusted rank fraction; only set by the analytic method.
    pub tau_star: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub method: Method,
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::BadTau(tau))
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::BadBandwidth(h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_two_unit_sample() {
        let s = validate_sample(vec![1.0, 2.0], vec![0.5, 0.5], 4.0).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.m(), 4.0);
    }

    #[test]
    fn sample_rejections() {
        assert_eq!(
            validate_sample(vec![1.0], vec![0.5], 4.0),
            Err(Error::TooFewUnits(1))
        );
        assert!(matches!(
            validate_sample(vec![1.0, 2.0], vec![0.5, -0.1], 4.0),
            Err(Error::NonPositiveVariance { index: 1, .. })
        ));
        assert!(matches!(
            validate_sample(vec![1.0, 2.0], vec![0.5], 4.0),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            validate_sample(vec![1.0, f64::NAN], vec![0.5, 0.5], 4.0),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            validate_sample(vec![1.0, 2.0], vec![0.5, f64::INFINITY], 4.0),
            Err(Error::NonFinite { .. })
        ));
        assert_eq!(
            validate_sample(vec![1.0, 2.0], vec![0.5, 0.5], 0.5),
            Err(Error::BadM(0.5))
        );
    }

    #[test]
    fn panel_validation() {
        let p = Panel::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(p.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(p.rows().count(), 2);
        assert!(Panel::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert_eq!(
            Panel::from_rows(&[vec![1.0], vec![2.0]]),
            Err(Error::TooFewPeriods(1))
        );
        assert!(Panel::new(vec![1.0, f64::NAN, 2.0, 3.0], 2, 2).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(ThetaGrid::new(vec![]).is_err());
        assert!(ThetaGrid::new(vec![0.0, 0.0]).is_err());
        assert!(ThetaGrid::new(vec![1.0, 0.0]).is_err());
        let g = ThetaGrid::linspace(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.points(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        let json = serde_json::to_string(&g).unwrap();
        let back: ThetaGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<ThetaGrid>("[2.0, 1.0]").is_err());
    }
}

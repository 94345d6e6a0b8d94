//! Closed-form latent distributions and leading-bias functions for the
//! simulation designs.
//!
//! These are ground truth for Monte Carlo evaluation; no estimator in the
//! crate reads them.

use crate::normal;

/// A known latent distribution `F` together with the leading `1/m` bias
/// terms of the plug-in CDF and quantile estimators.
pub trait LatentTruth: Sync {
    fn cdf(&self, theta: f64) -> f64;
    fn pdf(&self, theta: f64) -> f64;
    fn quantile(&self, tau: f64) -> f64;

    /// `beta(theta) = E(sigma^2 | theta) f(theta) / 2`.
    fn beta(&self, theta: f64) -> f64;

    /// Leading bias of the plug-in CDF, the derivative of [`beta`](Self::beta).
    fn b_f(&self, theta: f64) -> f64;

    /// Leading bias of the plug-in quantile, `-b_F(q) / f(q)`.
    fn b_q(&self, tau: f64) -> f64 {
        let q = self.quantile(tau);
        -self.b_f(q) / self.pdf(q)
    }

    /// Covariance kernel `F(min) - F(a) F(b)` of the limiting process.
    fn sigma_f(&self, a: f64, b: f64) -> f64 {
        crate::empirical::sigma_f(|t| self.cdf(t), a, b)
    }

    /// Asymptotic variance `tau (1 - tau) / f(q)^2` of the quantile estimator.
    fn sigma_q2(&self, tau: f64) -> f64 {
        let f = self.pdf(self.quantile(tau));
        tau * (1.0 - tau) / (f * f)
    }
}

/// `theta ~ N(eta, psi2)` with homoskedastic noise variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalTruth {
    pub eta: f64,
    pub psi2: f64,
    pub sigma2: f64,
}

impl NormalTruth {
    pub fn new(eta: f64, psi2: f64, sigma2: f64) -> Self {
        Self { eta, psi2, sigma2 }
    }

    fn psi(&self) -> f64 {
        self.psi2.sqrt()
    }
}

impl LatentTruth for NormalTruth {
    fn cdf(&self, theta: f64) -> f64 {
        normal::cdf((theta - self.eta) / self.psi())
    }

    fn pdf(&self, theta: f64) -> f64 {
        normal::pdf((theta - self.eta) / self.psi()) / self.psi()
    }

    fn quantile(&self, tau: f64) -> f64 {
        self.eta + self.psi() * normal::quantile(tau)
    }

    fn beta(&self, theta: f64) -> f64 {
        0.5 * self.sigma2 * self.pdf(theta)
    }

    fn b_f(&self, theta: f64) -> f64 {
        // sigma^2 f'(theta) / 2 with f' = -(theta - eta) / psi^2 * f.
        -0.5 * (theta - self.eta) * self.sigma2 / self.psi2 * self.pdf(theta)
    }

    fn b_q(&self, tau: f64) -> f64 {
        0.5 * self.sigma2 / self.psi2 * (self.quantile(tau) - self.eta)
    }
}

/// `theta ~ U[0, 1]` with binomial noise, `sigma^2(theta) = theta (1 - theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UniformProportionTruth;

impl LatentTruth for UniformProportionTruth {
    fn cdf(&self, theta: f64) -> f64 {
        theta.clamp(0.0, 1.0)
    }

    fn pdf(&self, theta: f64) -> f64 {
        if (0.0..=1.0).contains(&theta) {
            1.0
        } else {
            0.0
        }
    }

    fn quantile(&self, tau: f64) -> f64 {
        tau
    }

    fn beta(&self, theta: f64) -> f64 {
        0.5 * theta * (1.0 - theta) * self.pdf(theta)
    }

    fn b_f(&self, theta: f64) -> f64 {
        if (0.0..=1.0).contains(&theta) {
            0.5 * (1.0 - 2.0 * theta)
        } else {
            0.0
        }
    }
}

//! Simulation designs.
//!
//! Replication `r` of a design draws everything from the random stream
//! `(seed, r)`: first the latent values of all units, then the observations
//! unit by unit.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::sample::{NoisySample, Panel};
use crate::truth::{LatentTruth, NormalTruth, UniformProportionTruth};

/// Which data-generating process a [`DesignSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// Normal latent values, normal noise.
    Normal,
    /// Normal latent values, mean-zero right-skewed noise.
    SkewNormal,
    /// Uniform proportions observed through binomial counts.
    Binomial,
}

fn default_psi2() -> f64 {
    1.0
}

fn default_sigma2() -> f64 {
    5.0
}

/// A simulation design: `n` units observed `m` times each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_psi2")]
    pub psi2: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
}

impl DesignSpec {
    /// A normal design with unit latent variance and noise variance 5.
    pub fn normal(n: usize, m: usize, seed: u64) -> Self {
        Self {
            kind: DesignKind::Normal,
            n,
            m,
            psi2: 1.0,
            sigma2: 5.0,
            eta: 0.0,
            seed,
        }
    }

    pub fn skew_normal(n: usize, m: usize, seed: u64) -> Self {
        Self {
            kind: DesignKind::SkewNormal,
            ..Self::normal(n, m, seed)
        }
    }

    pub fn binomial(n: usize, m: usize, seed: u64) -> Self {
        Self {
            kind: DesignKind::Binomial,
            ..Self::normal(n, m, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::BadSpec(format!("n must be at least 2, got {}", self.n)));
        }
        if self.m < 2 {
            return Err(Error::BadSpec(format!("m must be at least 2, got {}", self.m)));
        }
        if self.kind != DesignKind::Binomial {
            if !(self.psi2 > 0.0 && self.psi2.is_finite()) {
                return Err(Error::BadSpec(format!("psi2 must be positive, got {}", self.psi2)));
            }
            if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
                return Err(Error::BadSpec(format!("sigma2 must be positive, got {}", self.sigma2)));
            }
            if !self.eta.is_finite() {
                return Err(Error::BadSpec(format!("eta must be finite, got {}", self.eta)));
            }
        }
        Ok(())
    }

    /// The latent distribution and its leading bias functions.
    pub fn truth(&self) -> Box<dyn LatentTruth> {
        match self.kind {
            DesignKind::Normal | DesignKind::SkewNormal => Box::new(NormalTruth::new(self.eta, self.psi2, self.sigma2)),
            DesignKind::Binomial => Box::new(UniformProportionTruth),
        }
    }
}

/// Generated data for one replication.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignData {
    Panel(Panel),
    Sample(NoisySample),
}

/// One replication's latent values and observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub theta: Vec<f64>,
    pub data: DesignData,
}

/// Parameters of the noise `xi + omega * SN(1)`, scaled to mean zero and
/// variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewNoise {
    pub delta: f64,
    pub omega: f64,
    pub xi: f64,
}

impl SkewNoise {
    pub fn new(sigma2: f64) -> Self {
        let delta = std::f64::consts::FRAC_1_SQRT_2;
        let omega = (sigma2 / (1.0 - 2.0 * delta * delta / std::f64::consts::PI)).sqrt();
        let xi = -omega * delta * (2.0 / std::f64::consts::PI).sqrt();
        Self { delta, omega, xi }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let sn = self.delta * z1.abs() + (1.0 - self.delta * self.delta).sqrt() * z2;
        self.xi + self.omega * sn
    }

    /// Closed-form skewness of the noise.
    pub fn skewness(&self) -> f64 {
        let b = self.delta * (2.0 / std::f64::consts::PI).sqrt();
        0.5 * (4.0 - std::f64::consts::PI) * b.powi(3) / (1.0 - b * b).powf(1.5)
    }
}

/// Data for replication `rep` of `spec`.
pub fn generate(spec: &DesignSpec, rep: u64) -> Result<Replication> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, Domain::Simulation, rep);
    let (n, m) = (spec.n, spec.m);
    match spec.kind {
        DesignKind::Normal | DesignKind::SkewNormal => {
            let psi = spec.psi2.sqrt();
            let theta: Vec<f64> = (0..n)
                .map(|_| spec.eta + psi * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut data = Vec::with_capacity(n * m);
            if spec.kind == DesignKind::Normal {
                let sigma = spec.sigma2.sqrt();
                for &t in &theta {
                    data.extend((0..m).map(|_| t + sigma * rng.sample::<f64, _>(StandardNormal)));
                }
            } else {
                let noise = SkewNoise::new(spec.sigma2);
                for &t in &theta {
                    data.extend((0..m).map(|_| t + noise.sample(&mut rng)));
                }
            }
            Ok(Replication {
                theta,
                data: DesignData::Panel(Panel::new(data, n, m)?),
            })
        }
        DesignKind::Binomial => {
            let theta: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mf = m as f64;
            let floor = (1.0 / mf) * (1.0 - 1.0 / mf);
            let mut draws = Vec::with_capacity(n);
            let mut noise_var = Vec::with_capacity(n);
            for &t in &theta {
                let k = Binomial::new(m as u64, t)
                    .map_err(|e| Error::BadSpec(e.to_string()))?
                    .sample(&mut rng);
                let x = k as f64 / mf;
                draws.push(x);
                noise_var.push((x * (1.0 - x)).max(floor));
            }
            Ok(Replication {
                theta,
                data: DesignData::Sample(NoisySample::new(draws, noise_var, mf)?),
            })
        }
    }
}

fn expect_kind(spec: &DesignSpec, kind: DesignKind) -> Result<()> {
    if spec.kind == kind {
        Ok(())
    } else {
        Err(Error::BadSpec(format!("expected a {kind:?} design, got {:?}", spec.kind)))
    }
}

/// Replication 0 of a normal design.
pub fn gen_normal(spec: &DesignSpec) -> Result<Panel> {
    expect_kind(spec, DesignKind::Normal)?;
    match generate(spec, 0)?.data {
        DesignData::Panel(p) => Ok(p),
        DesignData::Sample(_) => unreachable!("normal designs produce panels"),
    }
}

/// Replication 0 of a skew-normal design.
pub fn gen_skew_normal(spec: &DesignSpec) -> Result<Panel> {
    expect_kind(spec, DesignKind::SkewNormal)?;
    match generate(spec, 0)?.data {
        DesignData::Panel(p) => Ok(p),
        DesignData::Sample(_) => unreachable!("skew-normal designs produce panels"),
    }
}

/// Replication 0 of a binomial design.
pub fn gen_binomial(spec: &DesignSpec) -> Result<NoisySample> {
    expect_kind(spec, DesignKind::Binomial)?;
    match generate(spec, 0)?.data {
        DesignData::Sample(s) => Ok(s),
        DesignData::Panel(_) => unreachable!("binomial designs produce samples"),
    }
}

//! Bias-corrected estimation of the distribution of latent values observed
//! through noisy draws, such as fixed effects estimated from short panels.
//!
//! The plug-in empirical CDF of noisy draws is too spread out. This crate
//! provides the plug-in estimators, an analytic kernel correction with a
//! cross-validated bandwidth, split-panel and Gaussian-noise jackknife
//! corrections, corrected moments, shrinkage comparators, and a Monte Carlo
//! harness for the reference simulation designs.

pub mod analytic;
pub mod comparators;
pub mod dgp;
pub mod empirical;
pub mod error;
pub mod jackknife;
pub mod moments;
pub mod normal;
pub mod quad;
pub mod rng;
pub mod runner;
pub mod sample;
pub mod stats;
pub mod truth;

pub use analytic::{BandwidthChoice, BandwidthSearch};
pub use dgp::{DesignKind, DesignSpec};
pub use error::{Error, Result};
pub use jackknife::SplitSpec;
pub use runner::{Estimator, Experiment, McReport, RmseGrid, RunOptions};
pub use sample::{validate_sample, CdfEstimate, Method, NoisySample, Panel, QuantileEstimate, ThetaGrid};
pub use truth::{LatentTruth, NormalTruth, UniformProportionTruth};

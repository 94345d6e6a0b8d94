//! Monte Carlo experiments over the simulation designs.
//!
//! Each replication generates data from its own random stream, applies the
//! requested estimators, and records estimates, standard errors and errors
//! against the known truth. Replications run in parallel; results are
//! collected in replication order and aggregated sequentially, so a report
//! depends only on the configuration.

use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::comparators;
use crate::dgp::{self, DesignData, DesignKind, DesignSpec};
use crate::empirical;
use crate::error::{Error, Result};
use crate::jackknife::{self, SplitSpec};
use crate::moments::{self, Divisor};
use crate::normal;
use crate::sample::{NoisySample, Panel, ThetaGrid};
use crate::stats;
use crate::truth::LatentTruth;

/// Estimator families a Monte Carlo experiment can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Plug-in and corrected variance of the latent effects.
    Variance,
    /// Plug-in and analytically corrected CDF at the true quantiles.
    Cdf,
    CdfSplit,
    CdfLambda,
    /// Plug-in and adjusted-rank quantiles.
    Quantile,
    QuantileSplit,
    QuantileLambda,
    /// Plug-in, parametric shrinkage and Empirical Bayes estimates of each
    /// unit's latent value.
    EmpiricalBayes,
}

impl Estimator {
    fn needs_panel(self) -> bool {
        matches!(self, Estimator::Variance | Estimator::CdfSplit | Estimator::QuantileSplit)
    }

    fn needs_bandwidth(self) -> bool {
        matches!(self, Estimator::Cdf | Estimator::Quantile)
    }
}

/// Points at which the RMSE of an estimated CDF is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RmseGrid {
    /// `points` equally spaced values between the true quantiles at
    /// `Phi(-width)` and `Phi(width)`; `eta +- width psi` for normal designs.
    Uniform { width: f64, points: usize },
    /// The nine true deciles.
    Deciles,
}

impl Default for RmseGrid {
    fn default() -> Self {
        RmseGrid::Uniform { width: 3.0, points: 121 }
    }
}

impl RmseGrid {
    pub fn points(&self, truth: &dyn LatentTruth) -> Result<ThetaGrid> {
        match *self {
            RmseGrid::Uniform { width, points } => {
                if !(width > 0.0 && width.is_finite()) || points < 2 {
                    return Err(Error::BadGrid(format!("bad uniform grid: width {width}, {points} points")));
                }
                let lo = truth.quantile(normal::cdf(-width));
                let hi = truth.quantile(normal::cdf(width));
                ThetaGrid::linspace(lo, hi, points)
            }
            RmseGrid::Deciles => ThetaGrid::new((1..10).map(|k| truth.quantile(k as f64 / 10.0)).collect()),
        }
    }
}

fn default_lambda() -> f64 {
    1.0
}

fn default_level() -> f64 {
    0.05
}

/// Tuning shared by all estimators of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Nominal level of the two-sided tests.
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub rmse_grid: RmseGrid,
    #[serde(default)]
    pub variance_divisor: Divisor,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            level: default_level(),
            rmse_grid: RmseGrid::default(),
            variance_divisor: Divisor::default(),
        }
    }
}

/// A design plus what to compute on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub design: DesignSpec,
    pub estimators: Vec<Estimator>,
    #[serde(default)]
    pub taus: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub options: RunOptions,
}

/// Monte Carlo standard errors of the entries of an [`McRow`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSe {
    pub bias: f64,
    pub std: f64,
    pub se_over_std: Option<f64>,
    pub size: Option<f64>,
    pub rmse: f64,
}

/// Aggregates for one estimate of one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub estimator: String,
    /// `psi2` or the quantile level, e.g. `tau=0.2`.
    pub target: String,
    pub tau: Option<f64>,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub std: f64,
    pub se_over_std: Option<f64>,
    pub size_5pct: Option<f64>,
    pub rmse: f64,
    pub mc_se: CellSe,
}

/// Root mean integrated squared error of a CDF estimate over the RMSE grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub estimator: String,
    pub rmse: f64,
    pub rmse_se: f64,
}

/// Squared-error risk of estimating every unit's latent value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub estimator: String,
    pub mse: f64,
    pub mse_se: f64,
    pub rmse: f64,
}

/// Aggregated Monte Carlo results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub schema: u32,
    pub design: DesignSpec,
    pub replications: usize,
    pub completed: usize,
    pub excluded: usize,
    pub exclusion_messages: Vec<String>,
    pub bandwidth_fallbacks: usize,
    pub rows: Vec<McRow>,
    pub curves: Vec<CurveRow>,
    pub theta_risk: Vec<RiskRow>,
}

impl McReport {
    pub fn row(&self, estimator: &str, tau: Option<f64>) -> Option<&McRow> {
        self.rows.iter().find(|r| {
            r.estimator == estimator
                && match (r.tau, tau) {
                    (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                    (None, None) => true,
                    _ => false,
                }
        })
    }

    pub fn curve(&self, estimator: &str) -> Option<&CurveRow> {
        self.curves.iter().find(|c| c.estimator == estimator)
    }

    pub fn risk(&self, estimator: &str) -> Option<&RiskRow> {
        self.theta_risk.iter().find(|c| c.estimator == estimator)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat CSV: one line per cell, curve and risk entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "section,estimator,target,truth,mean,bias,std,se_over_std,size,rmse,bias_se,std_se,se_over_std_se,size_se,rmse_se"
        )?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "cell,{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.estimator,
                r.target,
                r.truth,
                r.mean,
                r.bias,
                r.std,
                opt(r.se_over_std),
                opt(r.size_5pct),
                r.rmse,
                r.mc_se.bias,
                r.mc_se.std,
                opt(r.mc_se.se_over_std),
                opt(r.mc_se.size),
                r.mc_se.rmse
            )?;
        }
        for c in &self.curves {
            writeln!(out, "curve,{},grid,,,,,,,{},,,,,{}", c.estimator, c.rmse, c.rmse_se)?;
        }
        for t in &self.theta_risk {
            writeln!(out, "theta_risk,{},theta,,{},,,,,{},,,,,", t.estimator, t.mse, t.rmse)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct CellKey {
    estimator: &'static str,
    tau: Option<f64>,
    truth: f64,
    has_se: bool,
}

struct Plan {
    cells: Vec<CellKey>,
    curves: Vec<&'static str>,
    risks: Vec<&'static str>,
    grid: Option<ThetaGrid>,
    split: Option<SplitSpec>,
}

fn plan(exp: &Experiment, truth: &dyn LatentTruth) -> Result<Plan> {
    let design = &exp.design;
    design.validate()?;
    if exp.replications < 2 {
        return Err(Error::TooFewReplications {
            min: 2,
            got: exp.replications,
        });
    }
    for &tau in &exp.taus {
        crate::sample::check_tau(tau)?;
    }
    if !(exp.options.level > 0.0 && exp.options.level < 1.0) {
        return Err(Error::BadLevel(exp.options.level));
    }
    if !(exp.options.lambda > 0.0 && exp.options.lambda.is_finite()) {
        return Err(Error::BadLambda(exp.options.lambda));
    }
    let mut cells = Vec::new();
    let mut curves = Vec::new();
    let mut risks = Vec::new();
    let mut split = None;
    let per_tau = |cells: &mut Vec<CellKey>, names: &[&'static str], cdf: bool| {
        for &tau in &exp.taus {
            for &name in names {
                cells.push(CellKey {
                    estimator: name,
                    tau: Some(tau),
                    truth: if cdf { tau } else { truth.quantile(tau) },
                    has_se: cdf,
                });
            }
        }
    };
    for &est in &exp.estimators {
        if est.needs_panel() && design.kind == DesignKind::Binomial {
            return Err(Error::BadSpec(format!("{est:?} needs a panel design")));
        }
        if matches!(est, Estimator::CdfSplit | Estimator::QuantileSplit) && split.is_none() {
            split = Some(SplitSpec::halves(design.m)?);
        }
        match est {
            Estimator::Variance => {
                for name in ["psi2_hat", "psi2_check"] {
                    cells.push(CellKey {
                        estimator: name,
                        tau: None,
                        truth: design.psi2,
                        has_se: true,
                    });
                }
            }
            Estimator::Cdf => {
                per_tau(&mut cells, &["f_hat", "f_check"], true);
                curves.extend(["f_hat", "f_check"]);
            }
            Estimator::CdfSplit => {
                per_tau(&mut cells, &["f_split"], true);
                curves.push("f_split");
            }
            Estimator::CdfLambda => {
                per_tau(&mut cells, &["f_lambda"], true);
                curves.push("f_lambda");
            }
            Estimator::Quantile => per_tau(&mut cells, &["q_hat", "q_check"], false),
            Estimator::QuantileSplit => per_tau(&mut cells, &["q_split"], false),
            Estimator::QuantileLambda => per_tau(&mut cells, &["q_lambda"], false),
            Estimator::EmpiricalBayes => {
                if design.kind == DesignKind::Binomial {
                    return Err(Error::BadSpec("empirical_bayes needs a homoskedastic design".into()));
                }
                risks.extend(["plugin", "shrink", "eb"]);
            }
        }
    }
    let grid = if curves.is_empty() {
        None
    } else {
        Some(exp.options.rmse_grid.points(truth)?)
    };
    Ok(Plan {
        cells,
        curves,
        risks,
        grid,
        split,
    })
}

struct RepOutput {
    cells: Vec<(f64, Option<f64>)>,
    curves: Vec<f64>,
    risks: Vec<f64>,
    fallback: bool,
}

fn mean_sq_error(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum::<f64>() / truth.len() as f64
}

fn run_replication(exp: &Experiment, plan: &Plan, truth: &dyn LatentTruth, rep: u64) -> Result<RepOutput> {
    let data = dgp::generate(&exp.design, rep)?;
    let (panel, sample): (Option<Panel>, NoisySample) = match data.data {
        DesignData::Panel(p) => {
            let s = empirical::reduce_panel(&p)?;
            (Some(p), s)
        }
        DesignData::Sample(s) => (None, s),
    };
    let opts = &exp.options;
    let needs_h = exp.estimators.iter().any(|e| e.needs_bandwidth());
    let choice = needs_h.then(|| analytic::select_bandwidth_or_fallback(&sample));
    let h = choice.map_or(f64::NAN, |c| c.h);

    let mut out = RepOutput {
        cells: Vec::with_capacity(plan.cells.len()),
        curves: Vec::with_capacity(plan.curves.len()),
        risks: Vec::with_capacity(plan.risks.len()),
        fallback: choice.is_some_and(|c| c.fallback),
    };
    let n = sample.n();
    let truth_curve: Option<Vec<f64>> = plan
        .grid
        .as_ref()
        .map(|g| g.points().iter().map(|&t| truth.cdf(t)).collect());

    for &est in &exp.estimators {
        match est {
            Estimator::Variance => {
                let p = panel.as_ref().expect("checked in plan");
                let v = moments::corrected_variance_with(p, opts.variance_divisor);
                out.cells.push((v.psi2_hat, Some(v.se_hat)));
                out.cells.push((v.psi2_check, Some(v.se_check)));
            }
            Estimator::Cdf => {
                for &tau in &exp.taus {
                    let theta = truth.quantile(tau);
                    let f = empirical::ecdf_at(sample.draws(), theta);
                    let g = ThetaGrid::new(vec![theta])?;
                    let c = analytic::corrected_cdf(&sample, &g, h)?;
                    out.cells.push((f, Some(empirical::ecdf_se(&[f], n)[0])));
                    out.cells.push((c.f_corrected[0], Some(c.se[0])));
                }
                let grid = plan.grid.as_ref().expect("curve grid");
                let tc = truth_curve.as_ref().expect("curve grid");
                let c = analytic::corrected_cdf(&sample, grid, h)?;
                out.curves.push(mean_sq_error(&c.f_hat, tc));
                out.curves.push(mean_sq_error(&c.f_corrected, tc));
            }
            Estimator::CdfSplit => {
                let p = panel.as_ref().expect("checked in plan");
                let split = plan.split.as_ref().expect("checked in plan");
                for &tau in &exp.taus {
                    let g = ThetaGrid::new(vec![truth.quantile(tau)])?;
                    let c = jackknife::split_panel_cdf(p, split, &g)?;
                    out.cells.push((c.f_corrected[0], Some(c.se[0])));
                }
                let c = jackknife::split_panel_cdf(p, split, plan.grid.as_ref().expect("curve grid"))?;
                out.curves.push(mean_sq_error(&c.f_corrected, truth_curve.as_ref().expect("curve grid")));
            }
            Estimator::CdfLambda => {
                for &tau in &exp.taus {
                    let g = ThetaGrid::new(vec![truth.quantile(tau)])?;
                    let c = jackknife::lambda_cdf(&sample, &g, opts.lambda)?;
                    out.cells.push((c.f_corrected[0], Some(c.se[0])));
                }
                let c = jackknife::lambda_cdf(&sample, plan.grid.as_ref().expect("curve grid"), opts.lambda)?;
                out.curves.push(mean_sq_error(&c.f_corrected, truth_curve.as_ref().expect("curve grid")));
            }
            Estimator::Quantile => {
                for &tau in &exp.taus {
                    let q = analytic::corrected_quantile(&sample, tau, h)?;
                    out.cells.push((q.q_naive, None));
                    out.cells.push((q.q_corrected, None));
                }
            }
            Estimator::QuantileSplit => {
                let p = panel.as_ref().expect("checked in plan");
                let split = plan.split.as_ref().expect("checked in plan");
                for &tau in &exp.taus {
                    out.cells.push((jackknife::split_panel_quantile(p, split, tau)?.q_corrected, None));
                }
            }
            Estimator::QuantileLambda => {
                for &tau in &exp.taus {
                    out.cells.push((jackknife::lambda_quantile(&sample, tau, opts.lambda)?.q_corrected, None));
                }
            }
            Estimator::EmpiricalBayes => {
                let d = &exp.design;
                let shrink = comparators::parametric_shrink(&sample, d.sigma2, d.psi2, d.eta)?;
                let h_eb = comparators::silverman_bandwidth(sample.draws());
                let eb = comparators::empirical_bayes(&sample, d.sigma2, h_eb)?;
                out.risks.push(mean_sq_error(sample.draws(), &data.theta));
                out.risks.push(mean_sq_error(&shrink, &data.theta));
                out.risks.push(mean_sq_error(&eb.estimates, &data.theta));
            }
        }
    }
    Ok(out)
}

fn aggregate_cell(key: &CellKey, values: &[(f64, Option<f64>)], crit: f64) -> McRow {
    let r = values.len() as f64;
    let est: Vec<f64> = values.iter().map(|v| v.0).collect();
    let mean = stats::mean(&est);
    let std = stats::sample_std(&est);
    let sq: Vec<f64> = est.iter().map(|e| (e - key.truth) * (e - key.truth)).collect();
    let mse = stats::mean(&sq);
    let rmse = mse.sqrt();
    let rmse_se = if rmse > 0.0 {
        stats::sample_std(&sq) / r.sqrt() / (2.0 * rmse)
    } else {
        0.0
    };
    let std_se = std / (2.0 * (r - 1.0)).sqrt();

    let (se_over_std, size, ratio_se, size_se) = if key.has_se {
        let ses: Vec<f64> = values.iter().map(|v| v.1.unwrap_or(f64::NAN)).collect();
        let mean_se = stats::mean(&ses);
        let ratio = mean_se / std;
        let rel = 1.0 / (2.0 * (r - 1.0)) + stats::sample_var(&ses) / (r * mean_se * mean_se);
        let k = values
            .iter()
            .filter(|v| moments::rejects(v.0, v.1.unwrap_or(0.0), key.truth, crit))
            .count() as f64;
        let p = (k + 0.5) / (r + 1.0);
        (Some(ratio), Some(k / r), Some(ratio.abs() * rel.sqrt()), Some((p * (1.0 - p) / r).sqrt()))
    } else {
        (None, None, None, None)
    };
    McRow {
        estimator: key.estimator.to_string(),
        target: key.tau.map_or_else(|| "psi2".to_string(), |t| format!("tau={t}")),
        tau: key.tau,
        truth: key.truth,
        mean,
        bias: mean - key.truth,
        std,
        se_over_std,
        size_5pct: size,
        rmse,
        mc_se: CellSe {
            bias: std / r.sqrt(),
            std: std_se,
            se_over_std: ratio_se,
            size: size_se,
            rmse: rmse_se,
        },
    }
}

/// Runs every replication of `exp` and aggregates the results.
///
/// A replication whose estimators fail is excluded and counted; the report
/// keeps the first few error messages.
pub fn run_experiment(exp: &Experiment) -> Result<McReport> {
    let truth = exp.design.truth();
    let plan = plan(exp, truth.as_ref())?;
    let outputs: Vec<Result<RepOutput>> = (0..exp.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(exp, &plan, truth.as_ref(), rep))
        .collect();

    let mut ok = Vec::with_capacity(outputs.len());
    let mut messages = Vec::new();
    let mut excluded = 0;
    for (rep, out) in outputs.into_iter().enumerate() {
        match out {
            Ok(o) => ok.push(o),
            Err(e) => {
                excluded += 1;
                if messages.len() < 10 {
                    messages.push(format!("replication {rep}: {e}"));
                }
            }
        }
    }
    if excluded > 0 {
        warn!("{excluded} of {} replications excluded", exp.replications);
    }
    if ok.len() < 2 {
        return Err(Error::TooFewReplications { min: 2, got: ok.len() });
    }

    let crit = normal::quantile(1.0 - 0.5 * exp.options.level);
    let rows = plan
        .cells
        .iter()
        .enumerate()
        .map(|(k, key)| {
            let values: Vec<(f64, Option<f64>)> = ok.iter().map(|o| o.cells[k]).collect();
            aggregate_cell(key, &values, crit)
        })
        .collect();
    let r = ok.len() as f64;
    let curves = plan
        .curves
        .iter()
        .enumerate()
        .map(|(k, &name)| {
            let mse: Vec<f64> = ok.iter().map(|o| o.curves[k]).collect();
            let rmse = stats::mean(&mse).sqrt();
            let rmse_se = if rmse > 0.0 {
                stats::sample_std(&mse) / r.sqrt() / (2.0 * rmse)
            } else {
                0.0
            };
            CurveRow {
                estimator: name.to_string(),
                rmse,
                rmse_se,
            }
        })
        .collect();
    let theta_risk = plan
        .risks
        .iter()
        .enumerate()
        .map(|(k, &name)| {
            let mse: Vec<f64> = ok.iter().map(|o| o.risks[k]).collect();
            let m = stats::mean(&mse);
            RiskRow {
                estimator: name.to_string(),
                mse: m,
                mse_se: stats::sample_std(&mse) / r.sqrt(),
                rmse: m.sqrt(),
            }
        })
        .collect();

    Ok(McReport {
        schema: 1,
        design: exp.design,
        replications: exp.replications,
        completed: ok.len(),
        excluded,
        exclusion_messages: messages,
        bandwidth_fallbacks: ok.iter().filter(|o| o.fallback).count(),
        rows,
        curves,
        theta_risk,
    })
}

/// RMSE of the plug-in and the chosen corrected CDF over `grid`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmsePair {
    pub naive: f64,
    pub corrected: f64,
}

/// RMSE of the plug-in CDF and of `estimator`'s correction, which must be
/// one of the CDF estimators.
pub fn rmse_curve(design: &DesignSpec, estimator: Estimator, grid: RmseGrid, replications: usize) -> Result<RmsePair> {
    let corrected = match estimator {
        Estimator::Cdf => "f_check",
        Estimator::CdfSplit => "f_split",
        Estimator::CdfLambda => "f_lambda",
        other => return Err(Error::BadParams(format!("{other:?} does not estimate a CDF"))),
    };
    let mut estimators = vec![estimator];
    if estimator != Estimator::Cdf {
        estimators.push(Estimator::Cdf);
    }
    let report = run_experiment(&Experiment {
        design: *design,
        estimators,
        taus: Vec::new(),
        replications,
        options: RunOptions {
            rmse_grid: grid,
            ..RunOptions::default()
        },
    })?;
    Ok(RmsePair {
        naive: report.curve("f_hat").expect("plug-in curve").rmse,
        corrected: report.curve(corrected).expect("corrected curve").rmse,
    })
}

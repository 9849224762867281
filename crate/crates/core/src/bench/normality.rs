use rayon::prelude::*;
use serde::Serialize;

use super::ks::ks_normal;
use crate::error::{invalid, Error, Result};
use crate::estimators::{Bandwidths, FittedSample, Method};
use crate::inference::{plugin_variance, theoretical_bias, AsymptoticVariance, VarianceComponents};
use crate::kernel::Kernel;
use crate::simulate::{
    censoring_survival, covariate_density, derive_seed, generate, true_conditional_density, true_derivatives,
    SimConfig, DEFAULT_RHO,
};

/// Sampling-distribution study of one estimator at a fixed `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalityConfig {
    pub n: usize,
    pub cp: f64,
    pub rho: f64,
    pub trials: usize,
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub b: f64,
    pub method: Method,
    pub seed: u64,
    /// Level of the plug-in interval whose coverage is reported.
    pub level: f64,
    /// Require `n h⁵ b < 0.1` and `n h b⁵ < 0.1`, so the estimate can be
    /// standardized around the truth without a bias correction.
    pub enforce_undersmoothing: bool,
}

impl NormalityConfig {
    pub fn new(n: usize, trials: usize, x: f64, y: f64, h: f64, b: f64, method: Method, seed: u64) -> Self {
        Self {
            n,
            cp: 0.3,
            rho: DEFAULT_RHO,
            trials,
            x,
            y,
            h,
            b,
            method,
            seed,
            level: 0.95,
            enforce_undersmoothing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("normality study needs at least one trial"));
        }
        let bw = Bandwidths::new(self.h, self.b)?;
        let mut sim = SimConfig::new(self.n, self.cp, 0);
        sim.rho = self.rho;
        sim.validate()?;
        if !(self.y > 0.0) || !self.x.is_finite() || !self.y.is_finite() {
            return Err(invalid(format!("evaluation point ({}, {}) needs y > 0", self.x, self.y)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid(format!("confidence level must lie in (0, 1), got {}", self.level)));
        }
        if self.method == Method::K {
            return Err(invalid("normality study supports the NW and LL estimators"));
        }
        if self.enforce_undersmoothing {
            let n = self.n as f64;
            let (h, b) = (bw.h, bw.b);
            if n * h.powi(5) * b >= 0.1 {
                return Err(invalid(format!(
                    "n h^5 b = {:.4} >= 0.1; need h < {:.4} at this n and b",
                    n * h.powi(5) * b,
                    (0.1 / (n * b)).powf(0.2)
                )));
            }
            if n * h * b.powi(5) >= 0.1 {
                return Err(invalid(format!(
                    "n h b^5 = {:.4} >= 0.1; need b < {:.4} at this n and h",
                    n * h * b.powi(5),
                    (0.1 / (n * h)).powf(0.2)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub method: Method,
    pub x: f64,
    pub y: f64,
    pub n: usize,
    pub cp: f64,
    pub h: f64,
    pub b: f64,
    pub trials: usize,
    pub excluded: usize,
    pub standardized: Vec<f64>,
    pub ks_stat: f64,
    pub ks_p: f64,
    pub empirical_bias: f64,
    pub predicted_bias_nw: f64,
    pub predicted_bias_ll: f64,
    pub level: f64,
    /// Fraction of trials whose plug-in interval contains the truth.
    pub coverage: f64,
}

/// Standardizes estimates by the true value and asymptotic standard
/// deviation and tests the result against `N(0, 1)`. Missing estimates are
/// dropped and counted.
pub fn standardize(estimates: &[Option<f64>], truth: f64, sd: f64) -> Result<(Vec<f64>, usize, f64, f64)> {
    if estimates.is_empty() {
        return Err(invalid("no estimates to standardize"));
    }
    if !(sd > 0.0) {
        return Err(invalid(format!("standard deviation must be positive, got {sd}")));
    }
    let standardized: Vec<f64> = estimates.iter().flatten().map(|f| (f - truth) / sd).collect();
    let excluded = estimates.len() - standardized.len();
    if standardized.is_empty() {
        return Err(invalid("every estimate was missing"));
    }
    let (d, p) = ks_normal(&standardized);
    Ok((standardized, excluded, d, p))
}

struct TrialOutcome {
    estimate: Option<f64>,
    covered: Option<bool>,
}

pub fn run_normality(cfg: &NormalityConfig) -> Result<NormalityReport> {
    cfg.validate()?;
    let kernel = Kernel::epanechnikov();
    let moments = kernel.moments();
    let bw = Bandwidths::new(cfg.h, cfg.b)?;
    let mut sim = SimConfig::new(cfg.n, cfg.cp, 0);
    sim.rho = cfg.rho;
    let mu = sim.censoring_location()?;

    let truth = true_conditional_density(cfg.y, cfg.x);
    let exact = AsymptoticVariance::from_components(
        VarianceComponents {
            f_hat: truth,
            h_hat: censoring_survival(cfg.y, mu),
            fx_hat: covariate_density(cfg.x),
        },
        moments.get(0, 2),
        moments.get(0, 2),
        cfg.n,
        bw,
    )?;
    let sd = exact.scaled.sqrt();

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|l| {
            let mut trial = sim;
            trial.seed = derive_seed(cfg.seed, l as u64);
            let data = generate(&trial)?;
            let fitted = FittedSample::new(data.observations)?;
            let estimate = fitted.estimate(cfg.method, cfg.x, cfg.y, bw, &kernel, &kernel)?.f;
            let covered = match (estimate, plugin_variance(&fitted, cfg.x, cfg.y, bw, &kernel, &kernel)) {
                (Some(f), Ok(av)) => {
                    let (lo, hi) = crate::inference::confidence_interval(f, &av, cfg.level)?;
                    Some(lo <= truth && truth <= hi)
                }
                (_, Err(Error::Domain(_))) | (None, _) => None,
                (_, Err(e)) => return Err(e),
            };
            Ok(TrialOutcome { estimate, covered })
        })
        .collect::<Result<_>>()?;

    let estimates: Vec<Option<f64>> = outcomes.iter().map(|o| o.estimate).collect();
    let (standardized, excluded, ks_stat, ks_p) = standardize(&estimates, truth, sd)?;
    let used: Vec<f64> = estimates.iter().flatten().copied().collect();
    let empirical_bias = used.iter().map(|f| f - truth).sum::<f64>() / used.len() as f64;

    let intervals: Vec<bool> = outcomes.iter().filter_map(|o| o.covered).collect();
    let coverage = if intervals.is_empty() {
        f64::NAN
    } else {
        intervals.iter().filter(|&&c| c).count() as f64 / intervals.len() as f64
    };

    let model = true_derivatives(cfg.y, cfg.x)?;
    Ok(NormalityReport {
        method: cfg.method,
        x: cfg.x,
        y: cfg.y,
        n: cfg.n,
        cp: cfg.cp,
        h: cfg.h,
        b: cfg.b,
        trials: cfg.trials,
        excluded,
        standardized,
        ks_stat,
        ks_p,
        empirical_bias,
        predicted_bias_nw: theoretical_bias(&model, cfg.h, cfg.b, &moments, &moments, Method::Nw)?,
        predicted_bias_ll: theoretical_bias(&model, cfg.h, cfg.b, &moments, &moments, Method::Ll)?,
        level: cfg.level,
        coverage,
    })
}

//! Synthetic right-censored data with serially dependent covariates.
//!
//! Covariates follow a stationary Gaussian AR(1) with marginal `N(1, 0.25)`,
//! responses are lognormal given the covariate (`log Y = X + ε`, `ε ~ N(0,1)`)
//! and censoring times are iid lognormal with log-scale `N(μ, 0.36)`, with `μ`
//! calibrated to a target censoring fraction.
//!
//! Randomness comes from ChaCha20 keyed by the seed, with one stream per
//! driving sequence, so the covariate, noise and censoring draws of a
//! dataset never depend on each other or on the censoring target.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{invalid, Result};
use crate::inference::BiasModel;
use crate::normal;
use crate::survival::CensoredObservation;

pub const DEFAULT_RHO: f64 = 0.3;
/// Stationary mean and standard deviation of the covariate.
pub const X_MEAN: f64 = 1.0;
pub const X_SD: f64 = 0.5;
/// Standard deviation of `log C`.
pub const CENSOR_LOG_SD: f64 = 0.6;

const STREAM_COVARIATE: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_CENSORING: u64 = 3;

/// A standard normal source driven by inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha20Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        normal::quantile(self.uniform())
    }
}

/// Mixes a base seed with an index (trial number, replicate, ...) into an
/// unrelated seed. SplitMix64 finalizer.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub rho: f64,
    pub cp: f64,
    pub seed: u64,
    /// Overrides the calibrated censoring location when set.
    pub mu_c: Option<f64>,
}

impl SimConfig {
    pub fn new(n: usize, cp: f64, seed: u64) -> Self {
        Self {
            n,
            rho: DEFAULT_RHO,
            cp,
            seed,
            mu_c: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(invalid(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.cp > 0.0 && self.cp < 1.0) {
            return Err(invalid(format!("cp must lie in (0, 1), got {}", self.cp)));
        }
        if let Some(mu) = self.mu_c {
            if !mu.is_finite() {
                return Err(invalid("censoring location must be finite"));
            }
        }
        Ok(())
    }

    pub fn censoring_location(&self) -> Result<f64> {
        match self.mu_c {
            Some(mu) => Ok(mu),
            None => mu_for_cp(self.cp),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    pub y: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub observations: Vec<CensoredObservation>,
    pub latent: Option<Latent>,
    pub realized_cp: f64,
}

/// Censoring location `μ` such that `P(Y > C) = cp`. Since
/// `log Y − log C ~ N(1 − μ, 1.25 + 0.36)`, `μ = 1 − √1.61 · Φ⁻¹(cp)`.
pub fn mu_for_cp(cp: f64) -> Result<f64> {
    if !(cp > 0.0 && cp < 1.0) {
        return Err(invalid(format!("cp must lie in (0, 1), got {cp}")));
    }
    Ok(X_MEAN - log_gap_sd() * normal::quantile(cp))
}

fn log_gap_sd() -> f64 {
    (X_SD * X_SD + 1.0 + CENSOR_LOG_SD * CENSOR_LOG_SD).sqrt()
}

/// Expected censoring fraction for a censoring location `mu`.
pub fn cp_for_mu(mu: f64) -> f64 {
    normal::cdf((X_MEAN - mu) / log_gap_sd())
}

pub fn generate(cfg: &SimConfig) -> Result<SimDataset> {
    cfg.validate()?;
    let mu = cfg.censoring_location()?;
    let n = cfg.n;
    let rho = cfg.rho;

    let mut cov = NormalStream::new(cfg.seed, STREAM_COVARIATE);
    let mut noise = NormalStream::new(cfg.seed, STREAM_NOISE);
    let mut cens = NormalStream::new(cfg.seed, STREAM_CENSORING);

    let innovation_mean = X_MEAN * (1.0 - rho);
    let innovation_sd = X_SD * (1.0 - rho * rho).sqrt();

    let mut observations = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    let mut censored = 0usize;
    let mut x = 0.0;
    for i in 0..n {
        x = if i == 0 {
            X_MEAN + X_SD * cov.standard_normal()
        } else {
            rho * x + innovation_mean + innovation_sd * cov.standard_normal()
        };
        let y = (x + noise.standard_normal()).exp();
        let c = (mu + CENSOR_LOG_SD * cens.standard_normal()).exp();
        let uncensored = y <= c;
        if !uncensored {
            censored += 1;
        }
        observations.push(CensoredObservation::new(x, y.min(c), uncensored));
        ys.push(y);
        cs.push(c);
    }
    Ok(SimDataset {
        observations,
        latent: Some(Latent { y: ys, c: cs }),
        realized_cp: censored as f64 / n as f64,
    })
}

/// Lognormal conditional density of `Y` given `X = x`.
pub fn true_conditional_density(y: f64, x: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    normal::pdf(y.ln() - x) / y
}

/// Stationary covariate density, `N(1, 0.25)`.
pub fn covariate_density(x: f64) -> f64 {
    normal::pdf((x - X_MEAN) / X_SD) / X_SD
}

/// True censoring survival `H(t) = P(C > t)` for censoring location `mu`.
pub fn censoring_survival(t: f64, mu: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    normal::sf((t.ln() - mu) / CENSOR_LOG_SD)
}

/// Analytic partial derivatives of the conditional density and the
/// covariate density at `(y, x)`, with `z = log y − x`:
///
/// * `f^(1,0) = z φ(z) / y`
/// * `f^(2,0) = (z² − 1) φ(z) / y`
/// * `f^(0,2) = (z² + 3z + 1) φ(z) / y³`
pub fn true_derivatives(y: f64, x: f64) -> Result<BiasModel> {
    if !(y > 0.0) {
        return Err(crate::error::Error::Domain(format!("derivatives need y > 0, got {y}")));
    }
    let z = y.ln() - x;
    let phi = normal::pdf(z);
    let fx = covariate_density(x);
    Ok(BiasModel {
        f10: z * phi / y,
        f20: (z * z - 1.0) * phi / y,
        f02: (z * z + 3.0 * z + 1.0) * phi / (y * y * y),
        fx,
        dfx: -(x - X_MEAN) / (X_SD * X_SD) * fx,
    })
}

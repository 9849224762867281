//! Kernel-weighted conditional density estimators for censored responses.
//!
//! All three estimators regress the synthetic response
//! `wᵢ Λ_b(Tᵢ − y)`, with `wᵢ = δᵢ / Ĥ(Tᵢ⁻)`, on the covariate using
//! `K_h(Xᵢ − x)` as local weights:
//!
//! * [`Method::Nw`] fits a local constant (Nadaraya–Watson),
//! * [`Method::Ll`] fits a local line and also returns the slope in `x`,
//! * [`Method::K`] is the local constant fit with a box kernel in the
//!   response direction, i.e. a symmetric difference quotient of the
//!   weighted conditional distribution function with half-width `b`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::Kernel;
use crate::survival::{kaplan_meier_censoring, km_weights_with, CensoredObservation, StepSurvival};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidths {
    pub h: f64,
    pub b: f64,
}

impl Bandwidths {
    pub fn new(h: f64, b: f64) -> Result<Self> {
        let bw = Self { h, b };
        bw.validate()?;
        Ok(bw)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(invalid(format!("bandwidth h must be positive and finite, got {}", self.h)));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(invalid(format!("bandwidth b must be positive and finite, got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "K")]
    K,
    #[serde(rename = "NW")]
    Nw,
    #[serde(rename = "LL")]
    Ll,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::K, Method::Nw, Method::Ll];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::K => "K",
            Method::Nw => "NW",
            Method::Ll => "LL",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nw" => Ok(Method::Nw),
            "ll" => Ok(Method::Ll),
            "k" => Ok(Method::K),
            other => Err(invalid(format!("unknown method '{other}' (expected nw, ll or k)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitDiagnostics {
    /// Observations with positive covariate-kernel weight.
    pub effective_points: usize,
    /// Uncensored observations whose weight was zeroed because `Ĥ(T⁻) = 0`.
    pub degenerate_weights: usize,
    /// The local linear system was singular and the local constant value
    /// was returned instead.
    pub fallback_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFit {
    /// `None` when the covariate window is empty.
    pub f: Option<f64>,
    /// Slope in `x`; local linear fits without fallback only.
    pub df_dx: Option<f64>,
    pub diagnostics: FitDiagnostics,
}

impl LocalFit {
    pub fn is_missing(&self) -> bool {
        self.f.is_none()
    }
}

/// Observations inside the covariate window around `x`, with their kernel
/// weights precomputed. Reusable across response points and bandwidths `b`.
#[derive(Debug, Clone)]
pub struct LocalWindow {
    n: usize,
    h: f64,
    dx: Vec<f64>,
    kx: Vec<f64>,
    t: Vec<f64>,
    w: Vec<f64>,
    degenerate: usize,
}

impl LocalWindow {
    pub fn new(
        sample: &[CensoredObservation],
        weights: &[f64],
        x: f64,
        h: f64,
        kernel_x: &Kernel,
    ) -> Result<Self> {
        if sample.len() != weights.len() {
            return Err(invalid(format!(
                "sample has {} records but {} weights were supplied",
                sample.len(),
                weights.len()
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("bandwidth h must be positive and finite, got {h}")));
        }
        let mut win = Self {
            n: sample.len(),
            h,
            dx: Vec::new(),
            kx: Vec::new(),
            t: Vec::new(),
            w: Vec::new(),
            degenerate: 0,
        };
        for (obs, &w) in sample.iter().zip(weights) {
            let d = obs.x - x;
            let k = kernel_x.scaled(d, h);
            if k > 0.0 {
                win.dx.push(d);
                win.kx.push(k);
                win.t.push(obs.t);
                win.w.push(w);
            }
        }
        Ok(win)
    }

    pub(crate) fn with_degenerate(mut self, degenerate: usize) -> Self {
        self.degenerate = degenerate;
        self
    }

    pub fn effective_points(&self) -> usize {
        self.kx.len()
    }

    fn diagnostics(&self) -> FitDiagnostics {
        FitDiagnostics {
            effective_points: self.kx.len(),
            degenerate_weights: self.degenerate,
            fallback_used: false,
        }
    }

    fn missing(&self) -> LocalFit {
        LocalFit {
            f: None,
            df_dx: None,
            diagnostics: self.diagnostics(),
        }
    }

    #[inline]
    fn response(&self, i: usize, y: f64, b: f64, kernel_y: &Kernel) -> f64 {
        let w = self.w[i];
        if w == 0.0 {
            0.0
        } else {
            w * kernel_y.scaled(self.t[i] - y, b)
        }
    }

    /// Local constant estimate at response value `y`.
    pub fn nw(&self, y: f64, b: f64, kernel_y: &Kernel) -> LocalFit {
        let n = self.n as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.kx.len() {
            num += self.kx[i] * self.response(i, y, b, kernel_y);
            den += self.kx[i];
        }
        if self.kx.is_empty() || den <= 0.0 {
            return self.missing();
        }
        LocalFit {
            f: Some((num / n) / (den / n)),
            df_dx: None,
            diagnostics: self.diagnostics(),
        }
    }

    /// Local linear estimate of `(f, ∂f/∂x)` at response value `y`. Falls back
    /// to [`LocalWindow::nw`] when the local design is numerically singular.
    pub fn ll(&self, y: f64, b: f64, kernel_y: &Kernel) -> LocalFit {
        if self.kx.is_empty() {
            return self.missing();
        }
        let n = self.n as f64;
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.kx.len() {
            let u = self.dx[i] / self.h;
            let k = self.kx[i];
            let r = self.response(i, y, b, kernel_y);
            s0 += k;
            s1 += u * k;
            s2 += u * u * k;
            t0 += k * r;
            t1 += u * k * r;
        }
        let (s0, s1, s2, t0, t1) = (s0 / n, s1 / n, s2 / n, t0 / n, t1 / n);
        let det = s0 * s2 - s1 * s1;
        if det.abs() < 1e-12 * f64::max(1.0, s0 * s2) {
            let mut fit = self.nw(y, b, kernel_y);
            fit.diagnostics.fallback_used = true;
            return fit;
        }
        let intercept = (s2 * t0 - s1 * t1) / det;
        let slope = (s0 * t1 - s1 * t0) / det;
        LocalFit {
            f: Some(intercept),
            df_dx: Some(slope / self.h),
            diagnostics: self.diagnostics(),
        }
    }

    /// Single-smoothing baseline: local constant fit with a box kernel in `y`.
    pub fn k(&self, y: f64, b: f64) -> LocalFit {
        self.nw(y, b, &Kernel::uniform_box())
    }

    pub fn estimate(&self, method: Method, y: f64, b: f64, kernel_y: &Kernel) -> LocalFit {
        match method {
            Method::Nw => self.nw(y, b, kernel_y),
            Method::Ll => self.ll(y, b, kernel_y),
            Method::K => self.k(y, b),
        }
    }
}

/// A censored sample with its Kaplan–Meier censoring curve and weights
/// computed once.
#[derive(Debug, Clone)]
pub struct FittedSample {
    sample: Vec<CensoredObservation>,
    survival: StepSurvival,
    weights: Vec<f64>,
    degenerate: usize,
}

impl FittedSample {
    pub fn new(sample: Vec<CensoredObservation>) -> Result<Self> {
        let survival = kaplan_meier_censoring(&sample)?;
        let w = km_weights_with(&sample, &survival);
        Ok(Self {
            sample,
            survival,
            weights: w.weights,
            degenerate: w.degenerate,
        })
    }

    pub fn sample(&self) -> &[CensoredObservation] {
        &self.sample
    }

    pub fn survival(&self) -> &StepSurvival {
        &self.survival
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degenerate_weights(&self) -> usize {
        self.degenerate
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    pub fn window(&self, x: f64, h: f64, kernel_x: &Kernel) -> Result<LocalWindow> {
        Ok(LocalWindow::new(&self.sample, &self.weights, x, h, kernel_x)?.with_degenerate(self.degenerate))
    }

    pub fn estimate(
        &self,
        method: Method,
        x: f64,
        y: f64,
        bw: Bandwidths,
        kernel_x: &Kernel,
        kernel_y: &Kernel,
    ) -> Result<LocalFit> {
        bw.validate()?;
        Ok(self.window(x, bw.h, kernel_x)?.estimate(method, y, bw.b, kernel_y))
    }

    /// Evaluates `method` at every point of `y_grid` for fixed `x`.
    pub fn curve(
        &self,
        method: Method,
        x: f64,
        y_grid: &[f64],
        bw: Bandwidths,
        kernel_x: &Kernel,
        kernel_y: &Kernel,
    ) -> Result<Vec<LocalFit>> {
        bw.validate()?;
        if let Some(bad) = y_grid.iter().find(|y| !y.is_finite()) {
            return Err(invalid(format!("y grid contains non-finite value {bad}")));
        }
        let win = self.window(x, bw.h, kernel_x)?;
        Ok(y_grid.iter().map(|&y| win.estimate(method, y, bw.b, kernel_y)).collect())
    }

    pub fn fx(&self, x: f64, h: f64, kernel_x: &Kernel) -> Result<f64> {
        fx_estimate(&self.sample, x, h, kernel_x)
    }
}

fn window_for(
    sample: &[CensoredObservation],
    weights: &[f64],
    x: f64,
    bw: Bandwidths,
    kernel_x: &Kernel,
) -> Result<LocalWindow> {
    bw.validate()?;
    LocalWindow::new(sample, weights, x, bw.h, kernel_x)
}

pub fn nw_estimate(
    sample: &[CensoredObservation],
    weights: &[f64],
    x: f64,
    y: f64,
    bw: Bandwidths,
    kernel_x: &Kernel,
    kernel_y: &Kernel,
) -> Result<LocalFit> {
    Ok(window_for(sample, weights, x, bw, kernel_x)?.nw(y, bw.b, kernel_y))
}

pub fn ll_estimate(
    sample: &[CensoredObservation],
    weights: &[f64],
    x: f64,
    y: f64,
    bw: Bandwidths,
    kernel_x: &Kernel,
    kernel_y: &Kernel,
) -> Result<LocalFit> {
    Ok(window_for(sample, weights, x, bw, kernel_x)?.ll(y, bw.b, kernel_y))
}

pub fn k_estimate(
    sample: &[CensoredObservation],
    weights: &[f64],
    x: f64,
    y: f64,
    bw: Bandwidths,
    kernel_x: &Kernel,
) -> Result<LocalFit> {
    Ok(window_for(sample, weights, x, bw, kernel_x)?.k(y, bw.b))
}

/// Kernel estimate of the covariate density, `(1/nh) Σ K((Xᵢ − x)/h)`.
pub fn fx_estimate(sample: &[CensoredObservation], x: f64, h: f64, kernel_x: &Kernel) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("bandwidth h must be positive and finite, got {h}")));
    }
    if sample.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = sample.iter().map(|o| kernel_x.eval((o.x - x) / h)).sum();
    Ok(total / (sample.len() as f64 * h))
}

/// Convenience wrapper: computes `Ĥ` and the weights once, then evaluates
/// the curve.
pub fn estimate_curve(
    sample: &[CensoredObservation],
    x: f64,
    y_grid: &[f64],
    bw: Bandwidths,
    kernel_x: &Kernel,
    kernel_y: &Kernel,
    method: Method,
) -> Result<Vec<LocalFit>> {
    FittedSample::new(sample.to_vec())?.curve(method, x, y_grid, bw, kernel_x, kernel_y)
}

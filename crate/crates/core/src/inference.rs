//! Plug-in asymptotic variance, normal-approximation confidence intervals
//! and leading-order bias of the local constant and local linear fits.

use crate::error::{invalid, Error, Result};
use crate::estimators::{Bandwidths, FittedSample, LocalFit, Method};
use crate::kernel::{Kernel, MomentFunctionals};
use crate::normal;

/// `σ²(y|x) = f(y|x) ∇₀₂ / (H(y) f_X(x))` and the finite-sample variance
/// `σ² Δ₀₂ / (n h b)` built from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticVariance {
    pub sigma2: f64,
    pub scaled: f64,
    pub components: VarianceComponents,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceComponents {
    pub f_hat: f64,
    pub h_hat: f64,
    pub fx_hat: f64,
}

impl AsymptoticVariance {
    pub fn from_components(
        components: VarianceComponents,
        nabla02: f64,
        delta02: f64,
        n: usize,
        bw: Bandwidths,
    ) -> Result<Self> {
        bw.validate()?;
        if n == 0 {
            return Err(invalid("sample size must be positive"));
        }
        if !(components.h_hat > 0.0) || !(components.fx_hat > 0.0) {
            return Err(Error::Domain(format!(
                "variance needs H(y) > 0 and f_X(x) > 0, got H = {}, f_X = {}",
                components.h_hat, components.fx_hat
            )));
        }
        let sigma2 = components.f_hat * nabla02 / (components.h_hat * components.fx_hat);
        Ok(Self {
            sigma2,
            scaled: sigma2 * delta02 / (n as f64 * bw.h * bw.b),
            components,
        })
    }
}

/// Estimates the asymptotic variance at `(x, y)` by substituting the local
/// constant fit, the Kaplan–Meier censoring survival and the kernel estimate
/// of the covariate density.
pub fn plugin_variance(
    fitted: &FittedSample,
    x: f64,
    y: f64,
    bw: Bandwidths,
    kernel_x: &Kernel,
    kernel_y: &Kernel,
) -> Result<AsymptoticVariance> {
    bw.validate()?;
    let last = fitted.survival().last_time();
    if !(y < last) {
        return Err(Error::Domain(format!(
            "y = {y} is not below the largest observed time {last}"
        )));
    }
    let fit = fitted.estimate(Method::Nw, x, y, bw, kernel_x, kernel_y)?;
    let f_hat = fit
        .f
        .ok_or_else(|| Error::Domain(format!("no covariate mass within h = {} of x = {x}", bw.h)))?;
    let components = VarianceComponents {
        f_hat,
        h_hat: fitted.survival().eval(y),
        fx_hat: fitted.fx(x, bw.h, kernel_x)?,
    };
    AsymptoticVariance::from_components(
        components,
        kernel_y.moment(0, 2)?,
        kernel_x.moment(0, 2)?,
        fitted.len(),
        bw,
    )
}

/// Symmetric interval `f ± z_{(1+level)/2} √scaled`.
pub fn confidence_interval(center: f64, av: &AsymptoticVariance, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if !(av.scaled >= 0.0) {
        return Err(invalid(format!("scaled variance must be nonnegative, got {}", av.scaled)));
    }
    let half = normal::quantile(0.5 * (1.0 + level)) * av.scaled.sqrt();
    Ok((center - half, center + half))
}

/// Interval around a fitted value; fails if the fit is missing.
pub fn fit_interval(fit: &LocalFit, av: &AsymptoticVariance, level: f64) -> Result<(f64, f64)> {
    let f = fit
        .f
        .ok_or_else(|| Error::Domain("cannot build an interval around a missing estimate".into()))?;
    confidence_interval(f, av, level)
}

/// Derivatives of the true conditional density and covariate density at a
/// point, as they enter the leading bias terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasModel {
    pub f20: f64,
    pub f10: f64,
    pub f02: f64,
    pub fx: f64,
    pub dfx: f64,
}

/// Leading-order bias:
///
/// * NW: `h²/2 Δ₂₁ [f⁽²'⁰⁾ + 2 f_X'/f_X f⁽¹'⁰⁾] + b²/2 ∇₂₁ f⁽⁰'²⁾`
/// * LL: `h²/2 Δ₂₁ f⁽²'⁰⁾ + b²/2 ∇₂₁ f⁽⁰'²⁾`
///
/// `x_moments` holds `Δ` (covariate kernel), `y_moments` holds `∇`.
pub fn theoretical_bias(
    model: &BiasModel,
    h: f64,
    b: f64,
    x_moments: &MomentFunctionals,
    y_moments: &MomentFunctionals,
    method: Method,
) -> Result<f64> {
    let finite = [model.f20, model.f10, model.f02, model.fx, model.dfx, h, b];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(invalid("bias model and bandwidths must be finite"));
    }
    let y_term = 0.5 * b * b * y_moments.get(2, 1) * model.f02;
    let design = match method {
        Method::Ll => 0.0,
        Method::Nw => {
            if model.fx == 0.0 {
                return Err(Error::Domain("local constant bias needs f_X(x) > 0".into()));
            }
            2.0 * model.dfx / model.fx * model.f10
        }
        Method::K => return Err(invalid("no bias expansion is provided for the K estimator")),
    };
    Ok(0.5 * h * h * x_moments.get(2, 1) * (model.f20 + design) + y_term)
}

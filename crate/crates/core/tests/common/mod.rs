#![allow(dead_code)]

use censdens::simulate::NormalStream;
use censdens::CensoredObservation;

pub const EPA: fn(f64) -> f64 = |u| if u.abs() <= 1.0 { 0.75 * (1.0 - u * u) } else { 0.0 };
pub const BOX: fn(f64) -> f64 = |u| if u.abs() <= 1.0 { 0.5 } else { 0.0 };

/// Random censored sample with continuous covariates and times.
pub fn random_sample(rng: &mut NormalStream, n: usize, censor_prob: f64) -> Vec<CensoredObservation> {
    (0..n)
        .map(|_| {
            let x = 2.0 * rng.uniform();
            let t = (0.5 * x + 0.6 * rng.standard_normal()).exp();
            let uncensored = rng.uniform() >= censor_prob;
            CensoredObservation::new(x, t, uncensored)
        })
        .collect()
}

/// `δᵢ / Ĥ(Tᵢ⁻)` transcribed from the product-limit formula: the product of
/// `((n−j)/(n−j+1))^(1−δ₍ⱼ₎)` over order statistics strictly below `Tᵢ`.
/// Assumes distinct times.
pub fn brute_weights(sample: &[CensoredObservation]) -> Vec<f64> {
    let n = sample.len();
    let mut sorted: Vec<(f64, u8)> = sample.iter().map(|o| (o.t, o.delta)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    sample
        .iter()
        .map(|o| {
            if o.delta == 0 {
                return 0.0;
            }
            let mut h = 1.0;
            for (j, &(t, d)) in sorted.iter().enumerate() {
                let i = (j + 1) as f64;
                if t < o.t {
                    h *= ((n as f64 - i) / (n as f64 - i + 1.0)).powi(1 - d as i32);
                }
            }
            1.0 / h
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * f64::max(1.0, b.abs())
}

pub fn brute_nw(s: &[CensoredObservation], w: &[f64], x: f64, y: f64, h: f64, b: f64, lam: fn(f64) -> f64) -> f64 {
    let n = s.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..s.len() {
        let kx = EPA((s[i].x - x) / h) / h;
        num += kx * w[i] * lam((s[i].t - y) / b) / b;
        den += kx;
    }
    (num / n) / (den / n)
}

/// Weighted least squares `(XᵀWX)⁻¹ XᵀWT` with the 2×2 inverse written out.
pub fn brute_ll(s: &[CensoredObservation], w: &[f64], x: f64, y: f64, h: f64, b: f64) -> (f64, f64) {
    let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..s.len() {
        let d = s[i].x - x;
        let k = EPA(d / h) / h;
        let resp = w[i] * EPA((s[i].t - y) / b) / b;
        a11 += k;
        a12 += k * d;
        a22 += k * d * d;
        r1 += k * resp;
        r2 += k * d * resp;
    }
    let det = a11 * a22 - a12 * a12;
    ((a22 * r1 - a12 * r2) / det, (a11 * r2 - a12 * r1) / det)
}

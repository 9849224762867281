//! Kaplan–Meier estimate of the censoring survival function `H(t) = P(C > t)`
//! and the inverse-probability-of-censoring weights built from it.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One right-censored record: covariate `x`, observed time `t = min(Y, C)`
/// and `delta = 1` when the response was observed (`Y ≤ C`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredObservation {
    pub x: f64,
    pub t: f64,
    pub delta: u8,
}

impl CensoredObservation {
    pub fn new(x: f64, t: f64, uncensored: bool) -> Self {
        Self {
            x,
            t,
            delta: uncensored as u8,
        }
    }

    #[inline]
    pub fn uncensored(&self) -> bool {
        self.delta == 1
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() || !self.x.is_finite() {
            return Err(invalid(format!("non-finite observation (x={}, t={})", self.x, self.t)));
        }
        if self.delta > 1 {
            return Err(invalid(format!("delta must be 0 or 1, got {}", self.delta)));
        }
        Ok(())
    }
}

/// Right-continuous, nonincreasing step function that is 1 before the first
/// jump.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSurvival {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    n: usize,
}

/// Observed-time order used for order statistics: ascending `t`, and at tied
/// times uncensored records before censored ones.
pub(crate) fn order_statistics(sample: &[CensoredObservation]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sample.len()).collect();
    idx.sort_by(|&a, &b| {
        sample[a]
            .t
            .partial_cmp(&sample[b].t)
            .unwrap_or(Ordering::Equal)
            .then(sample[b].delta.cmp(&sample[a].delta))
    });
    idx
}

/// Kaplan–Meier estimator of the censoring survival function. Censored order
/// statistics are the events; the estimate is set to zero from the largest
/// observed time onward.
pub fn kaplan_meier_censoring(sample: &[CensoredObservation]) -> Result<StepSurvival> {
    if sample.is_empty() {
        return Err(invalid("Kaplan-Meier estimate needs a nonempty sample"));
    }
    for obs in sample {
        obs.validate()?;
    }
    let n = sample.len();
    let order = order_statistics(sample);
    let t_max = sample[order[n - 1]].t;

    let mut jump_times = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut current = 1.0;
    let mut rank = 0usize;
    while rank < n {
        let t = sample[order[rank]].t;
        if t >= t_max {
            break;
        }
        let mut changed = false;
        while rank < n && sample[order[rank]].t == t {
            // i = rank + 1 is the 1-based order index
            if !sample[order[rank]].uncensored() {
                let remaining = (n - rank - 1) as f64;
                current *= remaining / (remaining + 1.0);
                changed = true;
            }
            rank += 1;
        }
        if changed {
            jump_times.push(t);
            values.push(current);
        }
    }
    jump_times.push(t_max);
    values.push(0.0);

    Ok(StepSurvival {
        jump_times,
        values,
        n,
    })
}

impl StepSurvival {
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// Largest observed time; the estimate is zero from here on.
    pub fn last_time(&self) -> f64 {
        *self.jump_times.last().expect("at least the terminal jump")
    }

    /// `Ĥ(t)`, right-continuous.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Left limit `Ĥ(t⁻)`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }
}

/// Censoring weights `δᵢ / Ĥ(Tᵢ⁻)` plus the number of uncensored records
/// whose weight had to be zeroed because `Ĥ(Tᵢ⁻) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoringWeights {
    pub weights: Vec<f64>,
    pub degenerate: usize,
}

pub fn km_weights_with(sample: &[CensoredObservation], h: &StepSurvival) -> CensoringWeights {
    let mut degenerate = 0;
    let weights = sample
        .iter()
        .map(|obs| {
            if !obs.uncensored() {
                return 0.0;
            }
            let surv = h.eval_left(obs.t);
            if surv > 0.0 {
                1.0 / surv
            } else {
                degenerate += 1;
                0.0
            }
        })
        .collect();
    CensoringWeights {
        weights,
        degenerate,
    }
}

pub fn km_weights(sample: &[CensoredObservation]) -> Result<CensoringWeights> {
    let h = kaplan_meier_censoring(sample)?;
    Ok(km_weights_with(sample, &h))
}

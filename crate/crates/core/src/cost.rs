//! BPR volume-delay function, its antiderivative and its marginal cost.
//!
//! Travel time on a link with free-flow time `t0` and capacity `c`:
//!
//! ```text
//! t(v) = f_s * (1 + alpha * (v / c)^beta) * t0
//! ```
//!
//! The antiderivative feeds the user-equilibrium objective and the marginal
//! cost `d(v * t(v)) / dv` drives the system-optimum subproblem and the
//! demand-management ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Link;

/// Coefficients of the BPR curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BprParams {
    /// Scale factor `f_s`, never below one.
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_scale() -> f64 {
    1.15
}
fn default_alpha() -> f64 {
    0.18
}
fn default_beta() -> f64 {
    5.0
}

impl Default for BprParams {
    fn default() -> Self {
        BprParams {
            scale: default_scale(),
            alpha: default_alpha(),
            beta: default_beta(),
        }
    }
}

impl BprParams {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !self.scale.is_finite() || self.scale < 1.0 {
            errs.push(format!("bpr scale must be finite and >= 1, got {}", self.scale));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            errs.push(format!("bpr alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !self.beta.is_finite() || self.beta < 1.0 {
            errs.push(format!("bpr beta must be finite and >= 1, got {}", self.beta));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Travel time in minutes. Unchecked: callers guarantee `volume >= 0`.
    #[inline]
    pub fn time(&self, freeflow: f64, capacity: f64, volume: f64) -> f64 {
        let ratio = volume / capacity;
        self.scale * (1.0 + self.alpha * ratio.powf(self.beta)) * freeflow
    }

    /// Integral of [`BprParams::time`] from zero to `volume`, in vehicle-minutes.
    #[inline]
    pub fn integral(&self, freeflow: f64, capacity: f64, volume: f64) -> f64 {
        let ratio = volume / capacity;
        self.scale
            * freeflow
            * (volume + self.alpha * volume * ratio.powf(self.beta) / (self.beta + 1.0))
    }

    /// Marginal cost `d(v t(v))/dv` in minutes.
    #[inline]
    pub fn marginal(&self, freeflow: f64, capacity: f64, volume: f64) -> f64 {
        let ratio = volume / capacity;
        let power = ratio.powf(self.beta);
        self.scale * (1.0 + self.alpha * power) * freeflow
            + self.scale * self.alpha * self.beta * power * freeflow
    }
}

fn check_volume(volume: f64) -> Result<()> {
    if volume.is_finite() && volume >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "link volume must be finite and non-negative, got {volume}"
        )))
    }
}

/// BPR travel time of `link` carrying `volume` vehicles/hour.
pub fn bpr_time(link: &Link, volume: f64, params: &BprParams) -> Result<f64> {
    check_volume(volume)?;
    Ok(params.time(link.freeflow_time, link.capacity, volume))
}

/// Beckmann integral of the link cost up to `volume`.
pub fn bpr_integral(link: &Link, volume: f64, params: &BprParams) -> Result<f64> {
    check_volume(volume)?;
    Ok(params.integral(link.freeflow_time, link.capacity, volume))
}

/// Marginal edge cost: own travel time plus the delay imposed on every other
/// vehicle on the link.
pub fn marginal_edge_cost(link: &Link, volume: f64, params: &BprParams) -> Result<f64> {
    check_volume(volume)?;
    Ok(params.marginal(link.freeflow_time, link.capacity, volume))
}

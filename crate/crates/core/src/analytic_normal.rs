//! Closed forms for a two-year liability with independent normal cash flows,
//! zero risk-free rate, VaR capital and a cost-of-capital dividend.
//!
//! With `c(alpha, eta) = (1 + eta - alpha) * q_alpha - phi(q_alpha)`:
//!
//! ```text
//! V_1   = mu_1 + sigma_1 / (1 + eta) * c
//! V_0   = mu_0 + mu_1 + (sigma_0 + sigma_1) / (1 + eta) * c
//! V_0^u = mu_0 + mu_1 + eta * (sigma_0 + sigma_1) / (1 + eta) * g(alpha)
//! ```
//!
//! where `g(alpha) = alpha * q_alpha + phi(q_alpha)`. These serve as an
//! oracle for the tree engine.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;
use thiserror::Error;

use crate::solver::bisect;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("level alpha = {0} must lie strictly between 0 and 1")]
    InvalidLevel(f64),
    #[error("cost-of-capital rate eta = {0} must be positive")]
    InvalidEta(f64),
    #[error("standard deviation {0} must be finite and non-negative")]
    InvalidSigma(f64),
    #[error("mean {0} must be finite")]
    InvalidMean(f64),
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `q_alpha` with `|Phi(q_alpha) - alpha| < 1e-12`, by bisection on the
/// erfc-based distribution function.
pub fn std_normal_quantile(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalyticError::InvalidLevel(alpha));
    }
    let q = if alpha > 0.5 {
        // upper tail through erfc keeps precision close to 1
        let tail = 1.0 - alpha;
        bisect(|x| 0.5 * libm::erfc(x / SQRT_2) - tail, 0.0, 40.0, 1e-15)
    } else {
        bisect(|x| std_normal_cdf(x) - alpha, -40.0, 0.0, 1e-15)
    };
    Ok(q.expect("bracket [-40, 40] contains every quantile"))
}

/// `f(alpha) = phi(q_alpha) - (1 - alpha) * q_alpha`; positive and strictly
/// decreasing on `(0, 1)`.
pub fn f(alpha: f64) -> Result<f64, AnalyticError> {
    let q = std_normal_quantile(alpha)?;
    Ok(std_normal_pdf(q) - (1.0 - alpha) * q)
}

/// `g(alpha) = alpha * q_alpha + phi(q_alpha)`; positive on `(0, 1)`.
pub fn g(alpha: f64) -> Result<f64, AnalyticError> {
    let q = std_normal_quantile(alpha)?;
    Ok(alpha * q + std_normal_pdf(q))
}

/// Two-year liability with `X_t ~ Normal(mu_t, sigma_t^2)` independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalLiabilitySpec {
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
    pub alpha: f64,
    pub eta: f64,
}

impl NormalLiabilitySpec {
    pub fn new(mu: [f64; 2], sigma: [f64; 2], alpha: f64, eta: f64) -> Result<Self, AnalyticError> {
        let spec = NormalLiabilitySpec {
            mu,
            sigma,
            alpha,
            eta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        for m in self.mu {
            if !m.is_finite() {
                return Err(AnalyticError::InvalidMean(m));
            }
        }
        for s in self.sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(AnalyticError::InvalidSigma(s));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(AnalyticError::InvalidLevel(self.alpha));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(AnalyticError::InvalidEta(self.eta));
        }
        Ok(())
    }

    /// The liability paying the total in year 0: `X_1 = 0` and
    /// `X_0 ~ Normal(mu_0 + mu_1, sigma_0^2 + sigma_1^2)`.
    pub fn pooled(&self) -> Self {
        NormalLiabilitySpec {
            mu: [self.mu[0] + self.mu[1], 0.0],
            sigma: [self.sigma[0].hypot(self.sigma[1]), 0.0],
            ..*self
        }
    }

    fn value_coefficient(&self) -> Result<f64, AnalyticError> {
        let q = std_normal_quantile(self.alpha)?;
        Ok((1.0 + self.eta - self.alpha) * q - std_normal_pdf(q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticValues {
    pub v1: f64,
    pub v0: f64,
}

pub fn value(spec: &NormalLiabilitySpec) -> Result<AnalyticValues, AnalyticError> {
    spec.validate()?;
    let c = spec.value_coefficient()? / (1.0 + spec.eta);
    Ok(AnalyticValues {
        v1: spec.mu[1] + spec.sigma[1] * c,
        v0: spec.mu[0] + spec.mu[1] + (spec.sigma[0] + spec.sigma[1]) * c,
    })
}

/// `V_0^u`, the best estimate plus the expected cost-of-capital dividends.
pub fn upper_bound(spec: &NormalLiabilitySpec) -> Result<f64, AnalyticError> {
    spec.validate()?;
    let k = spec.eta / (1.0 + spec.eta) * g(spec.alpha)?;
    Ok(spec.mu[0] + spec.mu[1] + (spec.sigma[0] + spec.sigma[1]) * k)
}

/// Cost-of-capital rate below which the pooled liability is worth more than
/// the two-year one: the root in `eta` of
/// `(1 + eta - alpha) * q_alpha - phi(q_alpha) = 0`, i.e. `f(alpha) / q_alpha`.
/// Infinite when `q_alpha <= 0`, where the reversal holds for every `eta`.
pub fn reversal_threshold(alpha: f64) -> Result<f64, AnalyticError> {
    let q = std_normal_quantile(alpha)?;
    if q <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(f(alpha)? / q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionReport {
    pub value_l1: f64,
    pub upper_l1: f64,
    pub value_l2: f64,
    pub upper_l2: f64,
    /// `false` when both standard deviations vanish.
    pub strict: bool,
    /// `V_0(L_i) < V_0^u(L_i)` for both liabilities.
    pub values_below_bounds: bool,
    /// `V_0^u(L2) < V_0^u(L1)`.
    pub bounds_ordered: bool,
    /// `(1 + eta - alpha) * q_alpha - phi(q_alpha)`; negative means reversal.
    pub reversal_coefficient: f64,
    /// `V_0(L1) < V_0(L2)`.
    pub reversal: bool,
    pub threshold_eta: f64,
    pub note: Option<String>,
}

/// Compares the two-year liability `L1` with its pooled version `L2`.
pub fn check_proposition(spec: &NormalLiabilitySpec) -> Result<PropositionReport, AnalyticError> {
    let l2 = spec.pooled();
    let v1 = value(spec)?.v0;
    let u1 = upper_bound(spec)?;
    let v2 = value(&l2)?.v0;
    let u2 = upper_bound(&l2)?;
    let strict = spec.sigma[0] + spec.sigma[1] > 0.0;
    Ok(PropositionReport {
        value_l1: v1,
        upper_l1: u1,
        value_l2: v2,
        upper_l2: u2,
        strict,
        values_below_bounds: v1 < u1 && v2 < u2,
        bounds_ordered: u2 < u1,
        reversal_coefficient: spec.value_coefficient()?,
        reversal: v1 < v2,
        threshold_eta: reversal_threshold(spec.alpha)?,
        note: (!strict).then(|| {
            "degenerate: both standard deviations are zero, no strict inequalities".to_owned()
        }),
    })
}

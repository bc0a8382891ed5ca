//! Translation-invariant risk measures on finite distributions.
//!
//! Sign convention: a random variable `Z` is a gain, so losses are negative
//! values of `Z` and the risk of a loss is a positive number. Only
//! Value-at-Risk is provided: `rho{Z} = VaR_alpha{-Z}`, the lower
//! `alpha`-quantile of `-Z`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::ConditionalDistribution;
use crate::{compensated_sum, PROB_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("risk level alpha = {0} must lie strictly between 0 and 1")]
    InvalidLevel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMeasureKind {
    ValueAtRisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasureSpec {
    kind: RiskMeasureKind,
    alpha: f64,
}

impl RiskMeasureSpec {
    pub fn value_at_risk(alpha: f64) -> Result<Self, RiskError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(RiskError::InvalidLevel(alpha));
        }
        Ok(RiskMeasureSpec {
            kind: RiskMeasureKind::ValueAtRisk,
            alpha,
        })
    }

    pub fn kind(&self) -> RiskMeasureKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `rho{Z}` for a gain `Z`.
    pub fn rho(&self, z: &ConditionalDistribution) -> f64 {
        self.lower_quantile(z, true)
    }

    /// `rho{-L}` for a loss `L`, i.e. the lower `alpha`-quantile of `L`.
    ///
    /// Returns an atom value of `loss` bit for bit, which the engine relies
    /// on when it compares atoms against the quantile.
    pub fn loss_quantile(&self, loss: &ConditionalDistribution) -> f64 {
        self.lower_quantile(loss, false)
    }

    // Lower alpha-quantile of `d` (or of `-d` when `negate`), reported in the
    // orientation of the quantile variable.
    fn lower_quantile(&self, d: &ConditionalDistribution, negate: bool) -> f64 {
        let atoms = d.atoms();
        let mut order = d.ascending_order();
        if negate {
            order.reverse();
        }
        let target = self.alpha - PROB_TOLERANCE;
        let mut cum = 0.0;
        let mut comp = 0.0;
        for &i in &order {
            let p = atoms[i].prob;
            let t = cum + p;
            comp += if cum.abs() >= p {
                (cum - t) + p
            } else {
                (p - t) + cum
            };
            cum = t;
            if cum + comp >= target {
                return if negate {
                    -atoms[i].value
                } else {
                    atoms[i].value
                };
            }
        }
        // probabilities sum to one, so this is only reached through rounding
        let last = *order.last().expect("distribution is non-empty");
        if negate {
            -atoms[last].value
        } else {
            atoms[last].value
        }
    }
}

/// Probability that the loss does not exceed `threshold`.
pub fn prob_at_most(loss: &ConditionalDistribution, threshold: f64) -> f64 {
    compensated_sum(
        loss.atoms()
            .iter()
            .filter(|a| a.value <= threshold)
            .map(|a| a.prob),
    )
}

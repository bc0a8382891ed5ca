//! Deterministic risk-free discounting with annually compounded zero rates.
//!
//! A curve gives the annual rate `R^(m)` of an `m`-year zero-coupon bond. The
//! same curve applies at every valuation date, so discounting from `s` to `t`
//! always uses the maturity-`(s - t)` rate:
//!
//! `pv(x, s -> t) = (1 + R^(s-t))^-(s-t) * x`.
//!
//! On a non-flat curve this is not the composition of one-year steps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::ConditionalDistribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("rate {rate} for maturity {maturity} must be finite and greater than -1")]
    InvalidRate { maturity: u32, rate: f64 },
    #[error("maturities must be >= 1, got {0}")]
    InvalidMaturity(u32),
    #[error("duplicate maturity {0}")]
    DuplicateMaturity(u32),
    #[error("curve has no rate for maturity {0}")]
    MissingMaturity(u32),
    #[error("discounting forward in time: from year {from} to year {to}")]
    DiscountingForward { from: u32, to: u32 },
    #[error("accumulating backward in time: from year {from} to year {to}")]
    AccumulatingBackward { from: u32, to: u32 },
    #[error("node short rate {0} must be finite and greater than -1")]
    InvalidShortRate(f64),
    #[error("node carries no short rate and no curve was supplied")]
    MissingShortRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermStructure {
    /// The same annual rate for every maturity.
    Flat(f64),
    /// Annual spot rates by maturity in years.
    Spot(BTreeMap<u32, f64>),
}

fn check_rate(maturity: u32, rate: f64) -> Result<(), CurveError> {
    if rate.is_finite() && rate > -1.0 {
        Ok(())
    } else {
        Err(CurveError::InvalidRate { maturity, rate })
    }
}

impl TermStructure {
    pub fn flat(rate: f64) -> Result<Self, CurveError> {
        check_rate(1, rate)?;
        Ok(TermStructure::Flat(rate))
    }

    pub fn from_spot<I: IntoIterator<Item = (u32, f64)>>(rates: I) -> Result<Self, CurveError> {
        let mut map = BTreeMap::new();
        for (m, r) in rates {
            if m == 0 {
                return Err(CurveError::InvalidMaturity(m));
            }
            check_rate(m, r)?;
            if map.insert(m, r).is_some() {
                return Err(CurveError::DuplicateMaturity(m));
            }
        }
        Ok(TermStructure::Spot(map))
    }

    pub fn is_flat(&self) -> bool {
        match self {
            TermStructure::Flat(_) => true,
            TermStructure::Spot(map) => {
                let mut it = map.values();
                match it.next() {
                    Some(first) => it.all(|r| r == first),
                    None => true,
                }
            }
        }
    }

    pub fn spot_rate(&self, maturity: u32) -> Result<f64, CurveError> {
        if maturity == 0 {
            return Err(CurveError::InvalidMaturity(0));
        }
        match self {
            TermStructure::Flat(r) => Ok(*r),
            TermStructure::Spot(map) => map
                .get(&maturity)
                .copied()
                .ok_or(CurveError::MissingMaturity(maturity)),
        }
    }

    /// Price of a zero-coupon bond paying 1 after `years`.
    pub fn discount_factor(&self, years: u32) -> Result<f64, CurveError> {
        if years == 0 {
            return Ok(1.0);
        }
        let r = self.spot_rate(years)?;
        Ok((1.0 + r).powi(-(years as i32)))
    }

    /// Checks that all maturities `1..=max_maturity` are available.
    pub fn covers(&self, max_maturity: u32) -> Result<(), CurveError> {
        for m in 1..=max_maturity {
            self.spot_rate(m)?;
        }
        Ok(())
    }

    /// Value at time `to` of `amount` paid at time `from`.
    pub fn pv(&self, amount: f64, from: u32, to: u32) -> Result<f64, CurveError> {
        if to > from {
            return Err(CurveError::DiscountingForward { from, to });
        }
        if from == to {
            return Ok(amount);
        }
        let m = from - to;
        let r = self.spot_rate(m)?;
        Ok(amount / (1.0 + r).powi(m as i32))
    }

    /// Value at time `to` of `amount` invested risk-free at time `from`.
    pub fn tv(&self, amount: f64, from: u32, to: u32) -> Result<f64, CurveError> {
        if to < from {
            return Err(CurveError::AccumulatingBackward { from, to });
        }
        if from == to {
            return Ok(amount);
        }
        let m = to - from;
        let r = self.spot_rate(m)?;
        Ok(amount * (1.0 + r).powi(m as i32))
    }

    /// Forward price `B_{t+1}^m(t)`, fixed at `t`, of an `m`-year bond
    /// bought at `t + 1`. Follows from no-arbitrage:
    /// `(1 + R^(1))^-1 * B = (1 + R^(m+1))^-(m+1)`.
    pub fn forward_bond_price(&self, _t: u32, m: u32) -> Result<f64, CurveError> {
        let r1 = self.spot_rate(1)?;
        let rm1 = self.spot_rate(m + 1)?;
        Ok((1.0 + r1) * (1.0 + rm1).powi(-((m + 1) as i32)))
    }

    /// Compares the forward price against the expected future bond price
    /// under a model for `R_{t+1}^(m)`. Holds when the forward price carries a
    /// non-negative liquidity premium.
    pub fn check_liquidity_premium(
        &self,
        future_rate: &ConditionalDistribution,
        t: u32,
        m: u32,
    ) -> Result<LiquidityCheck, CurveError> {
        let forward = self.forward_bond_price(t, m)?;
        for a in future_rate.atoms() {
            check_rate(m, a.value)?;
        }
        let expected = future_rate
            .map_values(|r| (1.0 + r).powi(-(m as i32)))
            .expect("same probabilities as the rate model")
            .mean();
        let slack = forward - expected;
        Ok(LiquidityCheck {
            holds: slack >= 0.0,
            slack,
        })
    }

    /// Liquidity-premium check for the curve itself: since the curve is the
    /// same at every date, next year's `m`-year rate is `R^(m)`. Checks every
    /// `m` in `1..max_maturity`. Returns the smallest slack.
    pub fn deterministic_liquidity_premium(
        &self,
        max_maturity: u32,
    ) -> Result<LiquidityCheck, CurveError> {
        let mut slack = f64::INFINITY;
        for m in 1..max_maturity {
            let future = ConditionalDistribution::point_mass(self.spot_rate(m)?);
            slack = slack.min(self.check_liquidity_premium(&future, 0, m)?.slack);
        }
        if slack == f64::INFINITY {
            slack = 0.0;
        }
        // rounding on a flat curve gives slacks of order 1e-17
        Ok(LiquidityCheck {
            holds: slack >= -1e-14,
            slack,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiquidityCheck {
    pub holds: bool,
    /// Forward price minus expected future bond price.
    pub slack: f64,
}

/// Source of one-year rates for the valuation engine.
#[derive(Debug, Clone, PartialEq)]
pub enum RateModel {
    /// A deterministic curve; every node uses `R^(1)`.
    Curve(TermStructure),
    /// Each non-leaf node carries its own one-year rate `R_t^(1)`.
    NodeShortRates,
}

impl RateModel {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, RateModel::Curve(_))
    }

    pub fn curve(&self) -> Option<&TermStructure> {
        match self {
            RateModel::Curve(c) => Some(c),
            RateModel::NodeShortRates => None,
        }
    }

    /// One-year rate at a node carrying `short_rate`.
    pub fn one_year_rate(&self, short_rate: Option<f64>) -> Result<f64, CurveError> {
        match self {
            RateModel::Curve(c) => c.spot_rate(1),
            RateModel::NodeShortRates => {
                let r = short_rate.ok_or(CurveError::MissingShortRate)?;
                if r.is_finite() && r > -1.0 {
                    Ok(r)
                } else {
                    Err(CurveError::InvalidShortRate(r))
                }
            }
        }
    }
}

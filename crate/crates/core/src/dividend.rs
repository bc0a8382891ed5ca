//! Eligible dividend rules: `D` is continuous, increasing in the capital `C`
//! and vanishes at `C = 0`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DividendError {
    #[error("cost-of-capital rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),
    #[error("dividend table: {0}")]
    InvalidTable(String),
    #[error("custom dividend must vanish at zero capital, got D(0) = {0}")]
    NonZeroAtOrigin(f64),
}

/// Piecewise-linear dividend through the origin. Beyond the last knot the
/// final slope is continued.
#[derive(Debug, Clone, PartialEq)]
pub struct DividendTable {
    knots: Vec<(f64, f64)>,
}

impl DividendTable {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, DividendError> {
        let mut knots = vec![(0.0, 0.0)];
        for &(c, d) in points {
            if !(c.is_finite() && d.is_finite()) {
                return Err(DividendError::InvalidTable(format!(
                    "non-finite knot ({c}, {d})"
                )));
            }
            if c == 0.0 {
                if d != 0.0 {
                    return Err(DividendError::InvalidTable(format!(
                        "D(0) = {d}, expected 0"
                    )));
                }
                continue;
            }
            let &(pc, pd) = knots.last().unwrap();
            if c <= pc {
                return Err(DividendError::InvalidTable(format!(
                    "capital knots must be positive and strictly increasing ({c} after {pc})"
                )));
            }
            if d < pd {
                return Err(DividendError::InvalidTable(format!(
                    "dividend decreases from {pd} to {d} at C = {c}"
                )));
            }
            knots.push((c, d));
        }
        if knots.len() < 2 {
            return Err(DividendError::InvalidTable(
                "needs at least one knot with C > 0".into(),
            ));
        }
        Ok(DividendTable { knots })
    }

    /// Knots including the implicit origin.
    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, capital: f64) -> f64 {
        if capital <= 0.0 {
            return 0.0;
        }
        let k = &self.knots;
        let seg = match k.iter().position(|&(c, _)| c >= capital) {
            Some(0) => 1,
            Some(i) => i,
            None => k.len() - 1,
        };
        let (c0, d0) = k[seg - 1];
        let (c1, d1) = k[seg];
        d0 + (d1 - d0) * (capital - c0) / (c1 - c0)
    }
}

/// A user-supplied eligible dividend. Monotonicity is the caller's
/// responsibility; only `D(0) = 0` is checked.
#[derive(Clone)]
pub struct CustomDividend(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for CustomDividend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomDividend(..)")
    }
}

#[derive(Debug, Clone)]
pub enum DividendRule {
    /// `D = eta * C`.
    Linear {
        eta: f64,
    },
    Table(DividendTable),
    Custom(CustomDividend),
}

impl DividendRule {
    pub fn cost_of_capital(eta: f64) -> Result<Self, DividendError> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(DividendError::InvalidRate(eta));
        }
        Ok(DividendRule::Linear { eta })
    }

    pub fn table(points: &[(f64, f64)]) -> Result<Self, DividendError> {
        DividendTable::new(points).map(DividendRule::Table)
    }

    pub fn custom<F>(f: F) -> Result<Self, DividendError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let at_zero = f(0.0);
        if at_zero != 0.0 {
            return Err(DividendError::NonZeroAtOrigin(at_zero));
        }
        Ok(DividendRule::Custom(CustomDividend(Arc::new(f))))
    }

    pub fn dividend(&self, capital: f64) -> f64 {
        match self {
            DividendRule::Linear { eta } => eta * capital,
            DividendRule::Table(t) => t.eval(capital),
            DividendRule::Custom(CustomDividend(f)) => f(capital),
        }
    }

    /// The cost-of-capital rate of a linear rule.
    pub fn eta(&self) -> Option<f64> {
        match self {
            DividendRule::Linear { eta } => Some(*eta),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_through_origin() {
        let t = DividendTable::new(&[(10.0, 1.0), (20.0, 3.0)]).unwrap();
        assert_eq!(t.eval(0.0), 0.0);
        assert_eq!(t.eval(5.0), 0.5);
        assert_eq!(t.eval(10.0), 1.0);
        assert_eq!(t.eval(15.0), 2.0);
        assert_eq!(t.eval(30.0), 5.0);
    }

    #[test]
    fn table_rejects_non_eligible() {
        assert!(DividendTable::new(&[(10.0, 2.0), (20.0, 1.0)]).is_err());
        assert!(DividendTable::new(&[(10.0, 1.0), (10.0, 2.0)]).is_err());
        assert!(DividendTable::new(&[(0.0, 1.0), (10.0, 2.0)]).is_err());
        assert!(DividendTable::new(&[(0.0, 0.0)]).is_err());
        assert!(DividendTable::new(&[(0.0, 0.0), (1.0, 0.1)]).is_ok());
    }

    #[test]
    fn rates_and_custom() {
        assert!(DividendRule::cost_of_capital(-0.1).is_err());
        assert_eq!(
            DividendRule::cost_of_capital(0.06).unwrap().dividend(50.0),
            3.0
        );
        assert!(DividendRule::custom(|c| c + 1.0).is_err());
        let r = DividendRule::custom(|c: f64| 0.05 * c.sqrt()).unwrap();
        assert_eq!(r.dividend(4.0), 0.1);
        assert_eq!(r.eta(), None);
    }
}

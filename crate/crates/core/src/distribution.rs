//! Finite conditional distributions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{compensated_sum, PROB_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("distribution has no atoms")]
    Empty,
    #[error("atom {index} has probability {prob}, expected a value in (0, 1]")]
    BadProbability { index: usize, prob: f64 },
    #[error("atom {index} has non-finite value {value}")]
    NonFiniteValue { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: f64 },
}

/// A single outcome with its probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

impl Atom {
    pub fn new(value: f64, prob: f64) -> Self {
        Atom { value, prob }
    }
}

/// A discrete law with finitely many atoms. Atom order is preserved, so
/// callers can relate atoms back to the edges they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    atoms: Vec<Atom>,
}

impl ConditionalDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, DistributionError> {
        if atoms.is_empty() {
            return Err(DistributionError::Empty);
        }
        for (index, a) in atoms.iter().enumerate() {
            if !(a.prob > 0.0 && a.prob <= 1.0) {
                return Err(DistributionError::BadProbability {
                    index,
                    prob: a.prob,
                });
            }
            if !a.value.is_finite() {
                return Err(DistributionError::NonFiniteValue {
                    index,
                    value: a.value,
                });
            }
        }
        let sum = compensated_sum(atoms.iter().map(|a| a.prob));
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(DistributionError::ProbabilitySum { sum });
        }
        Ok(ConditionalDistribution { atoms })
    }

    /// Builds from `(value, prob)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, DistributionError> {
        Self::new(pairs.iter().map(|&(v, p)| Atom::new(v, p)).collect())
    }

    pub fn point_mass(value: f64) -> Self {
        ConditionalDistribution {
            atoms: vec![Atom::new(value, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.prob * a.value))
    }

    pub fn min_value(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.value)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` to every atom value, keeping probabilities and order.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self, DistributionError> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| Atom::new(f(a.value), a.prob))
                .collect(),
        )
    }

    /// Merges atoms with bit-identical values (no epsilon), keeping the
    /// position of the first occurrence. A distribution that collapses to a
    /// single atom becomes an exact point mass.
    pub fn merged(&self) -> Self {
        let mut out: Vec<Atom> = Vec::with_capacity(self.atoms.len());
        let mut seen: HashMap<u64, usize> = HashMap::with_capacity(self.atoms.len());
        for a in &self.atoms {
            // +0.0 and -0.0 compare equal and must share a key
            let key = if a.value == 0.0 { 0 } else { a.value.to_bits() };
            match seen.get(&key) {
                Some(&i) => out[i].prob += a.prob,
                None => {
                    seen.insert(key, out.len());
                    out.push(*a);
                }
            }
        }
        if out.len() == 1 {
            out[0].prob = 1.0;
        }
        ConditionalDistribution { atoms: out }
    }

    /// Atom indices sorted by ascending value (stable for ties).
    pub(crate) fn ascending_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.atoms.len()).collect();
        idx.sort_by(|&i, &j| self.atoms[i].value.total_cmp(&self.atoms[j].value));
        idx
    }

    /// Sample variance of the atoms around their mean.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        compensated_sum(
            self.atoms
                .iter()
                .map(|a| a.prob * (a.value - m) * (a.value - m)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            ConditionalDistribution::new(vec![]),
            Err(DistributionError::Empty)
        );
        assert!(matches!(
            ConditionalDistribution::from_pairs(&[(1.0, 0.5), (2.0, 0.6)]),
            Err(DistributionError::ProbabilitySum { .. })
        ));
        assert!(matches!(
            ConditionalDistribution::from_pairs(&[(1.0, 0.0), (2.0, 1.0)]),
            Err(DistributionError::BadProbability { index: 0, .. })
        ));
        assert!(matches!(
            ConditionalDistribution::from_pairs(&[(f64::NAN, 1.0)]),
            Err(DistributionError::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn merge_is_exact() {
        let d = ConditionalDistribution::from_pairs(&[(3.0, 0.4), (3.0, 0.6)]).unwrap();
        assert_eq!(d.merged().atoms(), &[Atom::new(3.0, 1.0)]);

        let d = ConditionalDistribution::from_pairs(&[(3.0, 0.4), (3.0 + 1e-15, 0.6)]).unwrap();
        assert_eq!(d.merged().len(), 2);
    }

    #[test]
    fn tenths_sum_to_one() {
        let d = ConditionalDistribution::new(vec![Atom::new(1.0, 0.1); 10]).unwrap();
        assert_eq!(d.merged().atoms()[0].prob, 1.0);
        assert!((d.mean() - 1.0).abs() < 1e-15);
    }
}

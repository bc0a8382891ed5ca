//! Monte-Carlo check of the acceptability condition.
//!
//! Samples one-year transitions out of a node and averages the capital
//! provider's excess payoff `1_A ((1+R) C + (1+R) V - Y) - (1+R) C - D`,
//! whose exact expectation is zero for a correct valuation.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::scenario_tree::{NodeId, ScenarioTree};
use crate::valuation_engine::ValuationResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("at least one path is needed")]
    NoPaths,
    #[error("node '{0}' is a leaf")]
    Leaf(String),
    #[error("sampling weights: {0}")]
    Weights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub paths: u64,
    pub seed: u64,
}

impl OracleEstimate {
    /// Distance from zero in standard errors; zero when both vanish.
    pub fn z_score(&self) -> f64 {
        if self.estimate == 0.0 {
            0.0
        } else {
            self.estimate / self.standard_error
        }
    }

    pub fn within(&self, k: f64) -> bool {
        self.estimate.abs() <= k * self.standard_error
    }
}

pub fn monte_carlo_acceptability(
    tree: &ScenarioTree,
    result: &ValuationResult,
    paths: u64,
    seed: u64,
) -> Result<OracleEstimate, OracleError> {
    monte_carlo_at(tree, result, tree.root(), paths, seed)
}

pub fn monte_carlo_at(
    tree: &ScenarioTree,
    result: &ValuationResult,
    node: NodeId,
    paths: u64,
    seed: u64,
) -> Result<OracleEstimate, OracleError> {
    if paths == 0 {
        return Err(OracleError::NoPaths);
    }
    let nv = result
        .node(node)
        .ok_or_else(|| OracleError::Leaf(tree.label(node).to_owned()))?;
    let edges = tree.edges(node);
    let pick = WeightedIndex::new(edges.iter().map(|e| e.prob))
        .map_err(|e| OracleError::Weights(e.to_string()))?;
    let growth = 1.0 + nv.rate;
    let assets = growth * nv.capital + growth * nv.value;
    let cost = growth * nv.capital + nv.dividend;
    let payoff: Vec<f64> = edges
        .iter()
        .zip(&nv.continuation)
        .map(|(e, &in_a)| {
            let paid = if in_a {
                assets - (e.cash_flow + result.value(e.target))
            } else {
                0.0
            };
            paid - cost
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0_f64, 0.0_f64);
    for k in 1..=paths {
        let x = payoff[pick.sample(&mut rng)];
        let delta = x - mean;
        mean += delta / k as f64;
        m2 += delta * (x - mean);
    }
    let variance = if paths > 1 {
        m2 / (paths - 1) as f64
    } else {
        0.0
    };
    Ok(OracleEstimate {
        estimate: mean,
        standard_error: (variance / paths as f64).sqrt(),
        paths,
        seed,
    })
}

//! Backward one-year valuation with risk-free replication.
//!
//! At a node with one-year rate `R`, let `Y = X_t + V_{t+1}` over the
//! children, `rho = rho{-Y}` (the lower `alpha`-quantile of `Y`) and
//! `A = {Y <= rho}`. The capital `C` solves
//!
//! ```text
//! (1 + R) C + D(C) = E[1_A (rho - Y)]
//! ```
//!
//! and the value is `V = rho / (1 + R) - C`. For `D = eta * C` this is
//! `V = (E[1_A Y] + (1 - gamma) rho + eta rho / (1 + R)) / (1 + R + eta)`
//! with `gamma = P(A)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::compensated_sum;
use crate::distribution::{Atom, ConditionalDistribution, DistributionError};
use crate::dividend::DividendRule;
use crate::risk_measure::RiskMeasureSpec;
use crate::scenario_tree::{NodeId, ScenarioTree};
use crate::solver::{bisect, BisectionError};
use crate::term_structure::{CurveError, RateModel};

/// Capital below `-CAPITAL_TOLERANCE` is an error; above it, negatives are
/// rounding and clamp to zero.
pub const CAPITAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("negative capital {capital}: inputs violate the regime of the risk-free recursion")]
    NegativeCapital { capital: f64 },
    #[error("one-year rate {rate} with dividend slope {eta} leaves no positive discount base")]
    InvalidRate { rate: f64, eta: f64 },
    #[error("{quantity} is not finite; cash flows are too large for double precision")]
    NonFinite { quantity: &'static str },
    #[error("V0 too small to admit split: E[1_A (tv(V0) - Y)] = {rhs}")]
    SplitNotAdmissible { rhs: f64 },
    #[error("capital equation: {0}")]
    Bisection(#[from] BisectionError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("at node '{node}': {source}")]
    AtNode {
        node: String,
        #[source]
        source: Box<ValuationError>,
    },
}

impl ValuationError {
    fn at(self, node: &str) -> Self {
        ValuationError::AtNode {
            node: node.to_owned(),
            source: Box::new(self),
        }
    }

    /// The error without node context.
    pub fn root_cause(&self) -> &ValuationError {
        match self {
            ValuationError::AtNode { source, .. } => source.root_cause(),
            e => e,
        }
    }
}

/// One-step valuation at a node. `continuation[i]` tells whether atom `i` of
/// the input distribution lies in `A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeValuation {
    pub value: f64,
    pub capital: f64,
    pub dividend: f64,
    pub gamma: f64,
    pub rho: f64,
    pub rate: f64,
    /// `E[Z]` for the cut-off `Z = 1_A Y + 1_{A^c} rho`.
    pub expected_cutoff: f64,
    pub continuation: Vec<bool>,
}

fn check_rate(rate: f64, rule: &DividendRule) -> Result<(), ValuationError> {
    let eta = rule.eta().unwrap_or(0.0);
    if !(rate.is_finite() && rate > -1.0 && 1.0 + rate + eta > 0.0) {
        return Err(ValuationError::InvalidRate { rate, eta });
    }
    Ok(())
}

// Solves (1 + R) C + D(C) = k for C >= 0.
fn solve_capital(
    k: f64,
    rate: f64,
    rule: &DividendRule,
    scale: f64,
) -> Result<f64, ValuationError> {
    let growth = 1.0 + rate;
    let capital = match rule {
        DividendRule::Linear { eta } => k / (growth + eta),
        _ if k == 0.0 => 0.0,
        _ => {
            // well inside 1e-12 (1 + |rho|) so residuals stay below 1e-9 for large rho
            let tol = 1e-15 * (1.0 + scale.abs());
            bisect(|c| growth * c + rule.dividend(c) - k, 0.0, k / growth, tol)?
        }
    };
    if capital < -CAPITAL_TOLERANCE {
        return Err(ValuationError::NegativeCapital { capital });
    }
    Ok(capital.max(0.0))
}

fn finish(
    y: &ConditionalDistribution,
    rho: f64,
    continuation: Vec<bool>,
    k: f64,
    rate: f64,
    rule: &DividendRule,
) -> Result<NodeValuation, ValuationError> {
    let gamma = if continuation.iter().all(|&a| a) {
        1.0
    } else {
        compensated_sum(
            y.atoms()
                .iter()
                .zip(&continuation)
                .filter(|(_, &a)| a)
                .map(|(at, _)| at.prob),
        )
    };
    if !(rho.is_finite() && k.is_finite()) {
        return Err(ValuationError::NonFinite {
            quantity: "expected shortfall below the quantile",
        });
    }
    let capital = solve_capital(k, rate, rule, rho)?;
    let value = rho / (1.0 + rate) - capital;
    if !value.is_finite() {
        return Err(ValuationError::NonFinite { quantity: "value" });
    }
    Ok(NodeValuation {
        value,
        capital,
        dividend: rule.dividend(capital),
        gamma,
        rho,
        rate,
        expected_cutoff: rho - k,
        continuation,
    })
}

/// Value of the claim to `Y` one year ahead.
pub fn node_value(
    y: &ConditionalDistribution,
    rate: f64,
    spec: &RiskMeasureSpec,
    rule: &DividendRule,
) -> Result<NodeValuation, ValuationError> {
    check_rate(rate, rule)?;
    let rho = spec.loss_quantile(y);
    let continuation: Vec<bool> = y.atoms().iter().map(|a| a.value <= rho).collect();
    let k = compensated_sum(y.atoms().iter().zip(&continuation).map(|(a, &in_a)| {
        if in_a {
            a.prob * (rho - a.value)
        } else {
            0.0
        }
    }));
    finish(y, rho, continuation, k, rate, rule)
}

/// Same valuation written through the cut-off `Z = min(Y, rho)`:
/// `V = (E[Z] + D) / (1 + R)`. Agrees with [`node_value`] bit for bit.
pub fn cutoff_value(
    y: &ConditionalDistribution,
    rate: f64,
    spec: &RiskMeasureSpec,
    rule: &DividendRule,
) -> Result<NodeValuation, ValuationError> {
    check_rate(rate, rule)?;
    let rho = spec.loss_quantile(y);
    let z: Vec<f64> = y
        .atoms()
        .iter()
        .map(|a| if a.value <= rho { a.value } else { rho })
        .collect();
    let continuation = y
        .atoms()
        .iter()
        .zip(&z)
        .map(|(a, &z)| a.value == z)
        .collect();
    let k = compensated_sum(y.atoms().iter().zip(&z).map(|(a, &z)| a.prob * (rho - z)));
    finish(y, rho, continuation, k, rate, rule)
}

/// Per-node results of a backward valuation, indexed by [`NodeId`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationResult {
    values: Vec<f64>,
    nodes: Vec<Option<NodeValuation>>,
    root: NodeId,
    deterministic_rates: bool,
}

impl ValuationResult {
    /// `V_0(L)`.
    pub fn root_value(&self) -> f64 {
        self.values[self.root.0]
    }

    /// `V_t` at a node; zero at leaves.
    pub fn value(&self, id: NodeId) -> f64 {
        self.values[id.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `None` at leaves.
    pub fn node(&self, id: NodeId) -> Option<&NodeValuation> {
        self.nodes[id.0].as_ref()
    }

    pub fn root(&self) -> &NodeValuation {
        self.nodes[self.root.0]
            .as_ref()
            .expect("root is not a leaf")
    }

    /// True when the rates came from a deterministic curve.
    pub fn deterministic_rates(&self) -> bool {
        self.deterministic_rates
    }
}

/// Law of `Y = X_t + V_{t+1}` over the edges of `id`, one atom per edge.
pub fn edge_distribution(
    tree: &ScenarioTree,
    id: NodeId,
    values: &[f64],
) -> Result<ConditionalDistribution, DistributionError> {
    ConditionalDistribution::new(
        tree.edges(id)
            .iter()
            .map(|e| Atom::new(e.cash_flow + values[e.target.0], e.prob))
            .collect(),
    )
}

/// Values every node backwards from `V_{T+1} = 0`. Nodes of one time level
/// are valued in parallel.
pub fn value_liability(
    tree: &ScenarioTree,
    rates: &RateModel,
    spec: &RiskMeasureSpec,
    rule: &DividendRule,
) -> Result<ValuationResult, ValuationError> {
    let mut values = vec![0.0; tree.len()];
    let mut nodes: Vec<Option<NodeValuation>> = vec![None; tree.len()];
    for level in tree.levels().iter().rev() {
        let computed: Vec<(NodeId, NodeValuation)> = level
            .par_iter()
            .filter(|&&id| !tree.is_leaf(id))
            .map(|&id| {
                let run = || -> Result<NodeValuation, ValuationError> {
                    let rate = rates.one_year_rate(tree.short_rate(id))?;
                    let y = edge_distribution(tree, id, &values)?;
                    node_value(&y, rate, spec, rule)
                };
                run().map(|v| (id, v)).map_err(|e| e.at(tree.label(id)))
            })
            .collect::<Result<_, _>>()?;
        for (id, v) in computed {
            values[id.0] = v.value;
            nodes[id.0] = Some(v);
        }
    }
    Ok(ValuationResult {
        values,
        nodes,
        root: tree.root(),
        deterministic_rates: rates.is_deterministic(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeResidual {
    pub node: NodeId,
    pub time: u32,
    pub residual: f64,
}

/// Expected excess return of the capital provider over the risk-free rate,
/// `E[1_A ((1+R) C + (1+R) V - Y)] - (1+R) C - D`, at every non-leaf node.
/// Zero when the valuation is acceptable.
pub fn acceptability_residual(tree: &ScenarioTree, result: &ValuationResult) -> Vec<NodeResidual> {
    tree.node_ids()
        .filter_map(|id| {
            let nv = result.node(id)?;
            let growth = 1.0 + nv.rate;
            let assets = growth * nv.capital + growth * nv.value;
            let payoff = compensated_sum(
                tree.edges(id)
                    .iter()
                    .zip(&nv.continuation)
                    .filter(|(_, &a)| a)
                    .map(|(e, _)| e.prob * (assets - (e.cash_flow + result.value(e.target)))),
            );
            Some(NodeResidual {
                node: id,
                time: tree.time(id),
                residual: payoff - growth * nv.capital - nv.dividend,
            })
        })
        .collect()
}

pub fn max_abs_residual(residuals: &[NodeResidual]) -> f64 {
    residuals
        .iter()
        .map(|r| r.residual.abs())
        .fold(0.0, f64::max)
}

/// Splits a replicating portfolio worth `v0` into a reduced portfolio and
/// capital `C`, using `A0 = {Y <= tv(v0)}` as continuation set. Returns
/// `(v0 - C, C)`.
pub fn split_portfolio(
    v0: f64,
    y: &ConditionalDistribution,
    rate: f64,
    rule: &DividendRule,
) -> Result<(f64, f64), ValuationError> {
    check_rate(rate, rule)?;
    let target = (1.0 + rate) * v0;
    let rhs = compensated_sum(
        y.atoms()
            .iter()
            .filter(|a| a.value <= target)
            .map(|a| a.prob * (target - a.value)),
    );
    if rhs < 0.0 {
        return Err(ValuationError::SplitNotAdmissible { rhs });
    }
    let capital = solve_capital(rhs, rate, rule, target)?;
    Ok((v0 - capital, capital))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_tree::TreeNode;
    use crate::term_structure::TermStructure;
    use approx::assert_relative_eq;

    fn three_atom() -> ConditionalDistribution {
        ConditionalDistribution::from_pairs(&[(0.0, 0.7), (100.0, 0.2), (1000.0, 0.1)]).unwrap()
    }

    fn var(alpha: f64) -> RiskMeasureSpec {
        RiskMeasureSpec::value_at_risk(alpha).unwrap()
    }

    fn coc(eta: f64) -> DividendRule {
        DividendRule::cost_of_capital(eta).unwrap()
    }

    #[test]
    fn deterministic_claim_needs_no_capital() {
        let y = ConditionalDistribution::point_mass(100.0);
        let v = node_value(&y, 0.06, &var(0.9), &coc(0.06)).unwrap();
        assert_relative_eq!(v.value, 100.0 / 1.06, max_relative = 1e-15);
        assert_eq!(v.capital, 0.0);
        assert_eq!(v.dividend, 0.0);
        assert_eq!(v.gamma, 1.0);
    }

    #[test]
    fn three_atom_by_hand() {
        let v = node_value(&three_atom(), 0.0, &var(0.9), &coc(0.06)).unwrap();
        assert_eq!(v.rho, 100.0);
        assert_relative_eq!(v.gamma, 0.9, max_relative = 1e-15);
        assert_eq!(v.continuation, vec![true, true, false]);
        assert_relative_eq!(v.capital, 70.0 / 1.06, max_relative = 1e-14);
        assert_relative_eq!(v.value, 36.0 / 1.06, max_relative = 1e-14);
        assert_relative_eq!(v.dividend, 0.06 * 70.0 / 1.06, max_relative = 1e-14);
        assert_relative_eq!(v.expected_cutoff, 30.0, max_relative = 1e-14);
        let c = cutoff_value(&three_atom(), 0.0, &var(0.9), &coc(0.06)).unwrap();
        assert_eq!(v, c);
    }

    #[test]
    fn closed_form_agrees_with_table_rule() {
        let y = three_atom();
        let lin = node_value(&y, 0.03, &var(0.9), &coc(0.06)).unwrap();
        let tab = node_value(
            &y,
            0.03,
            &var(0.9),
            &DividendRule::table(&[(1.0, 0.06)]).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(lin.value, tab.value, epsilon = 1e-10);
        assert_relative_eq!(lin.capital, tab.capital, epsilon = 1e-10);
        let gamma = 0.9;
        let expected = (20.0 + (1.0 - gamma) * 100.0 + 0.06 * 100.0 / 1.03) / (1.03 + 0.06);
        assert_relative_eq!(lin.value, expected, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_rate() {
        assert!(matches!(
            node_value(&three_atom(), -1.0, &var(0.9), &coc(0.06)),
            Err(ValuationError::InvalidRate { .. })
        ));
    }

    #[test]
    fn split_examples() {
        let y = ConditionalDistribution::from_pairs(&[(0.0, 0.7), (100.0, 0.3)]).unwrap();
        let (reduced, c) = split_portfolio(100.0, &y, 0.0, &coc(0.06)).unwrap();
        assert_relative_eq!(c, 70.0 / 1.06, max_relative = 1e-14);
        assert_relative_eq!(reduced, 100.0 - 70.0 / 1.06, max_relative = 1e-14);

        let y = ConditionalDistribution::point_mass(105.0);
        assert_eq!(split_portfolio(100.0, &y, 0.05, &coc(0.06)).unwrap().1, 0.0);

        let y = ConditionalDistribution::point_mass(90.0);
        let (_, c) = split_portfolio(100.0, &y, 0.02, &coc(0.06)).unwrap();
        assert_relative_eq!(c, 12.0 / 1.08, max_relative = 1e-14);
    }

    #[test]
    fn tree_errors_name_the_node() {
        let nodes = vec![
            TreeNode::root("root"),
            TreeNode::child("a", "root", 1.0, 1.0),
        ];
        let tree = ScenarioTree::from_nodes(&nodes).unwrap();
        let err =
            value_liability(&tree, &RateModel::NodeShortRates, &var(0.9), &coc(0.06)).unwrap_err();
        assert!(err.to_string().contains("'root'"));
        assert!(matches!(
            err.root_cause(),
            ValuationError::Curve(CurveError::MissingShortRate)
        ));
    }

    #[test]
    fn three_atom_in_a_tree() {
        let nodes = vec![
            TreeNode::root("r"),
            TreeNode::child("a", "r", 0.7, 0.0),
            TreeNode::child("b", "r", 0.2, 100.0),
            TreeNode::child("c", "r", 0.1, 1000.0),
            TreeNode::child("a1", "a", 1.0, 0.0),
            TreeNode::child("b1", "b", 1.0, 0.0),
            TreeNode::child("c1", "c", 1.0, 0.0),
        ];
        let tree = ScenarioTree::from_nodes(&nodes).unwrap();
        let rates = RateModel::Curve(TermStructure::flat(0.0).unwrap());
        let res = value_liability(&tree, &rates, &var(0.9), &coc(0.06)).unwrap();
        assert_relative_eq!(res.root_value(), 36.0 / 1.06, max_relative = 1e-14);
        assert!(max_abs_residual(&acceptability_residual(&tree, &res)) < 1e-12);
    }
}

//! Best estimate and risk margin.
//!
//! With a deterministic curve the value splits as `V_t = BE_t + DP_t`, where
//! `BE_t` replicates expected cash flows with zero-coupon bonds and the
//! dividend portfolio `DP_t` is the value of the residual claim
//! `Y - tv(BE_t)`. Upper bounds:
//!
//! - recursive: `V_t <= pv(E[Y] + D_t)`, valid for any one-year rates;
//! - closed form: `V_t <= BE_t + RM_t`, where the expected risk margin
//!   `RM_t` is the present value of expected future dividends;
//! - adjusted: `V_0 <= BE_0 + RM~_0` for a cost-of-capital dividend.
//!
//! The curve is the same at every date, so next year's `m`-year rate is
//! today's `R^(m)`. The closed-form and adjusted bounds, and `DP_t <= RM_t`,
//! rely on forward bond prices carrying a non-negative liquidity premium, and
//! on that premium not working against the liability: the curve is flat or no
//! cash flow is negative. They are only asserted under these conditions and
//! reported with a warning otherwise.

use serde::Serialize;
use thiserror::Error;

use crate::compensated_sum;
use crate::distribution::{Atom, ConditionalDistribution, DistributionError};
use crate::dividend::DividendRule;
use crate::risk_measure::RiskMeasureSpec;
use crate::scenario_tree::{NodeId, ScenarioTree};
use crate::term_structure::{CurveError, LiquidityCheck, RateModel, TermStructure};
use crate::valuation_engine::{node_value, ValuationError, ValuationResult};

/// Absolute tolerance for asserted inequalities and the decomposition.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarginError {
    #[error("decomposition requires deterministic curve")]
    NotDeterministic,
    #[error("adjusted expected risk margin requires a linear cost-of-capital dividend")]
    NonLinearRule,
    #[error("epsilon must be finite and non-negative, got {0}")]
    InvalidEpsilon(f64),
    #[error("{bound} violated at node '{node}': {lhs} > {rhs}")]
    BoundViolated {
        bound: String,
        node: String,
        lhs: f64,
        rhs: f64,
    },
    #[error("decomposition mismatch at node '{node}': BE + DP = {sum}, V = {value}")]
    Decomposition { node: String, sum: f64, value: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PractitionerVariant {
    /// Factor `eta (1 + epsilon) / (1 + eta)`.
    Paper,
    /// Factor `eta`, `epsilon = 0`.
    SolvencyPractice,
}

fn curve_of<'a>(
    tree: &ScenarioTree,
    rates: &'a RateModel,
) -> Result<&'a TermStructure, MarginError> {
    let curve = rates.curve().ok_or(MarginError::NotDeterministic)?;
    curve.covers(tree.horizon() + 1)?;
    Ok(curve)
}

fn expectation(tree: &ScenarioTree, id: NodeId, f: impl Fn(NodeId, f64) -> f64) -> f64 {
    compensated_sum(
        tree.edges(id)
            .iter()
            .map(|e| e.prob * f(e.target, e.cash_flow)),
    )
}

/// `S_n = sum_{k >= 0} pv(E[q_{t+k} | n], t+k+1 -> t)` for a quantity `q`
/// given at every non-leaf node (entries at leaves are ignored).
pub fn expected_pv_sum(
    tree: &ScenarioTree,
    curve: &TermStructure,
    q: &[f64],
) -> Result<Vec<f64>, CurveError> {
    let horizon = tree.horizon();
    let discount: Vec<f64> = (1..=horizon + 1)
        .map(|m| curve.discount_factor(m))
        .collect::<Result<_, _>>()?;
    // e[n][k] = E[q_{t+k} | n]
    let mut e: Vec<Vec<f64>> = vec![Vec::new(); tree.len()];
    let mut out = vec![0.0; tree.len()];
    for level in tree.levels().iter().rev() {
        for &id in level {
            if tree.is_leaf(id) {
                continue;
            }
            let steps = (horizon - tree.time(id)) as usize + 1;
            let mut row = Vec::with_capacity(steps);
            row.push(q[id.0]);
            for k in 1..steps {
                row.push(expectation(tree, id, |c, _| e[c.0][k - 1]));
            }
            out[id.0] = compensated_sum(row.iter().zip(&discount).map(|(x, d)| x * d));
            e[id.0] = row;
        }
    }
    Ok(out)
}

/// `BE_n = sum_s pv(E[X_s | n], s+1 -> t)`, indexed by [`NodeId`]; zero at
/// leaves.
pub fn best_estimate(tree: &ScenarioTree, rates: &RateModel) -> Result<Vec<f64>, MarginError> {
    let curve = curve_of(tree, rates)?;
    let q: Vec<f64> = (0..tree.len())
        .map(|i| expectation(tree, NodeId(i), |_, x| x))
        .collect();
    Ok(expected_pv_sum(tree, curve, &q)?)
}

/// Value of the dividend portfolio, the claim to `Y - tv(BE_t)` valued by the
/// same one-step rule as the liability. Checks `BE + DP = V` at every node.
pub fn dividend_portfolio(
    tree: &ScenarioTree,
    rates: &RateModel,
    spec: &RiskMeasureSpec,
    rule: &DividendRule,
    result: &ValuationResult,
    best_estimate: &[f64],
) -> Result<Vec<f64>, MarginError> {
    let curve = curve_of(tree, rates)?;
    let mut dp = vec![0.0; tree.len()];
    for id in tree.node_ids().filter(|&id| !tree.is_leaf(id)) {
        let t = tree.time(id);
        let shift = curve.tv(best_estimate[id.0], t, t + 1)?;
        let y = ConditionalDistribution::new(
            tree.edges(id)
                .iter()
                .map(|e| Atom::new(e.cash_flow + result.value(e.target) - shift, e.prob))
                .collect(),
        )?;
        let v = node_value(&y, curve.spot_rate(1)?, spec, rule)?.value;
        let value = result.value(id);
        let sum = best_estimate[id.0] + v;
        // written so that a NaN sum also fails
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !((sum - value).abs() <= BOUND_TOLERANCE) {
            return Err(MarginError::Decomposition {
                node: tree.label(id).to_owned(),
                sum,
                value,
            });
        }
        dp[id.0] = v;
    }
    Ok(dp)
}

/// `RM_n = sum_s pv(E[D_s | n], s+1 -> t)`.
pub fn expected_risk_margin(
    tree: &ScenarioTree,
    rates: &RateModel,
    result: &ValuationResult,
) -> Result<Vec<f64>, MarginError> {
    let curve = curve_of(tree, rates)?;
    let q: Vec<f64> = (0..tree.len())
        .map(|i| result.node(NodeId(i)).map_or(0.0, |n| n.dividend))
        .collect();
    Ok(expected_pv_sum(tree, curve, &q)?)
}

/// `sum_s pv(E[X_s + D_s | n], s+1 -> t)`.
pub fn closed_form_bound(
    tree: &ScenarioTree,
    rates: &RateModel,
    result: &ValuationResult,
) -> Result<Vec<f64>, MarginError> {
    let curve = curve_of(tree, rates)?;
    let q: Vec<f64> = (0..tree.len())
        .map(|i| {
            let id = NodeId(i);
            expectation(tree, id, |_, x| x) + result.node(id).map_or(0.0, |n| n.dividend)
        })
        .collect();
    Ok(expected_pv_sum(tree, curve, &q)?)
}

/// `pv(E[X_t] + E[V_{t+1}] + D_t)` with the engine's `V_{t+1}` and one-year
/// rate at each node. Always an upper bound; a violation is an error.
pub fn recursive_bound(
    tree: &ScenarioTree,
    result: &ValuationResult,
) -> Result<Vec<f64>, MarginError> {
    let mut bound = vec![0.0; tree.len()];
    for id in tree.node_ids() {
        let Some(nv) = result.node(id) else { continue };
        let mean_y = expectation(tree, id, |c, x| x + result.value(c));
        let b = (mean_y + nv.dividend) / (1.0 + nv.rate);
        if nv.value > b + BOUND_TOLERANCE {
            return Err(MarginError::BoundViolated {
                bound: "recursive bound".into(),
                node: tree.label(id).to_owned(),
                lhs: nv.value,
                rhs: b,
            });
        }
        bound[id.0] = b;
    }
    Ok(bound)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustedMargin {
    /// `RM~` at every node, indexed by [`NodeId`].
    pub margin: Vec<f64>,
    /// The risk-measure term `rho{tv(BE_t) - X_t - BE_{t+1} - dDP_{t+1}}`.
    pub rho_terms: Vec<f64>,
    /// Whether every `rho` term has the sign of the one-year rate, as the
    /// bound `V_0 <= BE_0 + RM~_0` requires.
    pub sign_condition: bool,
}

/// `eta / (1 + eta) * sum_s pv(E[rho{tv(BE_s) - X_s - BE_{s+1} - dDP_{s+1}}])`
/// with `dDP_{s+1} = DP_{s+1} - E[DP_{s+1} | F_s]`.
pub fn adjusted_expected_risk_margin(
    tree: &ScenarioTree,
    rates: &RateModel,
    spec: &RiskMeasureSpec,
    rule: &DividendRule,
    best_estimate: &[f64],
    dividend_portfolio: &[f64],
) -> Result<AdjustedMargin, MarginError> {
    let eta = rule.eta().ok_or(MarginError::NonLinearRule)?;
    let curve = curve_of(tree, rates)?;
    let r1 = curve.spot_rate(1)?;
    let mut rho_terms = vec![0.0; tree.len()];
    for id in tree.node_ids().filter(|&id| !tree.is_leaf(id)) {
        let t = tree.time(id);
        let forward = curve.tv(best_estimate[id.0], t, t + 1)?;
        let mean_dp = expectation(tree, id, |c, _| dividend_portfolio[c.0]);
        let z = ConditionalDistribution::new(
            tree.edges(id)
                .iter()
                .map(|e| {
                    let c = e.target.0;
                    Atom::new(
                        forward
                            - (e.cash_flow + best_estimate[c])
                            - (dividend_portfolio[c] - mean_dp),
                        e.prob,
                    )
                })
                .collect(),
        )?;
        rho_terms[id.0] = spec.rho(&z);
    }
    let sign_condition = rho_terms.iter().all(|&r| r * r1 >= 0.0);
    let factor = eta / (1.0 + eta);
    let margin = expected_pv_sum(tree, curve, &rho_terms)?
        .into_iter()
        .map(|s| factor * s)
        .collect();
    Ok(AdjustedMargin {
        margin,
        rho_terms,
        sign_condition,
    })
}

/// Simplified margin with the dividend-portfolio fluctuation dropped:
/// `factor * sum_s pv(E[rho{tv(BE_s) - X_s - BE_{s+1}}])`, at the root.
pub fn practitioner_margin(
    tree: &ScenarioTree,
    rates: &RateModel,
    spec: &RiskMeasureSpec,
    eta: f64,
    epsilon: f64,
    variant: PractitionerVariant,
) -> Result<f64, MarginError> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(MarginError::InvalidEpsilon(epsilon));
    }
    let curve = curve_of(tree, rates)?;
    let be = best_estimate(tree, rates)?;
    let mut q = vec![0.0; tree.len()];
    for id in tree.node_ids().filter(|&id| !tree.is_leaf(id)) {
        let t = tree.time(id);
        let forward = curve.tv(be[id.0], t, t + 1)?;
        let z = ConditionalDistribution::new(
            tree.edges(id)
                .iter()
                .map(|e| Atom::new(forward - e.cash_flow - be[e.target.0], e.prob))
                .collect(),
        )?;
        q[id.0] = spec.rho(&z);
    }
    let factor = match variant {
        PractitionerVariant::Paper => eta * (1.0 + epsilon) / (1.0 + eta),
        PractitionerVariant::SolvencyPractice => eta,
    };
    Ok(factor * expected_pv_sum(tree, curve, &q)?[tree.root().0])
}

/// An inequality `lhs <= rhs` checked over all nodes.
// Whether the closed-form, dividend-portfolio and adjusted bounds may be
// asserted. Pushes the reason to `warnings` when they may not.
fn curve_hypotheses(
    tree: &ScenarioTree,
    curve: &TermStructure,
    premium: &LiquidityCheck,
    warnings: &mut Vec<String>,
) -> bool {
    if !premium.holds {
        warnings.push(format!(
            "forward bond prices carry a negative liquidity premium (slack {:.3e}); \
             closed-form, dividend-portfolio and adjusted bounds are reported but not asserted",
            premium.slack
        ));
        return false;
    }
    let negative = tree
        .node_ids()
        .flat_map(|id| tree.edges(id))
        .any(|e| e.cash_flow < 0.0);
    if negative && !curve.is_flat() {
        warnings.push(
            "negative cash flows on a non-flat curve can turn the liquidity premium against the liability; \
             closed-form, dividend-portfolio and adjusted bounds are reported but not asserted"
                .into(),
        );
        return false;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    /// Whether the hypotheses hold, so that a violation is an error.
    pub asserted: bool,
    /// Smallest `rhs - lhs` over the nodes.
    pub min_slack: f64,
    pub node: Option<String>,
}

impl BoundCheck {
    fn over<'a>(
        name: &str,
        asserted: bool,
        tree: &ScenarioTree,
        pairs: impl Iterator<Item = (NodeId, f64, f64)> + 'a,
    ) -> Result<Self, MarginError> {
        let mut worst: Option<(NodeId, f64, f64)> = None;
        for (id, lhs, rhs) in pairs {
            if worst.is_none_or(|(_, l, r)| rhs - lhs < r - l) {
                worst = Some((id, lhs, rhs));
            }
        }
        let Some((id, lhs, rhs)) = worst else {
            return Ok(BoundCheck {
                name: name.to_owned(),
                asserted,
                min_slack: 0.0,
                node: None,
            });
        };
        if asserted && lhs > rhs + BOUND_TOLERANCE {
            return Err(MarginError::BoundViolated {
                bound: name.to_owned(),
                node: tree.label(id).to_owned(),
                lhs,
                rhs,
            });
        }
        Ok(BoundCheck {
            name: name.to_owned(),
            asserted,
            min_slack: rhs - lhs,
            node: Some(tree.label(id).to_owned()),
        })
    }

    pub fn holds(&self) -> bool {
        self.min_slack >= -BOUND_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeMargins {
    pub node: String,
    pub time: u32,
    pub probability: f64,
    pub value: f64,
    pub best_estimate: f64,
    pub dividend_portfolio: f64,
    pub expected_risk_margin: f64,
    pub adjusted_risk_margin: Option<f64>,
    pub closed_form_bound: f64,
    pub recursive_bound: f64,
    /// `tv(BE_t) - E[X_t + BE_{t+1}]`.
    pub best_estimate_slack: f64,
}

/// Unconditional expectations of the node quantities at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeMargins {
    pub time: u32,
    pub value: f64,
    pub best_estimate: f64,
    pub dividend_portfolio: f64,
    pub expected_risk_margin: f64,
    pub adjusted_risk_margin: Option<f64>,
    pub closed_form_bound: f64,
    pub recursive_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub nodes: Vec<NodeMargins>,
    pub times: Vec<TimeMargins>,
    pub epsilon: f64,
    pub value: f64,
    pub best_estimate: f64,
    pub dividend_portfolio: f64,
    pub expected_risk_margin: f64,
    pub adjusted_risk_margin: Option<f64>,
    pub practitioner_margin: Option<f64>,
    pub solvency_practice_margin: Option<f64>,
    pub liquidity_premium: LiquidityCheck,
    pub checks: Vec<BoundCheck>,
    pub warnings: Vec<String>,
}

/// Decomposition, margins and bounds for a valued tree under a
/// deterministic curve.
pub fn margin_report(
    tree: &ScenarioTree,
    rates: &RateModel,
    spec: &RiskMeasureSpec,
    rule: &DividendRule,
    result: &ValuationResult,
    epsilon: f64,
) -> Result<MarginReport, MarginError> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(MarginError::InvalidEpsilon(epsilon));
    }
    let curve = curve_of(tree, rates)?;
    let premium = curve.deterministic_liquidity_premium(tree.horizon() + 1)?;
    let mut warnings = Vec::new();
    let asserted = curve_hypotheses(tree, curve, &premium, &mut warnings);

    let be = best_estimate(tree, rates)?;
    let dp = dividend_portfolio(tree, rates, spec, rule, result, &be)?;
    let rm = expected_risk_margin(tree, rates, result)?;
    let cf = closed_form_bound(tree, rates, result)?;
    let rec = recursive_bound(tree, result)?;
    let adjusted = match rule {
        DividendRule::Linear { .. } => Some(adjusted_expected_risk_margin(
            tree, rates, spec, rule, &be, &dp,
        )?),
        _ => {
            warnings.push(
                "adjusted expected risk margin needs a cost-of-capital dividend; skipped".into(),
            );
            None
        }
    };
    let r1 = curve.spot_rate(1)?;
    let slack: Vec<f64> = (0..tree.len())
        .map(|i| {
            let id = NodeId(i);
            if tree.is_leaf(id) {
                return 0.0;
            }
            be[i] * (1.0 + r1) - expectation(tree, id, |c, x| x + be[c.0])
        })
        .collect();

    let inner = || tree.node_ids().filter(|&id| !tree.is_leaf(id));
    let mut checks = vec![
        BoundCheck::over(
            "V <= recursive bound",
            true,
            tree,
            inner().map(|id| (id, result.value(id), rec[id.0])),
        )?,
        BoundCheck::over(
            "V <= BE + expected risk margin",
            asserted,
            tree,
            inner().map(|id| (id, result.value(id), cf[id.0])),
        )?,
        BoundCheck::over(
            "DP <= expected risk margin",
            asserted,
            tree,
            inner().map(|id| (id, dp[id.0], rm[id.0])),
        )?,
        BoundCheck::over(
            "E[X + BE'] <= tv(BE)",
            asserted,
            tree,
            inner().map(|id| {
                (
                    id,
                    be[id.0] * (1.0 + r1) - slack[id.0],
                    be[id.0] * (1.0 + r1),
                )
            }),
        )?,
    ];
    if let Some(adj) = &adjusted {
        if !adj.sign_condition {
            warnings.push(
                "some risk-measure terms of the adjusted margin have the opposite sign of the one-year rate; \
                 V0 <= BE0 + RM~0 is reported but not asserted"
                    .into(),
            );
        }
        let root = tree.root();
        checks.push(BoundCheck::over(
            "V0 <= BE0 + adjusted risk margin",
            asserted && adj.sign_condition,
            tree,
            std::iter::once((root, result.value(root), be[root.0] + adj.margin[root.0])),
        )?);
    }
    for c in checks.iter().filter(|c| !c.asserted && !c.holds()) {
        warnings.push(format!(
            "{} fails (slack {:.6e}) outside its hypotheses",
            c.name, c.min_slack
        ));
    }

    let (practitioner, solvency) = match rule.eta() {
        Some(eta) => (
            Some(practitioner_margin(
                tree,
                rates,
                spec,
                eta,
                epsilon,
                PractitionerVariant::Paper,
            )?),
            Some(practitioner_margin(
                tree,
                rates,
                spec,
                eta,
                0.0,
                PractitionerVariant::SolvencyPractice,
            )?),
        ),
        None => (None, None),
    };

    let probability = tree.node_probabilities();
    let nodes: Vec<NodeMargins> = tree
        .node_ids()
        .map(|id| {
            let i = id.0;
            NodeMargins {
                node: tree.label(id).to_owned(),
                time: tree.time(id),
                probability: probability[i],
                value: result.value(id),
                best_estimate: be[i],
                dividend_portfolio: dp[i],
                expected_risk_margin: rm[i],
                adjusted_risk_margin: adjusted.as_ref().map(|a| a.margin[i]),
                closed_form_bound: cf[i],
                recursive_bound: rec[i],
                best_estimate_slack: slack[i],
            }
        })
        .collect();
    let mut row = vec![0; tree.len()];
    for (k, id) in tree.node_ids().enumerate() {
        row[id.0] = k;
    }
    let times = tree
        .levels()
        .iter()
        .map(|level| {
            let avg = |f: &dyn Fn(&NodeMargins) -> f64| {
                compensated_sum(level.iter().map(|id| {
                    let n = &nodes[row[id.0]];
                    n.probability * f(n)
                }))
            };
            TimeMargins {
                time: tree.time(level[0]),
                value: avg(&|n| n.value),
                best_estimate: avg(&|n| n.best_estimate),
                dividend_portfolio: avg(&|n| n.dividend_portfolio),
                expected_risk_margin: avg(&|n| n.expected_risk_margin),
                adjusted_risk_margin: adjusted
                    .as_ref()
                    .map(|_| avg(&|n| n.adjusted_risk_margin.unwrap_or(0.0))),
                closed_form_bound: avg(&|n| n.closed_form_bound),
                recursive_bound: avg(&|n| n.recursive_bound),
            }
        })
        .collect();

    let root = tree.root().0;
    Ok(MarginReport {
        value: result.root_value(),
        best_estimate: be[root],
        dividend_portfolio: dp[root],
        expected_risk_margin: rm[root],
        adjusted_risk_margin: adjusted.as_ref().map(|a| a.margin[root]),
        practitioner_margin: practitioner,
        solvency_practice_margin: solvency,
        nodes,
        times,
        epsilon,
        liquidity_premium: premium,
        checks,
        warnings,
    })
}

/// Upper bounds available without a deterministic curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub value: f64,
    pub recursive_bound: Vec<f64>,
    pub closed_form_bound: Option<Vec<f64>>,
    pub checks: Vec<BoundCheck>,
    pub warnings: Vec<String>,
}

pub fn bounds_report(
    tree: &ScenarioTree,
    rates: &RateModel,
    result: &ValuationResult,
) -> Result<BoundsReport, MarginError> {
    let rec = recursive_bound(tree, result)?;
    let inner = || tree.node_ids().filter(|&id| !tree.is_leaf(id));
    let mut checks = vec![BoundCheck::over(
        "V <= recursive bound",
        true,
        tree,
        inner().map(|id| (id, result.value(id), rec[id.0])),
    )?];
    let mut warnings = Vec::new();
    let closed = match rates.curve() {
        Some(curve) => {
            curve.covers(tree.horizon() + 1)?;
            let premium = curve.deterministic_liquidity_premium(tree.horizon() + 1)?;
            let cf = closed_form_bound(tree, rates, result)?;
            let asserted = curve_hypotheses(tree, curve, &premium, &mut warnings);
            let check = BoundCheck::over(
                "V <= BE + expected risk margin",
                asserted,
                tree,
                inner().map(|id| (id, result.value(id), cf[id.0])),
            )?;
            if !check.asserted && !check.holds() {
                warnings.push(format!(
                    "{} fails (slack {:.6e}) outside its hypotheses",
                    check.name, check.min_slack
                ));
            }
            checks.push(check);
            Some(cf)
        }
        None => {
            warnings.push("closed-form bound needs a deterministic curve; not computed".into());
            None
        }
    };
    Ok(BoundsReport {
        value: result.root_value(),
        recursive_bound: rec,
        closed_form_bound: closed,
        checks,
        warnings,
    })
}

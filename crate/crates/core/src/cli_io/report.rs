//! Reports: JSON for machines, aligned tables for people. Numbers carry ten
//! significant digits in both.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::analytic_normal::{AnalyticValues, PropositionReport};
use crate::margin_bounds::{BoundCheck, BoundsReport, MarginReport};
use crate::scenario_tree::{ScenarioTree, ValidationReport};
use crate::valuation_engine::ValuationResult;

use super::oracle::OracleEstimate;

pub const SIGNIFICANT_DIGITS: usize = 10;

/// Echo of the settings a report was produced with.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dividend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunMeta {
    pub fn new(command: &str) -> Self {
        RunMeta {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRow {
    pub node: String,
    pub time: u32,
    pub value: f64,
    pub capital: f64,
    pub dividend: f64,
    pub gamma: f64,
    pub rho: f64,
    pub rate: f64,
    /// Number of children in the continuation set `A`, out of `children`.
    pub continuing: usize,
    pub children: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeRow {
    pub time: u32,
    pub nodes: usize,
    pub expected_value: f64,
    pub expected_capital: f64,
    pub expected_dividend: f64,
}

/// Analytic value printed next to an engine value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticComparison {
    pub analytic_v0: f64,
    pub difference: f64,
    pub atoms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueReport {
    pub meta: RunMeta,
    pub value: f64,
    pub capital: f64,
    pub dividend: f64,
    pub gamma: f64,
    pub rho: f64,
    pub max_residual: f64,
    pub nodes: Vec<NodeRow>,
    pub times: Vec<TimeRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticComparison>,
    pub warnings: Vec<String>,
}

impl ValueReport {
    pub fn new(
        meta: RunMeta,
        tree: &ScenarioTree,
        result: &ValuationResult,
        max_residual: f64,
    ) -> Self {
        let prob = tree.node_probabilities();
        let nodes: Vec<NodeRow> = tree
            .node_ids()
            .filter_map(|id| {
                let nv = result.node(id)?;
                Some(NodeRow {
                    node: tree.label(id).to_owned(),
                    time: tree.time(id),
                    value: nv.value,
                    capital: nv.capital,
                    dividend: nv.dividend,
                    gamma: nv.gamma,
                    rho: nv.rho,
                    rate: nv.rate,
                    continuing: nv.continuation.iter().filter(|&&a| a).count(),
                    children: nv.continuation.len(),
                })
            })
            .collect();
        let times = tree
            .levels()
            .iter()
            .filter(|level| !tree.is_leaf(level[0]))
            .map(|level| {
                let avg = |f: &dyn Fn(&crate::NodeValuation) -> f64| -> f64 {
                    level
                        .iter()
                        .map(|&id| prob[id.0] * result.node(id).map_or(0.0, f))
                        .sum()
                };
                TimeRow {
                    time: tree.time(level[0]),
                    nodes: level.len(),
                    expected_value: avg(&|n| n.value),
                    expected_capital: avg(&|n| n.capital),
                    expected_dividend: avg(&|n| n.dividend),
                }
            })
            .collect();
        let root = result.root();
        ValueReport {
            meta,
            value: root.value,
            capital: root.capital,
            dividend: root.dividend,
            gamma: root.gamma,
            rho: root.rho,
            max_residual,
            nodes,
            times,
            analytic: None,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginOutput {
    pub meta: RunMeta,
    pub max_residual: f64,
    /// Largest `|BE + DP - V|` over the nodes.
    pub max_decomposition_error: f64,
    #[serde(flatten)]
    pub margins: MarginReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsOutput {
    pub meta: RunMeta,
    pub max_residual: f64,
    pub nodes: Vec<BoundRow>,
    pub checks: Vec<BoundCheck>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub node: String,
    pub time: u32,
    pub value: f64,
    pub recursive_bound: f64,
    pub closed_form_bound: Option<f64>,
}

impl BoundsOutput {
    pub fn new(
        meta: RunMeta,
        tree: &ScenarioTree,
        result: &ValuationResult,
        bounds: BoundsReport,
        max_residual: f64,
    ) -> Self {
        let nodes = tree
            .node_ids()
            .filter(|&id| !tree.is_leaf(id))
            .map(|id| BoundRow {
                node: tree.label(id).to_owned(),
                time: tree.time(id),
                value: result.value(id),
                recursive_bound: bounds.recursive_bound[id.0],
                closed_form_bound: bounds.closed_form_bound.as_ref().map(|b| b[id.0]),
            })
            .collect();
        BoundsOutput {
            meta,
            max_residual,
            nodes,
            checks: bounds.checks,
            warnings: bounds.warnings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleOutput {
    pub meta: RunMeta,
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
    pub eta: f64,
    pub quantile: f64,
    pub density_at_quantile: f64,
    pub f: f64,
    pub g: f64,
    pub values: AnalyticValues,
    pub upper_bound: f64,
    pub proposition: PropositionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutput {
    pub meta: RunMeta,
    pub node: String,
    #[serde(flatten)]
    pub estimate: OracleEstimate,
    pub z_score: f64,
    pub within_three_standard_errors: bool,
    /// The same expectation computed exactly over the children.
    pub exact_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateOutput {
    pub meta: RunMeta,
    pub valid: bool,
    pub nodes: usize,
    pub violations: Vec<String>,
}

impl ValidateOutput {
    pub fn new(meta: RunMeta, nodes: usize, report: &ValidationReport) -> Self {
        ValidateOutput {
            meta,
            valid: report.is_valid(),
            nodes,
            violations: report.violations.iter().map(|v| v.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Report {
    Value(ValueReport),
    Margin(MarginOutput),
    Bounds(BoundsOutput),
    Example(ExampleOutput),
    Oracle(OracleOutput),
    Validate(ValidateOutput),
}

/// Rounds to ten significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap());
            serde_json::Number::from_f64(x)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| (k, round_value(v)))
                .collect::<Map<_, _>>(),
        ),
        v => v,
    }
}

/// Human-readable number with ten significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..10).contains(&magnitude) {
        return format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Left-aligned first column, right-aligned numbers.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&width).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - cell.chars().count();
            if i == 0 {
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            }
        }
        s.trim_end().to_owned()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    out.push_str(&line(
        width
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect(),
    ));
    for row in rows {
        out.push('\n');
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out.push('\n');
    out
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), fmt_num)
}

fn checks_text(out: &mut String, checks: &[BoundCheck], warnings: &[String]) {
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                if c.asserted { "yes" } else { "no" }.into(),
                if c.holds() { "holds" } else { "FAILS" }.into(),
                fmt_num(c.min_slack),
                c.node.clone().unwrap_or_default(),
            ]
        })
        .collect();
    out.push('\n');
    out.push_str(&table(
        &["check", "asserted", "status", "min slack", "at node"],
        &rows,
    ));
    for w in warnings {
        let _ = writeln!(out, "warning: {w}");
    }
}

impl Report {
    pub fn to_json(&self) -> Value {
        round_value(serde_json::to_value(self).expect("reports serialize"))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json value prints")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Value(r) => {
                let _ = writeln!(out, "V_0 = {}", fmt_num(r.value));
                let _ = writeln!(out, "C_0 = {}", fmt_num(r.capital));
                let _ = writeln!(out, "D_0 = {}", fmt_num(r.dividend));
                let _ = writeln!(out, "gamma_0 = {}", fmt_num(r.gamma));
                let _ = writeln!(out, "rho_0 = {}", fmt_num(r.rho));
                let _ = writeln!(out, "max |acceptability residual| = {:.3e}", r.max_residual);
                if let Some(a) = &r.analytic {
                    let _ = writeln!(
                        out,
                        "analytic V_0 = {}  (engine - analytic = {:.3e}, {} atoms per year)",
                        fmt_num(a.analytic_v0),
                        a.difference,
                        a.atoms
                    );
                }
                out.push('\n');
                let rows: Vec<Vec<String>> = r
                    .nodes
                    .iter()
                    .map(|n| {
                        vec![
                            n.node.clone(),
                            n.time.to_string(),
                            fmt_num(n.value),
                            fmt_num(n.capital),
                            fmt_num(n.dividend),
                            fmt_num(n.gamma),
                            fmt_num(n.rho),
                            fmt_num(n.rate),
                            format!("{}/{}", n.continuing, n.children),
                        ]
                    })
                    .collect();
                out.push_str(&table(
                    &["node", "t", "V", "C", "D", "gamma", "rho", "R", "A"],
                    &rows,
                ));
                out.push('\n');
                let rows: Vec<Vec<String>> = r
                    .times
                    .iter()
                    .map(|t| {
                        vec![
                            t.time.to_string(),
                            t.nodes.to_string(),
                            fmt_num(t.expected_value),
                            fmt_num(t.expected_capital),
                            fmt_num(t.expected_dividend),
                        ]
                    })
                    .collect();
                out.push_str(&table(&["t", "nodes", "E[V]", "E[C]", "E[D]"], &rows));
                for w in &r.warnings {
                    let _ = writeln!(out, "warning: {w}");
                }
            }
            Report::Margin(r) => {
                let m = &r.margins;
                let _ = writeln!(out, "V_0 = {}", fmt_num(m.value));
                let _ = writeln!(out, "BE_0 = {}", fmt_num(m.best_estimate));
                let _ = writeln!(out, "DP_0 = {}", fmt_num(m.dividend_portfolio));
                let _ = writeln!(
                    out,
                    "expected risk margin RM_0 = {}",
                    fmt_num(m.expected_risk_margin)
                );
                let _ = writeln!(
                    out,
                    "adjusted risk margin RM~_0 = {}",
                    opt(m.adjusted_risk_margin)
                );
                let _ = writeln!(
                    out,
                    "practitioner margin (epsilon = {}) = {}",
                    fmt_num(m.epsilon),
                    opt(m.practitioner_margin)
                );
                let _ = writeln!(
                    out,
                    "solvency-practice margin = {}",
                    opt(m.solvency_practice_margin)
                );
                let _ = writeln!(out, "max |acceptability residual| = {:.3e}", r.max_residual);
                let _ = writeln!(out, "max |BE + DP - V| = {:.3e}", r.max_decomposition_error);
                out.push('\n');
                let rows: Vec<Vec<String>> = m
                    .nodes
                    .iter()
                    .map(|n| {
                        vec![
                            n.node.clone(),
                            n.time.to_string(),
                            fmt_num(n.value),
                            fmt_num(n.best_estimate),
                            fmt_num(n.dividend_portfolio),
                            fmt_num(n.expected_risk_margin),
                            opt(n.adjusted_risk_margin),
                            fmt_num(n.recursive_bound),
                            fmt_num(n.closed_form_bound),
                        ]
                    })
                    .collect();
                out.push_str(&table(
                    &[
                        "node",
                        "t",
                        "V",
                        "BE",
                        "DP",
                        "RM",
                        "RM~",
                        "rec. bound",
                        "BE+RM",
                    ],
                    &rows,
                ));
                out.push('\n');
                let rows: Vec<Vec<String>> = m
                    .times
                    .iter()
                    .map(|t| {
                        vec![
                            t.time.to_string(),
                            fmt_num(t.value),
                            fmt_num(t.best_estimate),
                            fmt_num(t.dividend_portfolio),
                            fmt_num(t.expected_risk_margin),
                            opt(t.adjusted_risk_margin),
                        ]
                    })
                    .collect();
                out.push_str(&table(
                    &["t", "E[V]", "E[BE]", "E[DP]", "E[RM]", "E[RM~]"],
                    &rows,
                ));
                checks_text(&mut out, &m.checks, &m.warnings);
            }
            Report::Bounds(r) => {
                let _ = writeln!(out, "max |acceptability residual| = {:.3e}", r.max_residual);
                out.push('\n');
                let rows: Vec<Vec<String>> = r
                    .nodes
                    .iter()
                    .map(|n| {
                        vec![
                            n.node.clone(),
                            n.time.to_string(),
                            fmt_num(n.value),
                            fmt_num(n.recursive_bound),
                            opt(n.closed_form_bound),
                        ]
                    })
                    .collect();
                out.push_str(&table(
                    &["node", "t", "V", "recursive bound", "BE+RM"],
                    &rows,
                ));
                checks_text(&mut out, &r.checks, &r.warnings);
            }
            Report::Example(r) => {
                let p = &r.proposition;
                let _ = writeln!(
                    out,
                    "mu = ({}, {}), sigma = ({}, {}), alpha = {}, eta = {}",
                    fmt_num(r.mu[0]),
                    fmt_num(r.mu[1]),
                    fmt_num(r.sigma[0]),
                    fmt_num(r.sigma[1]),
                    opt(r.meta.alpha),
                    fmt_num(r.eta)
                );
                let _ = writeln!(
                    out,
                    "q_alpha = {}, phi(q_alpha) = {}",
                    fmt_num(r.quantile),
                    fmt_num(r.density_at_quantile)
                );
                let _ = writeln!(
                    out,
                    "f(alpha) = {}, g(alpha) = {}",
                    fmt_num(r.f),
                    fmt_num(r.g)
                );
                out.push('\n');
                let rows = vec![
                    vec!["V_1".into(), fmt_num(r.values.v1)],
                    vec!["V_0".into(), fmt_num(r.values.v0)],
                    vec!["V_0^u".into(), fmt_num(r.upper_bound)],
                    vec!["V_0(L2)".into(), fmt_num(p.value_l2)],
                    vec!["V_0^u(L2)".into(), fmt_num(p.upper_l2)],
                ];
                out.push_str(&table(&["quantity", "value"], &rows));
                out.push('\n');
                let yes = |b: bool| if b { "yes" } else { "no" };
                let _ = writeln!(out, "V_0(L_i) < V_0^u(L_i): {}", yes(p.values_below_bounds));
                let _ = writeln!(out, "V_0^u(L2) < V_0^u(L1): {}", yes(p.bounds_ordered));
                let _ = writeln!(out, "reversal V_0(L1) < V_0(L2): {}", yes(p.reversal));
                let _ = writeln!(out, "threshold eta* = {}", fmt_num(p.threshold_eta));
                if let Some(note) = &p.note {
                    let _ = writeln!(out, "note: {note}");
                }
            }
            Report::Oracle(r) => {
                let _ = writeln!(out, "node = {}", r.node);
                let _ = writeln!(
                    out,
                    "paths = {}, seed = {}",
                    r.estimate.paths, r.estimate.seed
                );
                let _ = writeln!(out, "estimate = {}", fmt_num(r.estimate.estimate));
                let _ = writeln!(
                    out,
                    "standard error = {}",
                    fmt_num(r.estimate.standard_error)
                );
                let _ = writeln!(out, "z = {}", fmt_num(r.z_score));
                let _ = writeln!(
                    out,
                    "within 3 standard errors: {}",
                    if r.within_three_standard_errors {
                        "yes"
                    } else {
                        "no"
                    }
                );
                let _ = writeln!(out, "exact residual = {:.3e}", r.exact_residual);
            }
            Report::Validate(r) => {
                if r.valid {
                    let _ = writeln!(out, "valid tree ({} nodes)", r.nodes);
                } else {
                    let _ = writeln!(out, "invalid tree ({} violations)", r.violations.len());
                    for v in &r.violations {
                        let _ = writeln!(out, "  {v}");
                    }
                }
            }
        }
        out
    }
}

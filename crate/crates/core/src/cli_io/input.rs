//! JSON input files.
//!
//! ```json
//! {
//!   "kind": "tree",
//!   "curve": {"flat": 0.0},
//!   "risk": {"alpha": 0.9},
//!   "dividend": {"eta": 0.06},
//!   "nodes": [
//!     {"id": "0", "parent": null},
//!     {"id": "a", "parent": "0", "p": 0.7, "x": 0}
//!   ]
//! }
//! ```
//!
//! `curve` may also be `{"spot": [{"maturity": 1, "rate": 0.01}, ...]}`. When
//! it is absent, a tree uses the per-node one-year rates `r`. The dividend is
//! either `{"eta": e}` or `{"table": [[C, D], ...]}`. A `normal_example` file
//! carries `mu`, `sigma` (two entries each) and optionally `n`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic_normal::NormalLiabilitySpec;
use crate::dividend::DividendRule;
use crate::risk_measure::RiskMeasureSpec;
use crate::scenario_tree::{ScenarioTree, TreeError, TreeNode, ValidationReport};
use crate::term_structure::{RateModel, TermStructure};

/// Default number of atoms per year for generated normal trees.
pub const DEFAULT_ATOMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Tree,
    NormalExample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveInput {
    Flat(f64),
    Spot(Vec<SpotPoint>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpotPoint {
    pub maturity: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskInput {
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DividendInput {
    Eta(f64),
    Table(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeInput {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
}

fn one() -> f64 {
    1.0
}

impl From<&NodeInput> for TreeNode {
    fn from(n: &NodeInput) -> Self {
        TreeNode {
            id: n.id.clone(),
            parent: n.parent.clone(),
            time: n.t,
            cond_prob: n.p,
            cash_flow: n.x,
            short_rate: n.r,
        }
    }
}

impl From<&TreeNode> for NodeInput {
    fn from(n: &TreeNode) -> Self {
        NodeInput {
            id: n.id.clone(),
            parent: n.parent.clone(),
            p: n.cond_prob,
            x: n.cash_flow,
            r: n.short_rate,
            t: n.time,
        }
    }
}

/// The file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFile {
    pub kind: InputKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveInput>,
    pub risk: RiskInput,
    pub dividend: DividendInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<NodeInput>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone)]
pub enum Model {
    Tree(ScenarioTree),
    Normal { spec: NormalLiabilitySpec, n: usize },
}

/// A fully validated input.
#[derive(Debug, Clone)]
pub struct ParsedInput {
    pub model: Model,
    pub rates: RateModel,
    pub risk: RiskMeasureSpec,
    pub rule: DividendRule,
    pub file: InputFile,
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(Issues),
    #[error("{0}")]
    Tree(#[from] TreeError),
}

/// Validation failures, each tagged with its location in the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Issues(pub Vec<(String, String)>);

impl Issues {
    fn push(&mut self, location: &str, message: impl Into<String>) {
        self.0.push((location.to_owned(), message.into()));
    }
}

impl fmt::Display for Issues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (loc, msg)) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{loc}: {msg}")?;
        }
        Ok(())
    }
}

pub fn parse_input(path: &Path) -> Result<ParsedInput, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_str(&text)
}

pub fn read_file(text: &str) -> Result<InputFile, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_str(text: &str) -> Result<ParsedInput, InputError> {
    read_file(text)?.into_parsed()
}

/// Node-list check without valuation settings; used by `validate`.
pub fn validate_nodes(file: &InputFile) -> Option<ValidationReport> {
    file.nodes.as_ref().map(|nodes| {
        let nodes: Vec<TreeNode> = nodes.iter().map(TreeNode::from).collect();
        crate::scenario_tree::validate(&nodes)
    })
}

impl InputFile {
    pub fn into_parsed(self) -> Result<ParsedInput, InputError> {
        let mut issues = Issues::default();
        let risk = RiskMeasureSpec::value_at_risk(self.risk.alpha)
            .map_err(|e| issues.push("risk.alpha", e.to_string()))
            .ok();
        let rule = self
            .dividend_rule()
            .map_err(|(loc, msg)| issues.push(&loc, msg))
            .ok();
        let curve = match &self.curve {
            None => None,
            Some(c) => curve_from(c)
                .map_err(|(loc, msg)| issues.push(&loc, msg))
                .ok(),
        };

        let model = match self.kind {
            InputKind::Tree => {
                if self.mu.is_some() || self.sigma.is_some() || self.n.is_some() {
                    issues.push("kind", "mu, sigma and n only apply to normal_example");
                }
                match &self.nodes {
                    None => {
                        issues.push("nodes", "a tree needs a node list");
                        None
                    }
                    Some(nodes) => {
                        let nodes: Vec<TreeNode> = nodes.iter().map(TreeNode::from).collect();
                        let report = crate::scenario_tree::validate(&nodes);
                        for v in &report.violations {
                            let loc = match v.index {
                                Some(i) => format!("nodes[{i}]"),
                                None => "nodes".to_owned(),
                            };
                            let mut v = v.clone();
                            v.index = None;
                            issues.push(&loc, v.to_string());
                        }
                        if report.is_valid() {
                            Some(Model::Tree(ScenarioTree::from_nodes(&nodes)?))
                        } else {
                            None
                        }
                    }
                }
            }
            InputKind::NormalExample => {
                if self.nodes.is_some() {
                    issues.push("nodes", "a normal_example file has no node list");
                }
                if !matches!(self.dividend, DividendInput::Eta(_)) {
                    issues.push(
                        "dividend",
                        "the normal example needs a cost-of-capital rate {\"eta\": e}",
                    );
                }
                let n = self.n.unwrap_or(DEFAULT_ATOMS);
                if n == 0 {
                    issues.push("n", "needs at least one atom");
                }
                match (self.mu, self.sigma) {
                    (Some(mu), Some(sigma)) => {
                        let eta = match self.dividend {
                            DividendInput::Eta(e) => e,
                            DividendInput::Table(_) => 1.0,
                        };
                        match NormalLiabilitySpec::new(mu, sigma, self.risk.alpha, eta) {
                            Ok(spec) => Some(Model::Normal { spec, n }),
                            Err(e) => {
                                issues.push("mu/sigma", e.to_string());
                                None
                            }
                        }
                    }
                    _ => {
                        issues.push(
                            "mu/sigma",
                            "normal_example needs mu and sigma, two entries each",
                        );
                        None
                    }
                }
            }
        };

        if let (Some(Model::Tree(tree)), None) = (&model, &curve) {
            for id in tree.node_ids().filter(|&id| !tree.is_leaf(id)) {
                if tree.short_rate(id).is_none() {
                    issues.push(
                        &format!("nodes (id '{}')", tree.label(id)),
                        "no curve given, so every non-leaf node needs a one-year rate r",
                    );
                }
            }
        }
        if let (Some(Model::Tree(tree)), Some(c)) = (&model, &curve) {
            if let Err(e) = c.covers(1) {
                issues.push("curve", e.to_string());
            } else if c.covers(tree.horizon() + 1).is_err() {
                issues.push(
                    "curve",
                    format!(
                        "spot rates up to maturity {} are needed for margins and bounds",
                        tree.horizon() + 1
                    ),
                );
            }
        }

        if !issues.0.is_empty() {
            return Err(InputError::Invalid(issues));
        }
        let rates = match (&model, curve) {
            (_, Some(c)) => RateModel::Curve(c),
            (Some(Model::Normal { .. }), None) => RateModel::Curve(TermStructure::Flat(0.0)),
            _ => RateModel::NodeShortRates,
        };
        Ok(ParsedInput {
            model: model.unwrap(),
            rates,
            risk: risk.unwrap(),
            rule: rule.unwrap(),
            file: self,
        })
    }

    fn dividend_rule(&self) -> Result<DividendRule, (String, String)> {
        match &self.dividend {
            DividendInput::Eta(e) => DividendRule::cost_of_capital(*e)
                .map_err(|err| ("dividend.eta".to_owned(), err.to_string())),
            DividendInput::Table(rows) => {
                let points: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
                DividendRule::table(&points)
                    .map_err(|err| ("dividend.table".to_owned(), err.to_string()))
            }
        }
    }
}

fn curve_from(c: &CurveInput) -> Result<TermStructure, (String, String)> {
    match c {
        CurveInput::Flat(r) => {
            TermStructure::flat(*r).map_err(|e| ("curve.flat".to_owned(), e.to_string()))
        }
        CurveInput::Spot(points) => {
            TermStructure::from_spot(points.iter().map(|p| (p.maturity, p.rate)))
                .map_err(|e| ("curve.spot".to_owned(), e.to_string()))
        }
    }
}

impl ParsedInput {
    /// The input file rebuilt from the validated objects.
    pub fn to_file(&self) -> InputFile {
        let mut file = self.file.clone();
        if let Model::Tree(tree) = &self.model {
            if let Some(nodes) = tree.to_tree_nodes() {
                file.nodes = Some(nodes.iter().map(NodeInput::from).collect());
            }
        }
        file
    }
}

pub fn to_json(file: &InputFile) -> String {
    serde_json::to_string_pretty(file).expect("input files serialize")
}

//! Finite scenario trees.
//!
//! A tree is the finite filtration: nodes at time `t` are the states known at
//! `t`, and the edge from a node at time `t` to a child at `t + 1` carries the
//! cash flow `X_t` of year `t`, which is only known at the end of that year.
//! Leaves sit at time `T + 1` where `T` is the final cash-flow year.
//!
//! Internally every edge stores its target, conditional probability and cash
//! flow. Trees read from node lists have exactly one parent per node. Trees
//! built by [`ScenarioTree::from_layers`] share one continuation node per year
//! and carry the year's outcomes on parallel edges; this is how independent
//! yearly cash flows are valued without expanding `n^T` paths.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic_normal::{std_normal_pdf, std_normal_quantile};
use crate::distribution::{Atom, ConditionalDistribution, DistributionError};
use crate::{compensated_sum, PROB_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// A node as written in an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: String,
    pub parent: Option<String>,
    /// Optional; derived from the parent when absent.
    pub time: Option<u32>,
    /// Probability given the parent; 1 at the root.
    pub cond_prob: f64,
    /// Cash flow of year `time - 1`, realized on entering this node.
    pub cash_flow: f64,
    /// One-year rate `R_t^(1)` at this node, used only without a curve.
    pub short_rate: Option<f64>,
}

impl TreeNode {
    pub fn root(id: impl Into<String>) -> Self {
        TreeNode {
            id: id.into(),
            parent: None,
            time: Some(0),
            cond_prob: 1.0,
            cash_flow: 0.0,
            short_rate: None,
        }
    }

    pub fn child(
        id: impl Into<String>,
        parent: impl Into<String>,
        cond_prob: f64,
        cash_flow: f64,
    ) -> Self {
        TreeNode {
            id: id.into(),
            parent: Some(parent.into()),
            time: None,
            cond_prob,
            cash_flow,
            short_rate: None,
        }
    }

    pub fn with_short_rate(mut self, rate: f64) -> Self {
        self.short_rate = Some(rate);
        self
    }

    pub fn with_time(mut self, time: u32) -> Self {
        self.time = Some(time);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateId,
    NoRoot,
    MultipleRoots,
    UnknownParent { parent: String },
    RootProbability { prob: f64 },
    RootCashFlow { cash_flow: f64 },
    ProbabilityRange { prob: f64 },
    ProbabilitySum { sum: f64 },
    TimeInconsistency { expected: u32, found: u32 },
    Unreachable,
    LeafDepth { time: u32, horizon_end: u32 },
    RootIsLeaf,
    NonFiniteCashFlow { cash_flow: f64 },
    InvalidShortRate { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Node id, when the violation is attached to a node.
    pub node: Option<String>,
    /// Position in the input list.
    pub index: Option<usize>,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.index {
            write!(f, "nodes[{i}] ")?;
        }
        if let Some(id) = &self.node {
            write!(f, "(id '{id}'): ")?;
        }
        match &self.kind {
            ViolationKind::DuplicateId => write!(f, "duplicate node id"),
            ViolationKind::NoRoot => write!(f, "no root node (a node without parent)"),
            ViolationKind::MultipleRoots => write!(f, "more than one root node"),
            ViolationKind::UnknownParent { parent } => write!(f, "unknown parent '{parent}'"),
            ViolationKind::RootProbability { prob } => {
                write!(f, "root must have probability 1, got {prob}")
            }
            ViolationKind::RootCashFlow { cash_flow } => {
                write!(f, "root cash flow must be 0, got {cash_flow}")
            }
            ViolationKind::ProbabilityRange { prob } => {
                write!(f, "conditional probability {prob} outside (0, 1]")
            }
            ViolationKind::ProbabilitySum { sum } => {
                write!(f, "probabilities sum ≠ 1: children sum to {sum}")
            }
            ViolationKind::TimeInconsistency { expected, found } => {
                write!(
                    f,
                    "time inconsistency: time {found}, expected parent time + 1 = {expected}"
                )
            }
            ViolationKind::Unreachable => write!(f, "node not reachable from the root"),
            ViolationKind::LeafDepth { time, horizon_end } => {
                write!(
                    f,
                    "leaf at time {time}, but all leaves must sit at time {horizon_end}"
                )
            }
            ViolationKind::RootIsLeaf => write!(f, "root has no children"),
            ViolationKind::NonFiniteCashFlow { cash_flow } => {
                write!(f, "cash flow {cash_flow} is not finite")
            }
            ViolationKind::InvalidShortRate { rate } => {
                write!(f, "short rate {rate} must be finite and greater than -1")
            }
        }
    }
}

/// List of violated tree invariants; empty when the tree is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, node: Option<&str>, index: Option<usize>, kind: ViolationKind) {
        self.violations.push(Violation {
            node: node.map(str::to_owned),
            index,
            kind,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("invalid tree:\n{0}")]
    Invalid(ValidationReport),
    #[error("node {0} is a leaf")]
    LeafNode(String),
    #[error("incomplete assignment: no value for child {0}")]
    IncompleteAssignment(String),
    #[error("normal discretization needs sigma >= 0 and finite parameters, got mu = {mu}, sigma = {sigma}")]
    InvalidNormal { mu: f64, sigma: f64 },
    #[error("normal discretization needs at least one atom")]
    NoAtoms,
    #[error("tree needs at least one year of cash flows")]
    NoLayers,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub target: NodeId,
    pub prob: f64,
    pub cash_flow: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    label: String,
    time: u32,
    short_rate: Option<f64>,
    parent: Option<NodeId>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    nodes: Vec<Node>,
    root: NodeId,
    horizon: u32,
    levels: Vec<Vec<NodeId>>,
    shared: bool,
}

/// Checks a node list against the tree invariants.
pub fn validate(nodes: &[TreeNode]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.id.as_str(), i).is_some() {
            report.push(Some(&n.id), Some(i), ViolationKind::DuplicateId);
        }
    }

    let mut roots = Vec::new();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        if !n.cash_flow.is_finite() {
            report.push(
                Some(&n.id),
                Some(i),
                ViolationKind::NonFiniteCashFlow {
                    cash_flow: n.cash_flow,
                },
            );
        }
        if let Some(r) = n.short_rate {
            if !(r.is_finite() && r > -1.0) {
                report.push(
                    Some(&n.id),
                    Some(i),
                    ViolationKind::InvalidShortRate { rate: r },
                );
            }
        }
        match &n.parent {
            None => {
                roots.push(i);
                if n.cond_prob != 1.0 {
                    report.push(
                        Some(&n.id),
                        Some(i),
                        ViolationKind::RootProbability { prob: n.cond_prob },
                    );
                }
                if n.cash_flow != 0.0 {
                    report.push(
                        Some(&n.id),
                        Some(i),
                        ViolationKind::RootCashFlow {
                            cash_flow: n.cash_flow,
                        },
                    );
                }
            }
            Some(p) => {
                if !(n.cond_prob > 0.0 && n.cond_prob <= 1.0) {
                    report.push(
                        Some(&n.id),
                        Some(i),
                        ViolationKind::ProbabilityRange { prob: n.cond_prob },
                    );
                }
                match index.get(p.as_str()) {
                    Some(&pi) => children[pi].push(i),
                    None => report.push(
                        Some(&n.id),
                        Some(i),
                        ViolationKind::UnknownParent { parent: p.clone() },
                    ),
                }
            }
        }
    }

    match roots.len() {
        0 => {
            report.push(None, None, ViolationKind::NoRoot);
            return report;
        }
        1 => {}
        _ => {
            for &r in &roots[1..] {
                report.push(Some(&nodes[r].id), Some(r), ViolationKind::MultipleRoots);
            }
        }
    }
    let root = roots[0];

    // breadth-first times from the root
    let mut time: Vec<Option<u32>> = vec![None; nodes.len()];
    time[root] = Some(0);
    if let Some(t) = nodes[root].time {
        if t != 0 {
            report.push(
                Some(&nodes[root].id),
                Some(root),
                ViolationKind::TimeInconsistency {
                    expected: 0,
                    found: t,
                },
            );
        }
    }
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        let t = time[i].unwrap();
        for &c in &children[i] {
            if time[c].is_some() {
                continue;
            }
            time[c] = Some(t + 1);
            if let Some(given) = nodes[c].time {
                if given != t + 1 {
                    report.push(
                        Some(&nodes[c].id),
                        Some(c),
                        ViolationKind::TimeInconsistency {
                            expected: t + 1,
                            found: given,
                        },
                    );
                }
            }
            queue.push_back(c);
        }
    }
    for (i, n) in nodes.iter().enumerate() {
        if time[i].is_none()
            && n.parent.is_some()
            && index.contains_key(n.parent.as_deref().unwrap())
        {
            report.push(Some(&n.id), Some(i), ViolationKind::Unreachable);
        }
    }

    for (i, kids) in children.iter().enumerate() {
        if kids.is_empty() || time[i].is_none() {
            continue;
        }
        let sum = compensated_sum(kids.iter().map(|&c| nodes[c].cond_prob));
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            report.push(
                Some(&nodes[i].id),
                Some(i),
                ViolationKind::ProbabilitySum { sum },
            );
        }
    }

    if children[root].is_empty() {
        report.push(Some(&nodes[root].id), Some(root), ViolationKind::RootIsLeaf);
        return report;
    }
    let horizon_end = (0..nodes.len())
        .filter(|&i| children[i].is_empty())
        .filter_map(|i| time[i])
        .max()
        .unwrap_or(0);
    for i in 0..nodes.len() {
        if let (true, Some(t)) = (children[i].is_empty(), time[i]) {
            if t != horizon_end {
                report.push(
                    Some(&nodes[i].id),
                    Some(i),
                    ViolationKind::LeafDepth {
                        time: t,
                        horizon_end,
                    },
                );
            }
        }
    }
    report
}

impl ScenarioTree {
    /// Builds a tree from a node list, rejecting it if any invariant fails.
    pub fn from_nodes(nodes: &[TreeNode]) -> Result<Self, TreeError> {
        let report = validate(nodes);
        if !report.is_valid() {
            return Err(TreeError::Invalid(report));
        }
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut built: Vec<Node> = nodes
            .iter()
            .map(|n| Node {
                label: n.id.clone(),
                time: 0,
                short_rate: n.short_rate,
                parent: n.parent.as_deref().map(|p| NodeId(index[p])),
                edges: Vec::new(),
            })
            .collect();
        let mut root = 0;
        for (i, n) in nodes.iter().enumerate() {
            match built[i].parent {
                Some(NodeId(p)) => built[p].edges.push(Edge {
                    target: NodeId(i),
                    prob: n.cond_prob,
                    cash_flow: n.cash_flow,
                }),
                None => root = i,
            }
        }
        Ok(Self::finish(built, NodeId(root), false))
    }

    /// Independent yearly cash flows: `layers[t]` is the law of `X_t`,
    /// unaffected by anything observed before `t + 1`. One node per year,
    /// one edge per atom.
    pub fn from_layers(
        layers: &[ConditionalDistribution],
        rate: Option<f64>,
    ) -> Result<Self, TreeError> {
        if layers.is_empty() {
            return Err(TreeError::NoLayers);
        }
        let nodes: Vec<Node> = (0..=layers.len())
            .map(|t| Node {
                label: format!("t{t}"),
                time: t as u32,
                short_rate: if t < layers.len() { rate } else { None },
                parent: if t == 0 { None } else { Some(NodeId(t - 1)) },
                edges: layers
                    .get(t)
                    .map(|d| {
                        d.atoms()
                            .iter()
                            .map(|a| Edge {
                                target: NodeId(t + 1),
                                prob: a.prob,
                                cash_flow: a.value,
                            })
                            .collect()
                    })
                    .unwrap_or_default(),
            })
            .collect();
        Ok(Self::finish(nodes, NodeId(0), true))
    }

    fn finish(mut nodes: Vec<Node>, root: NodeId, shared: bool) -> Self {
        let mut levels: Vec<Vec<NodeId>> = vec![vec![root]];
        let mut seen = vec![false; nodes.len()];
        seen[root.0] = true;
        nodes[root.0].time = 0;
        loop {
            let mut next = Vec::new();
            for &id in levels.last().unwrap() {
                let t = nodes[id.0].time;
                for e in nodes[id.0].edges.clone() {
                    if !seen[e.target.0] {
                        seen[e.target.0] = true;
                        nodes[e.target.0].time = t + 1;
                        next.push(e.target);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        let horizon = (levels.len() - 2) as u32;
        ScenarioTree {
            nodes,
            root,
            horizon,
            levels,
            shared,
        }
    }

    /// Final cash-flow year `T`; leaves sit at `T + 1`.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True for trees built with shared continuation nodes.
    pub fn is_shared(&self) -> bool {
        self.shared
    }

    /// Nodes grouped by time, root level first.
    pub fn levels(&self) -> &[Vec<NodeId>] {
        &self.levels
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.levels.iter().flatten().copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0].label
    }

    pub fn time(&self, id: NodeId) -> u32 {
        self.nodes[id.0].time
    }

    pub fn short_rate(&self, id: NodeId) -> Option<f64> {
        self.nodes[id.0].short_rate
    }

    pub fn edges(&self, id: NodeId) -> &[Edge] {
        &self.nodes[id.0].edges
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.0].edges.is_empty()
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.label == label).map(NodeId)
    }

    /// Re-checks the structural invariants of a built tree.
    pub fn check(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for id in self.node_ids() {
            let n = &self.nodes[id.0];
            if n.edges.is_empty() {
                if n.time != self.horizon + 1 {
                    report.push(
                        Some(&n.label),
                        None,
                        ViolationKind::LeafDepth {
                            time: n.time,
                            horizon_end: self.horizon + 1,
                        },
                    );
                }
                continue;
            }
            for e in &n.edges {
                if !(e.prob > 0.0 && e.prob <= 1.0) {
                    report.push(
                        Some(&n.label),
                        None,
                        ViolationKind::ProbabilityRange { prob: e.prob },
                    );
                }
                let child_time = self.nodes[e.target.0].time;
                if child_time != n.time + 1 {
                    report.push(
                        Some(&self.nodes[e.target.0].label),
                        None,
                        ViolationKind::TimeInconsistency {
                            expected: n.time + 1,
                            found: child_time,
                        },
                    );
                }
            }
            let sum = compensated_sum(n.edges.iter().map(|e| e.prob));
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                report.push(Some(&n.label), None, ViolationKind::ProbabilitySum { sum });
            }
        }
        report
    }

    /// Unconditional probability of reaching each node, indexed by `NodeId`.
    pub fn node_probabilities(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.nodes.len()];
        p[self.root.0] = 1.0;
        for level in &self.levels {
            for &id in level {
                for e in &self.nodes[id.0].edges {
                    p[e.target.0] += p[id.0] * e.prob;
                }
            }
        }
        p
    }

    /// Number of root-to-leaf paths (as a float; shared trees have many).
    pub fn path_count(&self) -> f64 {
        let mut count = vec![0.0; self.nodes.len()];
        count[self.root.0] = 1.0;
        for level in &self.levels {
            for &id in level {
                for e in &self.nodes[id.0].edges {
                    count[e.target.0] += count[id.0];
                }
            }
        }
        self.levels
            .last()
            .unwrap()
            .iter()
            .map(|id| count[id.0])
            .sum()
    }

    /// Node list for serialization. `None` for shared trees, whose nodes have
    /// several parents.
    pub fn to_tree_nodes(&self) -> Option<Vec<TreeNode>> {
        if self.shared {
            return None;
        }
        let mut out: Vec<TreeNode> = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let (cond_prob, cash_flow) = match n.parent {
                Some(p) => {
                    let e = self.nodes[p.0]
                        .edges
                        .iter()
                        .find(|e| e.target == NodeId(i))
                        .unwrap();
                    (e.prob, e.cash_flow)
                }
                None => (1.0, 0.0),
            };
            out.push(TreeNode {
                id: n.label.clone(),
                parent: n.parent.map(|p| self.nodes[p.0].label.clone()),
                time: Some(n.time),
                cond_prob,
                cash_flow,
                short_rate: n.short_rate,
            });
        }
        Some(out)
    }
}

/// Conditional law, given `node`, of the child-measurable quantity `values`.
/// Equal values are merged exactly.
pub fn child_distribution(
    tree: &ScenarioTree,
    node: NodeId,
    values: &HashMap<NodeId, f64>,
) -> Result<ConditionalDistribution, TreeError> {
    if tree.is_leaf(node) {
        return Err(TreeError::LeafNode(tree.label(node).to_owned()));
    }
    let atoms = tree
        .edges(node)
        .iter()
        .map(|e| {
            values
                .get(&e.target)
                .map(|&v| Atom::new(v, e.prob))
                .ok_or_else(|| TreeError::IncompleteAssignment(tree.label(e.target).to_owned()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConditionalDistribution::new(atoms)?.merged())
}

/// `n` equiprobable atoms for `Normal(mu, sigma^2)`: atom `i` is the
/// conditional mean over the slice between the `(i-1)/n` and `i/n`
/// quantiles, `mu + sigma * n * (phi(q_{(i-1)/n}) - phi(q_{i/n}))`.
pub fn discretize_normal(mu: f64, sigma: f64, n: usize) -> Result<Vec<Atom>, TreeError> {
    if !(mu.is_finite() && sigma.is_finite() && sigma >= 0.0) {
        return Err(TreeError::InvalidNormal { mu, sigma });
    }
    if n == 0 {
        return Err(TreeError::NoAtoms);
    }
    // density at the k/n quantile; symmetric in k <-> n - k
    let mut density = vec![0.0; n + 1];
    for k in 1..=n / 2 {
        let q = std_normal_quantile(k as f64 / n as f64).expect("level inside (0, 1)");
        density[k] = std_normal_pdf(q);
        density[n - k] = density[k];
    }
    let scale = n as f64;
    let prob = 1.0 / scale;
    let mut atoms = vec![Atom::new(mu, prob); n];
    for i in 1..=n / 2 {
        let dev = sigma * scale * (density[i - 1] - density[i]);
        atoms[i - 1].value = mu + dev;
        atoms[n - i].value = mu - dev;
    }
    Ok(atoms)
}

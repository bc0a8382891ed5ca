//! Trees for the two-year normal liability.

use thiserror::Error;

use crate::analytic_normal::NormalLiabilitySpec;
use crate::distribution::{ConditionalDistribution, DistributionError};
use crate::scenario_tree::{discretize_normal, ScenarioTree, TreeError, TreeNode};

/// Largest expanded tree built without complaint.
pub const DEFAULT_NODE_CAP: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("expanded tree with n = {n} has {nodes} nodes, above the cap of {cap}; use a smaller n or the shared tree")]
    TooLarge { n: usize, nodes: usize, cap: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

fn year_laws(
    spec: &NormalLiabilitySpec,
    n: usize,
) -> Result<[ConditionalDistribution; 2], GenerateError> {
    let x0 = ConditionalDistribution::new(discretize_normal(spec.mu[0], spec.sigma[0], n)?)?;
    let x1 = ConditionalDistribution::new(discretize_normal(spec.mu[1], spec.sigma[1], n)?)?;
    Ok([x0, x1])
}

/// Two-year tree with `n` equiprobable outcomes per year and zero rates.
/// Year-1 cash flows do not depend on year 0, so all year-1 states share one
/// node and `V_1` is computed once.
pub fn generate_tree(spec: &NormalLiabilitySpec, n: usize) -> Result<ScenarioTree, GenerateError> {
    Ok(ScenarioTree::from_layers(&year_laws(spec, n)?, Some(0.0))?)
}

/// The same liability with every year-1 state as its own node:
/// `1 + n + n^2` nodes.
pub fn generate_expanded_tree(
    spec: &NormalLiabilitySpec,
    n: usize,
    cap: usize,
) -> Result<ScenarioTree, GenerateError> {
    let nodes = n
        .checked_mul(n)
        .and_then(|sq| sq.checked_add(n + 1))
        .unwrap_or(usize::MAX);
    if nodes > cap {
        return Err(GenerateError::TooLarge { n, nodes, cap });
    }
    let [x0, x1] = year_laws(spec, n)?;
    let mut list = Vec::with_capacity(nodes);
    list.push(TreeNode::root("root").with_short_rate(0.0));
    for (i, a) in x0.atoms().iter().enumerate() {
        let id = format!("{i}");
        list.push(TreeNode::child(id.clone(), "root", a.prob, a.value).with_short_rate(0.0));
        for (j, b) in x1.atoms().iter().enumerate() {
            list.push(TreeNode::child(
                format!("{i}.{j}"),
                id.clone(),
                b.prob,
                b.value,
            ));
        }
    }
    Ok(ScenarioTree::from_nodes(&list)?)
}

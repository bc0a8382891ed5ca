//! Sampling check of the acceptability condition: the capital provider's
//! average excess payoff should be within a few standard errors of zero.

use mcvalue::cli_io::monte_carlo_acceptability;
use mcvalue::valuation_engine::value_liability;
use mcvalue::{DividendRule, RateModel, RiskMeasureSpec, ScenarioTree, TermStructure, TreeNode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = ScenarioTree::from_nodes(&[
        TreeNode::root("root"),
        TreeNode::child("low", "root", 0.7, 0.0),
        TreeNode::child("mid", "root", 0.2, 100.0),
        TreeNode::child("high", "root", 0.1, 1000.0),
    ])?;
    let rates = RateModel::Curve(TermStructure::flat(0.0)?);
    let result = value_liability(
        &tree,
        &rates,
        &RiskMeasureSpec::value_at_risk(0.9)?,
        &DividendRule::cost_of_capital(0.06)?,
    )?;
    for paths in [10_000, 100_000, 1_000_000] {
        for seed in [1, 2, 3] {
            let est = monte_carlo_acceptability(&tree, &result, paths, seed)?;
            println!(
                "paths {paths:>8} seed {seed}: {:+.5} +- {:.5} (z {:+.2})",
                est.estimate,
                est.standard_error,
                est.z_score()
            );
        }
    }
    Ok(())
}

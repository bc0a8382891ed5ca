//! One-year liability paying 0, 100 or 1000 with probabilities 0.7, 0.2 and
//! 0.1, valued with VaR at 90% and a 6% cost of capital at a zero rate.

use mcvalue::valuation_engine::{acceptability_residual, max_abs_residual, value_liability};
use mcvalue::{DividendRule, RateModel, RiskMeasureSpec, ScenarioTree, TermStructure, TreeNode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = ScenarioTree::from_nodes(&[
        TreeNode::root("root"),
        TreeNode::child("low", "root", 0.7, 0.0),
        TreeNode::child("mid", "root", 0.2, 100.0),
        TreeNode::child("high", "root", 0.1, 1000.0),
    ])?;
    let rates = RateModel::Curve(TermStructure::flat(0.0)?);
    let spec = RiskMeasureSpec::value_at_risk(0.9)?;
    let rule = DividendRule::cost_of_capital(0.06)?;

    let result = value_liability(&tree, &rates, &spec, &rule)?;
    let root = result.root();
    println!("V0    = {:.4}", root.value);
    println!("C0    = {:.4}", root.capital);
    println!("D0    = {:.4}", root.dividend);
    println!("gamma = {:.4}", root.gamma);
    println!("rho   = {:.4}", root.rho);
    for (edge, &kept) in tree.edges(tree.root()).iter().zip(&root.continuation) {
        let label = tree.label(edge.target);
        println!(
            "  {label:>4}: x = {:>6}, {}",
            edge.cash_flow,
            if kept { "continues" } else { "defaults" }
        );
    }
    let residual = max_abs_residual(&acceptability_residual(&tree, &result));
    println!("max |acceptability residual| = {residual:.1e}");
    Ok(())
}

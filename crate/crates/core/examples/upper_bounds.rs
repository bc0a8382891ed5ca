//! The recursive and closed-form upper bounds, on a curve whose forward
//! prices carry a liquidity premium and on a steep curve where the closed
//! form is only reported.

use mcvalue::margin_bounds::bounds_report;
use mcvalue::valuation_engine::value_liability;
use mcvalue::{DividendRule, RateModel, RiskMeasureSpec, ScenarioTree, TermStructure, TreeNode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = ScenarioTree::from_nodes(&[
        TreeNode::root("0"),
        TreeNode::child("a", "0", 0.5, 50.0),
        TreeNode::child("b", "0", 0.5, 150.0),
        TreeNode::child("a1", "a", 0.98, 40.0),
        TreeNode::child("a2", "a", 0.02, 400.0),
        TreeNode::child("b1", "b", 0.98, 60.0),
        TreeNode::child("b2", "b", 0.02, 600.0),
    ])?;
    let spec = RiskMeasureSpec::value_at_risk(0.95)?;
    let rule = DividendRule::cost_of_capital(0.06)?;
    let curves = [
        ("flat 2%", TermStructure::flat(0.02)?),
        (
            "inverted",
            TermStructure::from_spot([(1, 0.03), (2, 0.025)])?,
        ),
        ("steep", TermStructure::from_spot([(1, 0.01), (2, 0.04)])?),
    ];
    for (name, curve) in curves {
        let rates = RateModel::Curve(curve);
        let result = value_liability(&tree, &rates, &spec, &rule)?;
        let bounds = bounds_report(&tree, &rates, &result)?;
        let root = tree.root().0;
        println!(
            "{name}: V0 = {:.4}, recursive {:.4}, closed form {:.4}",
            bounds.value,
            bounds.recursive_bound[root],
            bounds
                .closed_form_bound
                .as_ref()
                .map_or(f64::NAN, |b| b[root])
        );
        for check in &bounds.checks {
            println!(
                "  {:<32} asserted {:<5} slack {:+.4e}",
                check.name, check.asserted, check.min_slack
            );
        }
        for w in &bounds.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}

//! Best estimate, dividend portfolio and risk margins for a two-year tree
//! on a flat curve.

use mcvalue::margin_bounds::margin_report;
use mcvalue::valuation_engine::value_liability;
use mcvalue::{DividendRule, RateModel, RiskMeasureSpec, ScenarioTree, TermStructure, TreeNode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut nodes = vec![TreeNode::root("root")];
    for (i, (p, x)) in [(0.6, 80.0), (0.395, 120.0), (0.005, 300.0)]
        .into_iter()
        .enumerate()
    {
        let id = format!("{i}");
        nodes.push(TreeNode::child(id.clone(), "root", p, x));
        for (j, (q, y)) in [(0.5, 0.5 * x), (0.497, x), (0.003, 4.0 * x)]
            .into_iter()
            .enumerate()
        {
            nodes.push(TreeNode::child(format!("{i}.{j}"), id.clone(), q, y));
        }
    }
    let tree = ScenarioTree::from_nodes(&nodes)?;
    let rates = RateModel::Curve(TermStructure::flat(0.02)?);
    let spec = RiskMeasureSpec::value_at_risk(0.99)?;
    let rule = DividendRule::cost_of_capital(0.06)?;
    let result = value_liability(&tree, &rates, &spec, &rule)?;
    let report = margin_report(&tree, &rates, &spec, &rule, &result, 0.0)?;

    println!("V0                     {:>10.4}", report.value);
    println!("best estimate          {:>10.4}", report.best_estimate);
    println!("dividend portfolio     {:>10.4}", report.dividend_portfolio);
    println!(
        "expected risk margin   {:>10.4}",
        report.expected_risk_margin
    );
    if let Some(adj) = report.adjusted_risk_margin {
        println!("adjusted risk margin   {adj:>10.4}");
    }
    if let Some(m) = report.solvency_practice_margin {
        println!("eta * sum of pv(SCR)   {m:>10.4}");
    }
    println!();
    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>10}",
        "t", "E[V]", "E[BE]", "E[DP]", "E[RM]"
    );
    for t in &report.times {
        println!(
            "{:>4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            t.time, t.value, t.best_estimate, t.dividend_portfolio, t.expected_risk_margin
        );
    }
    for check in &report.checks {
        println!("{:<36} slack {:+.4e}", check.name, check.min_slack);
    }
    Ok(())
}

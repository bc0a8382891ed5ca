//! Two independent normal years: closed forms against the tree engine on a
//! discretized version of the same liability.

use std::time::Instant;

use mcvalue::analytic_normal::{self, NormalLiabilitySpec};
use mcvalue::cli_io::generate_tree;
use mcvalue::valuation_engine::value_liability;
use mcvalue::{DividendRule, RateModel, RiskMeasureSpec, TermStructure};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = NormalLiabilitySpec::new([100.0, 100.0], [50.0, 50.0], 0.995, 0.06)?;
    let exact = analytic_normal::value(&spec)?;
    println!(
        "closed form: V1 = {:.6}, V0 = {:.6}, V0u = {:.6}",
        exact.v1,
        exact.v0,
        analytic_normal::upper_bound(&spec)?
    );

    let rates = RateModel::Curve(TermStructure::flat(0.0)?);
    let risk = RiskMeasureSpec::value_at_risk(spec.alpha)?;
    let rule = DividendRule::cost_of_capital(spec.eta)?;
    for n in [100, 1_000, 10_000, 100_000] {
        let start = Instant::now();
        // every year-1 state shares one node, so the tree has three nodes
        let tree = generate_tree(&spec, n)?;
        let v0 = value_liability(&tree, &rates, &risk, &rule)?.root_value();
        println!(
            "n = {n:>6}: V0 = {v0:.6}  error {:+.2e}  ({:.0?})",
            v0 - exact.v0,
            start.elapsed()
        );
    }
    Ok(())
}

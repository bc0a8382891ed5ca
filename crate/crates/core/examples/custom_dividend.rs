//! Dividend rules other than a flat cost of capital: a piecewise-linear
//! table and an arbitrary increasing function.

use mcvalue::valuation_engine::node_value;
use mcvalue::{ConditionalDistribution, DividendRule, RiskMeasureSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let y = ConditionalDistribution::from_pairs(&[(0.0, 0.7), (100.0, 0.2), (1000.0, 0.1)])?;
    let spec = RiskMeasureSpec::value_at_risk(0.9)?;
    let rules = [
        ("6% of capital", DividendRule::cost_of_capital(0.06)?),
        (
            "table",
            DividendRule::table(&[(20.0, 0.6), (60.0, 3.0), (200.0, 16.0)])?,
        ),
        (
            "0.04 C + sqrt(C)",
            DividendRule::custom(|c: f64| 0.04 * c + c.max(0.0).sqrt())?,
        ),
        ("no dividend", DividendRule::cost_of_capital(0.0)?),
    ];
    println!("{:<18} {:>10} {:>10} {:>10}", "rule", "V", "C", "D");
    for (name, rule) in rules {
        let nv = node_value(&y, 0.01, &spec, &rule)?;
        println!(
            "{name:<18} {:>10.4} {:>10.4} {:>10.4}",
            nv.value, nv.capital, nv.dividend
        );
    }
    Ok(())
}

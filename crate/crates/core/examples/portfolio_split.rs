//! Splitting a replicating portfolio into a reduced portfolio and the
//! capital raised from the capital provider.

use mcvalue::valuation_engine::split_portfolio;
use mcvalue::{ConditionalDistribution, DividendRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let y = ConditionalDistribution::from_pairs(&[(0.0, 0.7), (100.0, 0.3)])?;
    let rule = DividendRule::cost_of_capital(0.06)?;
    for v0 in [0.0, 50.0, 100.0, 150.0] {
        let (reduced, capital) = split_portfolio(v0, &y, 0.0, &rule)?;
        println!("V0 = {v0:>6.1}: reduced portfolio {reduced:>9.4}, capital {capital:>8.4}");
    }
    Ok(())
}

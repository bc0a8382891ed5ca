//! Discounting with a zero curve and the liquidity-premium check on forward
//! bond prices.

use mcvalue::{ConditionalDistribution, TermStructure};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curve = TermStructure::from_spot([(1, 0.02), (2, 0.025), (3, 0.027)])?;
    for m in 1..=3 {
        println!(
            "R({m}) = {:.4}, P({m}) = {:.6}",
            curve.spot_rate(m)?,
            curve.discount_factor(m)?
        );
    }
    println!(
        "pv of 100 paid in year 3, seen from year 1: {:.4}",
        curve.pv(100.0, 3, 1)?
    );
    println!(
        "tv of 100 from year 0 to year 2: {:.4}",
        curve.tv(100.0, 0, 2)?
    );
    println!(
        "forward price of a 1-year bond bought next year: {:.6}",
        curve.forward_bond_price(0, 1)?
    );

    // next year's 1-year rate is uncertain
    let future = ConditionalDistribution::from_pairs(&[(0.01, 0.5), (0.04, 0.5)])?;
    let check = curve.check_liquidity_premium(&future, 0, 1)?;
    println!(
        "premium under a random rate: holds {}, slack {:+.2e}",
        check.holds, check.slack
    );
    let same_curve = curve.deterministic_liquidity_premium(3)?;
    println!(
        "premium if the curve stays put: holds {}, slack {:+.2e}",
        same_curve.holds, same_curve.slack
    );
    Ok(())
}

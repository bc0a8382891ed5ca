//! Paying a normal liability over two years or all at once: the two-year
//! version is worth more unless the cost of capital is very small.

use mcvalue::analytic_normal::{self, NormalLiabilitySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = 0.995;
    let threshold = analytic_normal::reversal_threshold(alpha)?;
    println!("alpha = {alpha}, threshold eta* = {threshold:.8}");
    println!(
        "{:>8} {:>12} {:>12} {:>9}",
        "eta", "V0(L1)", "V0(L2)", "reversal"
    );
    for eta in [
        0.0001,
        0.0003,
        threshold * 0.99,
        threshold * 1.01,
        0.01,
        0.06,
        0.1,
    ] {
        let spec = NormalLiabilitySpec::new([100.0, 100.0], [50.0, 50.0], alpha, eta)?;
        let p = analytic_normal::check_proposition(&spec)?;
        println!(
            "{eta:>8.5} {:>12.6} {:>12.6} {:>9}",
            p.value_l1, p.value_l2, p.reversal
        );
    }
    for a in [0.9, 0.99, 0.995, 0.999] {
        println!(
            "f({a}) = {:.6}, g({a}) = {:.6}",
            analytic_normal::f(a)?,
            analytic_normal::g(a)?
        );
    }
    Ok(())
}

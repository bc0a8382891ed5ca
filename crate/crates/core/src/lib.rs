//! Market-consistent valuation of insurance liabilities.
//!
//! The value of a run-off liability is computed backwards in time on a finite
//! scenario tree. In every year the liability cash flow plus next year's value
//! is replicated with risk-free zero-coupon bonds and one-year capital, where
//! the capital is set by a Value-at-Risk requirement, the capital provider is
//! paid a cost-of-capital dividend and enjoys limited liability.
//!
//! Modules:
//!
//! - [`scenario_tree`] and [`distribution`]: the finite filtration and the
//!   conditional laws one step ahead.
//! - [`term_structure`]: risk-free discounting and forward bond prices.
//! - [`risk_measure`]: lower-quantile Value-at-Risk.
//! - [`dividend`]: eligible dividend rules (cost of capital or custom).
//! - [`valuation_engine`]: the backward recursion, the cut-off form, the
//!   acceptability residual and the constructive capital split.
//! - [`margin_bounds`]: best estimate / dividend portfolio decomposition,
//!   expected and adjusted risk margins, upper bounds.
//! - [`analytic_normal`]: closed forms for independent normal cash flows,
//!   used as an oracle for the tree engine.
//! - [`cli_io`]: input files, reports, the Monte-Carlo acceptability check and
//!   the command-line front end.

pub mod analytic_normal;
pub mod cli_io;
pub mod distribution;
pub mod dividend;
pub mod margin_bounds;
pub mod risk_measure;
pub mod scenario_tree;
mod solver;
pub mod term_structure;
pub mod valuation_engine;

pub use distribution::{Atom, ConditionalDistribution, DistributionError};
pub use dividend::{DividendError, DividendRule, DividendTable};
pub use risk_measure::{RiskError, RiskMeasureSpec};
pub use scenario_tree::{NodeId, ScenarioTree, TreeError, TreeNode, ValidationReport};
pub use solver::BisectionError;
pub use term_structure::{CurveError, RateModel, TermStructure};
pub use valuation_engine::{NodeValuation, ValuationError, ValuationResult};

/// Absolute tolerance on probability sums.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Compensated (Neumaier) summation.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

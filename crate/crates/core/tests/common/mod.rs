//! Shared test helpers: a seeded random tree generator and oracles written
//! independently of the library code paths.
#![allow(dead_code)]

use mcvalue::{DividendRule, RateModel, RiskMeasureSpec, ScenarioTree, TermStructure, TreeNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// High-precision (30 digit) evaluations of the two-year normal example,
/// mu = (100, 100), sigma = (50, 50), alpha = 0.995, eta = 0.06.
pub mod frozen {
    pub const Q_995: f64 = 2.575_829_303_548_901;
    pub const PHI_Q_995: f64 = 0.014_459_743_026_917_404;
    pub const V1: f64 = 107.215_526_495_460_43;
    pub const V0: f64 = 214.431_052_990_920_86;
    pub const V0_UPPER: f64 = 214.589_112_641_838_15;
    pub const V0_POOLED: f64 = 210.204_295_429_542_55;
    pub const V0_UPPER_POOLED: f64 = 210.316_060_480_538_14;
    pub const F_995: f64 = 0.001_580_596_509_172_9;
    pub const G_995: f64 = 2.577_409_900_058_073_7;
    pub const ETA_STAR: f64 = 0.000_613_626_262_809_884_7;
    pub const ADJUSTED_MARGIN: f64 = 14.580_165_869_144_721;
    pub const SOLVENCY_PRACTICE_MARGIN: f64 = 15.454_975_821_293_405;
}

pub fn statrs_quantile(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(alpha)
}

pub fn statrs_pdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().pdf(x)
}

/// Lower `alpha`-quantile by enumeration over candidate values.
pub fn brute_quantile(atoms: &[(f64, f64)], alpha: f64) -> f64 {
    let mut xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for &x in &xs {
        let mass: f64 = atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
        if mass >= alpha - 1e-12 {
            return x;
        }
    }
    *xs.last().unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleNode {
    pub value: f64,
    pub capital: f64,
    pub gamma: f64,
    pub rho: f64,
}

/// `V = (E[1_A Y] + (1 - gamma) rho + eta rho / (1 + R)) / (1 + R + eta)`.
pub fn closed_form_node(atoms: &[(f64, f64)], rate: f64, alpha: f64, eta: f64) -> OracleNode {
    let rho = brute_quantile(atoms, alpha);
    let gamma: f64 = atoms.iter().filter(|a| a.0 <= rho).map(|a| a.1).sum();
    let tail: f64 = atoms.iter().filter(|a| a.0 <= rho).map(|a| a.0 * a.1).sum();
    let value = (tail + (1.0 - gamma) * rho + eta * rho / (1.0 + rate)) / (1.0 + rate + eta);
    OracleNode {
        value,
        capital: rho / (1.0 + rate) - value,
        gamma,
        rho,
    }
}

/// Root in `V` of `V - (E[1_A Y] + (1 - gamma) rho + D(rho / (1 + R) - V)) / (1 + R)`
/// by plain bisection.
pub fn bisect_node(
    atoms: &[(f64, f64)],
    rate: f64,
    alpha: f64,
    dividend: impl Fn(f64) -> f64,
) -> f64 {
    let rho = brute_quantile(atoms, alpha);
    let gamma: f64 = atoms.iter().filter(|a| a.0 <= rho).map(|a| a.1).sum();
    let tail: f64 = atoms.iter().filter(|a| a.0 <= rho).map(|a| a.0 * a.1).sum();
    let g =
        |v: f64| v - (tail + (1.0 - gamma) * rho + dividend(rho / (1.0 + rate) - v)) / (1.0 + rate);
    let (mut lo, mut hi) = (tail - rho.abs() - 1.0, rho / (1.0 + rate));
    lo = lo.min(-1e6);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateKind {
    Flat,
    /// Spot curve whose forward prices carry a non-negative liquidity premium.
    PremiumCurve,
    /// Upward-sloping spot curve, liquidity premium negative.
    SteepCurve,
    NodeRates,
}

#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub seed: u64,
    pub tree: ScenarioTree,
    pub nodes: Vec<TreeNode>,
    pub rates: RateModel,
    pub rate_kind: RateKind,
    pub spec: RiskMeasureSpec,
    pub rule: DividendRule,
}

fn probabilities(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    match rng.random_range(0..3) {
        0 => vec![1.0 / k as f64; k],
        1 if k > 1 => {
            // decimal probabilities such as 0.7 / 0.2 / 0.1
            let mut left = 100u32;
            let mut ps = Vec::with_capacity(k);
            for i in 0..k {
                let share = if i + 1 == k {
                    left
                } else {
                    rng.random_range(1..=left - (k - i - 1) as u32)
                };
                left -= share;
                ps.push(share as f64 / 100.0);
            }
            ps
        }
        _ => {
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        }
    }
}

fn cash_flow(rng: &mut ChaCha8Rng, style: u32) -> f64 {
    match style {
        0 => rng.random_range(0..=10) as f64 * 10.0,
        1 => rng.random_range(-50.0..150.0),
        _ => {
            if rng.random_bool(0.1) {
                rng.random_range(500.0..5000.0)
            } else {
                rng.random_range(0.0..100.0)
            }
        }
    }
}

fn spot_curve(rng: &mut ChaCha8Rng, maturities: u32, steep: bool) -> TermStructure {
    let r1: f64 = rng.random_range(0.0..0.05);
    if steep {
        return TermStructure::from_spot((1..=maturities).map(|m| (m, r1 + 0.01 * (m - 1) as f64)))
            .unwrap();
    }
    // P_{m+1} = P_m * P_1^w with w in [0, 1] keeps P_{m+1} / P_m >= P_1
    let d = 1.0 / (1.0 + r1);
    let mut price = d;
    let mut rates = vec![(1, r1)];
    for m in 2..=maturities {
        price *= d.powf(rng.random_range(0.0..1.0));
        rates.push((m, price.powf(-1.0 / m as f64) - 1.0));
    }
    TermStructure::from_spot(rates).unwrap()
}

pub fn fuzz_case(seed: u64) -> FuzzCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth: u32 = rng.random_range(1..=4);
    let style = rng.random_range(0..3);
    let rate_kind = match rng.random_range(0..4) {
        0 => RateKind::Flat,
        1 => RateKind::PremiumCurve,
        2 => RateKind::SteepCurve,
        _ => RateKind::NodeRates,
    };
    let mut nodes = vec![TreeNode::root("n0")];
    let mut frontier = vec![("n0".to_owned(), 0u32)];
    let mut count = 1;
    while let Some((id, t)) = frontier.pop() {
        if t == depth {
            continue;
        }
        if rate_kind == RateKind::NodeRates {
            let r = rng.random_range(-0.01..0.08);
            let i = nodes.iter().position(|n| n.id == id).unwrap();
            nodes[i].short_rate = Some(r);
        }
        let max_children = if depth >= 4 { 4 } else { 6 };
        let k = rng.random_range(1..=max_children);
        for p in probabilities(&mut rng, k) {
            let child = format!("n{count}");
            count += 1;
            nodes.push(TreeNode::child(
                child.clone(),
                id.clone(),
                p,
                cash_flow(&mut rng, style),
            ));
            frontier.push((child, t + 1));
        }
    }
    let tree = ScenarioTree::from_nodes(&nodes).unwrap();
    let rates = match rate_kind {
        RateKind::Flat => {
            RateModel::Curve(TermStructure::flat(rng.random_range(-0.01..0.06)).unwrap())
        }
        RateKind::PremiumCurve => RateModel::Curve(spot_curve(&mut rng, depth, false)),
        RateKind::SteepCurve => RateModel::Curve(spot_curve(&mut rng, depth, true)),
        RateKind::NodeRates => RateModel::NodeShortRates,
    };
    let alpha = match rng.random_range(0..4) {
        0 => 0.9,
        1 => 0.995,
        2 => 0.5,
        _ => rng.random_range(0.5..0.999),
    };
    let rule = match rng.random_range(0..6) {
        0 => DividendRule::table(&[(10.0, 0.5), (100.0, 8.0), (1000.0, 90.0)]).unwrap(),
        1 => DividendRule::custom(|c: f64| 0.04 * c + 0.5 * (1.0 + c).ln()).unwrap(),
        2 => DividendRule::cost_of_capital(0.0).unwrap(),
        _ => DividendRule::cost_of_capital(rng.random_range(0.01..0.2)).unwrap(),
    };
    FuzzCase {
        seed,
        tree,
        nodes,
        rates,
        rate_kind,
        spec: RiskMeasureSpec::value_at_risk(alpha).unwrap(),
        rule,
    }
}

/// The same tree with every cash flow multiplied by `lambda`.
pub fn scaled(nodes: &[TreeNode], lambda: f64) -> ScenarioTree {
    let nodes: Vec<TreeNode> = nodes
        .iter()
        .map(|n| TreeNode {
            cash_flow: lambda * n.cash_flow,
            ..n.clone()
        })
        .collect();
    ScenarioTree::from_nodes(&nodes).unwrap()
}

/// Three-atom one-year liability: 0, 100, 1000 with probabilities 0.7, 0.2, 0.1.
pub fn three_atom_tree() -> ScenarioTree {
    ScenarioTree::from_nodes(&[
        TreeNode::root("root"),
        TreeNode::child("low", "root", 0.7, 0.0),
        TreeNode::child("mid", "root", 0.2, 100.0),
        TreeNode::child("high", "root", 0.1, 1000.0),
    ])
    .unwrap()
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

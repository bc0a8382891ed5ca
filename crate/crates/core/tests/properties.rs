mod common;

use approx::assert_relative_eq;
use mcvalue::analytic_normal::{std_normal_pdf, std_normal_quantile};
use mcvalue::cli_io::input::{to_json, DividendInput, InputFile, InputKind, NodeInput, RiskInput};
use mcvalue::cli_io::{monte_carlo_acceptability, parse_str, Model};
use mcvalue::scenario_tree::discretize_normal;
use mcvalue::valuation_engine::{cutoff_value, node_value, split_portfolio, value_liability};
use mcvalue::{
    Atom, ConditionalDistribution, DividendRule, RateModel, RiskMeasureSpec, ScenarioTree,
    TermStructure, TreeNode,
};
use proptest::prelude::*;

fn law() -> impl Strategy<Value = Vec<(f64, f64)>> {
    // integer values make ties common
    prop::collection::vec((-20i32..60, 1u32..20), 1..8).prop_map(|raw| {
        let total: u32 = raw.iter().map(|r| r.1).sum();
        raw.iter()
            .map(|&(v, w)| (v as f64 * 2.5, w as f64 / total as f64))
            .collect()
    })
}

fn dist(atoms: &[(f64, f64)]) -> ConditionalDistribution {
    ConditionalDistribution::new(atoms.iter().map(|&(v, p)| Atom::new(v, p)).collect()).unwrap()
}

fn var(alpha: f64) -> RiskMeasureSpec {
    RiskMeasureSpec::value_at_risk(alpha).unwrap()
}

fn linear(eta: f64) -> DividendRule {
    DividendRule::cost_of_capital(eta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn node_value_matches_closed_form(atoms in law(), alpha in 0.5f64..0.999, eta in 0.0f64..0.3, rate in -0.02f64..0.1) {
        let y = dist(&atoms);
        let nv = node_value(&y, rate, &var(alpha), &linear(eta)).unwrap();
        let oracle = common::closed_form_node(&atoms, rate, alpha, eta);
        prop_assert_eq!(nv.rho, oracle.rho);
        prop_assert!((nv.value - oracle.value).abs() <= 1e-9 * (1.0 + oracle.rho.abs()));
        prop_assert!((nv.capital - oracle.capital).abs() <= 1e-9 * (1.0 + oracle.rho.abs()));
        prop_assert!((nv.gamma - oracle.gamma).abs() <= 1e-12);
        prop_assert!(nv.gamma >= alpha - 1e-12);
        prop_assert!(nv.capital >= 0.0);
    }

    #[test]
    fn cutoff_form_is_identical(atoms in law(), alpha in 0.5f64..0.999, rate in -0.02f64..0.1, table in any::<bool>()) {
        let y = dist(&atoms);
        let rule = if table {
            DividendRule::table(&[(5.0, 0.2), (50.0, 4.0)]).unwrap()
        } else {
            linear(0.06)
        };
        let a = node_value(&y, rate, &var(alpha), &rule).unwrap();
        let b = cutoff_value(&y, rate, &var(alpha), &rule).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn custom_rule_matches_bisection_and_is_monotone(atoms in law(), alpha in 0.5f64..0.999, extra in 0.001f64..0.5) {
        let y = dist(&atoms);
        let base = DividendRule::custom(|c: f64| 0.05 * c + 0.3 * c.sqrt()).unwrap();
        let more = DividendRule::custom(move |c: f64| 0.05 * c + 0.3 * c.sqrt() + extra * c).unwrap();
        let v = node_value(&y, 0.02, &var(alpha), &base).unwrap();
        let oracle = common::bisect_node(&atoms, 0.02, alpha, |c| 0.05 * c + 0.3 * c.max(0.0).sqrt());
        prop_assert!((v.value - oracle).abs() <= 1e-9 * (1.0 + v.rho.abs()));
        let w = node_value(&y, 0.02, &var(alpha), &more).unwrap();
        prop_assert!(w.value >= v.value - 1e-12);

        // the defining map is strictly increasing in V
        let h = |value: f64| 1.02 * value - base.dividend(v.rho / 1.02 - value);
        let lo = v.value - 10.0;
        let points: Vec<f64> = (0..=20).map(|k| h(lo + k as f64)).filter(|x| x.is_finite()).collect();
        prop_assert!(points.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn split_reproduces_acceptability(atoms in law(), v0 in -40.0f64..200.0, eta in 0.0f64..0.3, rate in 0.0f64..0.08) {
        let y = dist(&atoms);
        let rule = linear(eta);
        let target = (1.0 + rate) * v0;
        if !atoms.iter().any(|a| a.0 <= target) {
            return Ok(());
        }
        let (reduced, capital) = split_portfolio(v0, &y, rate, &rule).unwrap();
        prop_assert!(capital >= 0.0);
        prop_assert!((reduced + capital - v0).abs() <= 1e-12 * (1.0 + v0.abs()));
        // same continuation set, and the capital provider breaks even on it
        let assets = (1.0 + rate) * (reduced + capital);
        let payoff: f64 = atoms.iter().filter(|a| a.0 <= assets).map(|a| a.1 * (assets - a.0)).sum();
        let cost = (1.0 + rate) * capital + rule.dividend(capital);
        prop_assert!((payoff - cost).abs() <= 1e-9 * (1.0 + v0.abs()));
    }

    #[test]
    fn deterministic_shift_moves_value_only(atoms in law(), alpha in 0.5f64..0.999, b in -100i32..100, rate in 0.0f64..0.08) {
        let b = b as f64 * 0.5;
        let y = dist(&atoms);
        let shifted = y.map_values(|v| v + b).unwrap();
        let spec = var(alpha);
        let a = node_value(&y, rate, &spec, &linear(0.06)).unwrap();
        let s = node_value(&shifted, rate, &spec, &linear(0.06)).unwrap();
        prop_assert_eq!(s.rho, a.rho + b);
        prop_assert!((s.value - a.value - b / (1.0 + rate)).abs() <= 1e-9 * (1.0 + a.rho.abs() + b.abs()));
        prop_assert!((s.capital - a.capital).abs() <= 1e-9 * (1.0 + a.rho.abs() + b.abs()));
        prop_assert_eq!(s.continuation, a.continuation);
    }

    #[test]
    fn var_is_positively_homogeneous(atoms in law(), alpha in 0.01f64..0.999, k in -8i32..8) {
        let lambda = 2f64.powi(k);
        let y = dist(&atoms);
        let scaled = y.map_values(|v| lambda * v).unwrap();
        let spec = var(alpha);
        prop_assert_eq!(spec.loss_quantile(&scaled), lambda * spec.loss_quantile(&y));
        prop_assert_eq!(spec.loss_quantile(&y), common::brute_quantile(&atoms, alpha));
    }

    #[test]
    fn full_cutoff_means_upper_bound_is_tight(atoms in law(), eta in 0.0f64..0.3, rate in 0.0f64..0.08) {
        // alpha above every partial sum puts rho at the largest atom
        let y = dist(&atoms);
        let max = atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
        let below: f64 = atoms.iter().filter(|a| a.0 < max).map(|a| a.1).sum();
        if below >= 0.999 {
            return Ok(());
        }
        let alpha = 0.5 * (below + 1.0);
        let nv = node_value(&y, rate, &var(alpha), &linear(eta)).unwrap();
        prop_assert_eq!(nv.gamma, 1.0);
        let mean: f64 = atoms.iter().map(|a| a.0 * a.1).sum();
        let bound = (mean + nv.dividend) / (1.0 + rate);
        prop_assert!((nv.value - bound).abs() <= 1e-9 * (1.0 + max.abs()));
    }

    #[test]
    fn discretized_normal_keeps_the_mean(mu in -200.0f64..200.0, sigma in 0.1f64..80.0, n in 2usize..400) {
        let atoms = discretize_normal(mu, sigma, n).unwrap();
        prop_assert_eq!(atoms.len(), n);
        let mean: f64 = atoms.iter().map(|a| a.value * a.prob).sum();
        prop_assert!((mean - mu).abs() <= 1e-10 * sigma.max(1.0) * 10.0);
        for i in 0..n {
            let (lo, hi) = (atoms[i].value - mu, atoms[n - 1 - i].value - mu);
            prop_assert!((lo + hi).abs() <= 1e-9 * sigma, "asymmetric at {i}: {lo} vs {hi}");
            prop_assert!(i == 0 || atoms[i].value > atoms[i - 1].value);
        }
    }

    #[test]
    fn quantile_matches_statrs(alpha in 1e-6f64..(1.0 - 1e-6)) {
        let q = std_normal_quantile(alpha).unwrap();
        prop_assert!((q - common::statrs_quantile(alpha)).abs() <= 1e-9);
        prop_assert!((std_normal_pdf(q) - common::statrs_pdf(q)).abs() <= 1e-14);
    }

    #[test]
    fn pv_and_tv_are_inverse(amount in -1e4f64..1e4, r1 in -0.01f64..0.08, r2 in -0.01f64..0.08, from in 0u32..3) {
        let curve = TermStructure::from_spot([(1, r1), (2, r2)]).unwrap();
        for m in 1..=2 {
            let there = curve.tv(amount, from, from + m).unwrap();
            prop_assert!((curve.pv(there, from + m, from).unwrap() - amount).abs() <= 1e-12 * (1.0 + amount.abs()));
            prop_assert!((curve.pv(2.0 * amount, from + m, from).unwrap() - 2.0 * curve.pv(amount, from + m, from).unwrap()).abs() <= 1e-12 * (1.0 + amount.abs()));
        }
        let forward = curve.forward_bond_price(0, 1).unwrap();
        prop_assert!((forward / (1.0 + r1) - (1.0 + r2).powi(-2)).abs() <= 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn input_file_round_trips(seed in 0u64..10_000) {
        let case = common::fuzz_case(seed);
        let file = InputFile {
            kind: InputKind::Tree,
            curve: None,
            risk: RiskInput { alpha: case.spec.alpha() },
            dividend: DividendInput::Eta(0.06),
            nodes: Some(case.nodes.iter().map(NodeInput::from).collect()),
            mu: None,
            sigma: None,
            n: None,
        };
        let text = to_json(&file);
        let parsed = match parse_str(&text) {
            Ok(p) => p,
            // only node-rate trees are complete without a curve
            Err(_) => {
                prop_assert!(!matches!(case.rates, RateModel::NodeShortRates));
                return Ok(());
            }
        };
        let again = parsed.to_file();
        let before = file.nodes.unwrap();
        let after = again.nodes.unwrap();
        prop_assert_eq!(before.len(), after.len());
        for n in &before {
            let m = after.iter().find(|m| m.id == n.id).unwrap();
            prop_assert_eq!(&m.parent, &n.parent);
            prop_assert!((m.p - n.p).abs() <= 1e-12);
            prop_assert!((m.x - n.x).abs() <= 1e-12 * (1.0 + n.x.abs()));
            prop_assert_eq!(m.r, n.r);
        }
        prop_assert!(matches!(parsed.model, Model::Tree(_)));
    }
}

fn three_atom() -> (ScenarioTree, mcvalue::ValuationResult) {
    let tree = common::three_atom_tree();
    let rates = RateModel::Curve(TermStructure::flat(0.0).unwrap());
    let result = value_liability(&tree, &rates, &var(0.9), &linear(0.06)).unwrap();
    (tree, result)
}

#[test]
fn monte_carlo_error_shrinks_like_root_n() {
    let (tree, result) = three_atom();
    let mut previous: Option<f64> = None;
    for paths in [10_000u64, 20_000, 40_000, 80_000] {
        let est = monte_carlo_acceptability(&tree, &result, paths, 5).unwrap();
        if let Some(se) = previous {
            assert_relative_eq!(se / est.standard_error, 2f64.sqrt(), max_relative = 0.03);
        }
        previous = Some(est.standard_error);
    }
}

#[test]
fn monte_carlo_is_seeded() {
    let (tree, result) = three_atom();
    let a = monte_carlo_acceptability(&tree, &result, 50_000, 3).unwrap();
    let b = monte_carlo_acceptability(&tree, &result, 50_000, 3).unwrap();
    let c = monte_carlo_acceptability(&tree, &result, 50_000, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.estimate, c.estimate);
}

#[test]
fn discretized_variance_converges() {
    let atoms = discretize_normal(100.0, 50.0, 100_000).unwrap();
    let mean: f64 = atoms.iter().map(|a| a.value * a.prob).sum();
    let var: f64 = atoms
        .iter()
        .map(|a| a.prob * (a.value - mean).powi(2))
        .sum();
    assert!((var / 2500.0 - 1.0).abs() < 1e-3);
    assert!(var < 2500.0);
}

#[test]
fn split_example() {
    let y = dist(&[(0.0, 0.7), (100.0, 0.3)]);
    let (reduced, capital) = split_portfolio(100.0, &y, 0.0, &linear(0.06)).unwrap();
    assert_relative_eq!(capital, 70.0 / 1.06, max_relative = 1e-14);
    assert_relative_eq!(reduced, 100.0 - 70.0 / 1.06, max_relative = 1e-14);
    let (same, zero) = split_portfolio(
        50.0,
        &ConditionalDistribution::point_mass(53.0),
        0.06,
        &linear(0.06),
    )
    .unwrap();
    assert_eq!((same, zero), (50.0, 0.0));
}

#[test]
fn deterministic_chain_values_on_every_curve_kind() {
    let nodes = vec![
        TreeNode::root("0"),
        TreeNode::child("1", "0", 1.0, 10.0),
        TreeNode::child("2", "1", 1.0, 20.0),
    ];
    let tree = ScenarioTree::from_nodes(&nodes).unwrap();
    let curve = TermStructure::from_spot([(1, 0.02), (2, 0.03), (3, 0.03)]).unwrap();
    let result =
        value_liability(&tree, &RateModel::Curve(curve), &var(0.995), &linear(0.06)).unwrap();
    // every node uses the one-year rate
    assert_relative_eq!(
        result.root_value(),
        10.0 / 1.02 + 20.0 / 1.02f64.powi(2),
        max_relative = 1e-14
    );
}

//! Reading a tree from a JSON file, validating it and writing a report.
//!
//! cargo run --example tree_from_json -- crates/core/data/three_atom.json

use std::path::PathBuf;

use mcvalue::cli_io::input::{parse_input, read_file, validate_nodes};
use mcvalue::cli_io::Model;
use mcvalue::valuation_engine::value_liability;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/broken_tree.json"));

    let file = read_file(&std::fs::read_to_string(&path)?)?;
    if let Some(report) = validate_nodes(&file) {
        if !report.is_valid() {
            println!("{} is invalid:", path.display());
            for v in &report.violations {
                println!("  {v}");
            }
            return Ok(());
        }
    }
    let parsed = parse_input(&path)?;
    let Model::Tree(tree) = &parsed.model else {
        println!(
            "{} describes the normal example; try the normal_two_period example",
            path.display()
        );
        return Ok(());
    };
    let result = value_liability(tree, &parsed.rates, &parsed.risk, &parsed.rule)?;
    for id in tree.node_ids().filter(|&id| !tree.is_leaf(id)) {
        let nv = result.node(id).unwrap();
        println!(
            "{:<8} t={} V={:.4} C={:.4} gamma={:.3}",
            tree.label(id),
            tree.time(id),
            nv.value,
            nv.capital,
            nv.gamma
        );
    }
    Ok(())
}

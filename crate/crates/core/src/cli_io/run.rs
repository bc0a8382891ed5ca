//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analytic_normal::{self, AnalyticError, NormalLiabilitySpec};
use crate::dividend::DividendRule;
use crate::margin_bounds::{bounds_report, margin_report, MarginError};
use crate::risk_measure::RiskMeasureSpec;
use crate::scenario_tree::ScenarioTree;
use crate::term_structure::{RateModel, TermStructure};
use crate::valuation_engine::{
    acceptability_residual, max_abs_residual, value_liability, ValuationError,
};

use super::generate::{generate_tree, GenerateError};
use super::input::{parse_input, read_file, validate_nodes, InputError, Model, ParsedInput};
use super::oracle::{monte_carlo_acceptability, OracleError};
use super::report::*;

pub const EXIT_OK: i32 = 0;
/// Output could not be written.
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "mcvalue",
    version,
    about = "Market-consistent liability valuation on scenario trees"
)]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON input file (tree or normal_example).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// VaR level, overrides the file.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Cost-of-capital rate, overrides the file's dividend.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Flat risk-free rate, overrides the file's curve.
    #[arg(long, global = true)]
    pub rate: Option<f64>,
    /// Atoms per year for normal_example inputs.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Also write the JSON report to this path.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Format printed to standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Slack factor of the practitioner margin.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Backward valuation with capital, dividends and continuation sets.
    Value,
    /// Best estimate, dividend portfolio, risk margins and bounds.
    Margin,
    /// Recursive and closed-form upper bounds.
    Bounds,
    /// Closed forms for two independent normal years.
    Example {
        #[arg(long, num_args = 2, value_names = ["MU0", "MU1"])]
        mu: Option<Vec<f64>>,
        #[arg(long, num_args = 2, value_names = ["SIGMA0", "SIGMA1"])]
        sigma: Option<Vec<f64>>,
    },
    /// Monte-Carlo check of the acceptability condition at the root.
    Oracle {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        paths: u64,
    },
    /// Tree invariants only.
    Validate,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Output(_) => EXIT_OUTPUT,
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ValuationError> for CliError {
    fn from(e: ValuationError) -> Self {
        match e.root_cause() {
            ValuationError::Curve(_)
            | ValuationError::Distribution(_)
            | ValuationError::InvalidRate { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<MarginError> for CliError {
    fn from(e: MarginError) -> Self {
        match e {
            MarginError::Valuation(v) => v.into(),
            MarginError::NotDeterministic
            | MarginError::NonLinearRule
            | MarginError::InvalidEpsilon(_)
            | MarginError::Curve(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<GenerateError> for CliError {
    fn from(e: GenerateError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn describe_rule(rule: &DividendRule) -> String {
    match rule {
        DividendRule::Linear { eta } => format!("eta = {eta}"),
        DividendRule::Table(t) => format!("table with {} knots", t.knots().len() - 1),
        DividendRule::Custom(_) => "custom".into(),
    }
}

fn describe_rates(rates: &RateModel) -> String {
    match rates {
        RateModel::Curve(TermStructure::Flat(r)) => format!("flat {r}"),
        RateModel::Curve(TermStructure::Spot(m)) => {
            let parts: Vec<String> = m.iter().map(|(k, r)| format!("{k}:{r}")).collect();
            format!("spot {}", parts.join(", "))
        }
        RateModel::NodeShortRates => "node one-year rates".into(),
    }
}

fn load(cli: &Cli) -> Result<ParsedInput, CliError> {
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| CliError::Validation("this command needs --input FILE".into()))?;
    let mut parsed = parse_input(path)?;
    if let Some(alpha) = cli.alpha {
        parsed.risk = RiskMeasureSpec::value_at_risk(alpha)
            .map_err(|e| CliError::Validation(format!("--alpha: {e}")))?;
    }
    if let Some(eta) = cli.eta {
        parsed.rule = DividendRule::cost_of_capital(eta)
            .map_err(|e| CliError::Validation(format!("--eta: {e}")))?;
    }
    if let Some(rate) = cli.rate {
        parsed.rates = RateModel::Curve(
            TermStructure::flat(rate).map_err(|e| CliError::Validation(format!("--rate: {e}")))?,
        );
    }
    if let Model::Normal { spec, n } = &mut parsed.model {
        if let Some(k) = cli.n {
            if k == 0 {
                return Err(CliError::Validation("--n: needs at least one atom".into()));
            }
            *n = k;
        }
        spec.alpha = parsed.risk.alpha();
        spec.eta = parsed.rule.eta().unwrap_or(spec.eta);
        spec.validate()?;
    }
    Ok(parsed)
}

fn meta(cli: &Cli, command: &str, parsed: Option<&ParsedInput>) -> RunMeta {
    let mut m = RunMeta::new(command);
    m.input = cli.input.as_ref().map(|p| p.display().to_string());
    m.epsilon = matches!(cli.command, Command::Margin).then_some(cli.epsilon);
    if let Some(p) = parsed {
        m.alpha = Some(p.risk.alpha());
        m.dividend = Some(describe_rule(&p.rule));
        m.curve = Some(describe_rates(&p.rates));
        if let Model::Normal { n, .. } = p.model {
            m.n = Some(n);
        }
    }
    m
}

fn tree_of(parsed: &ParsedInput) -> Result<ScenarioTree, CliError> {
    match &parsed.model {
        Model::Tree(t) => Ok(t.clone()),
        Model::Normal { spec, n } => Ok(generate_tree(spec, *n)?),
    }
}

/// Runs one command and returns its report with the exit code it implies.
pub fn execute(cli: &Cli) -> Result<(Report, i32), CliError> {
    match &cli.command {
        Command::Validate => {
            let path = cli
                .input
                .as_ref()
                .ok_or_else(|| CliError::Validation("validate needs --input FILE".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Validation(format!("cannot read {}: {e}", path.display()))
            })?;
            let file = read_file(&text)?;
            let count = file.nodes.as_ref().map_or(0, Vec::len);
            if let Some(report) = validate_nodes(&file) {
                if !report.is_valid() {
                    let out = ValidateOutput::new(meta(cli, "validate", None), count, &report);
                    return Ok((Report::Validate(out), EXIT_VALIDATION));
                }
            }
            let parsed = file.into_parsed()?;
            let out = ValidateOutput::new(
                meta(cli, "validate", Some(&parsed)),
                count,
                &Default::default(),
            );
            Ok((Report::Validate(out), EXIT_OK))
        }
        Command::Value => {
            let parsed = load(cli)?;
            let tree = tree_of(&parsed)?;
            let result = value_liability(&tree, &parsed.rates, &parsed.risk, &parsed.rule)?;
            let residual = max_abs_residual(&acceptability_residual(&tree, &result));
            let mut report =
                ValueReport::new(meta(cli, "value", Some(&parsed)), &tree, &result, residual);
            if let Model::Normal { spec, n } = &parsed.model {
                let analytic = analytic_normal::value(spec)?.v0;
                report.analytic = Some(AnalyticComparison {
                    analytic_v0: analytic,
                    difference: result.root_value() - analytic,
                    atoms: *n,
                });
            }
            if !parsed.rates.is_deterministic() {
                report.warnings.push(
                    "node-dependent rates: margins and the closed-form bound are unavailable"
                        .into(),
                );
            }
            Ok((Report::Value(report), EXIT_OK))
        }
        Command::Margin => {
            let parsed = load(cli)?;
            let tree = tree_of(&parsed)?;
            let result = value_liability(&tree, &parsed.rates, &parsed.risk, &parsed.rule)?;
            let residual = max_abs_residual(&acceptability_residual(&tree, &result));
            let margins = margin_report(
                &tree,
                &parsed.rates,
                &parsed.risk,
                &parsed.rule,
                &result,
                cli.epsilon,
            )?;
            let decomposition = margins
                .nodes
                .iter()
                .map(|n| (n.best_estimate + n.dividend_portfolio - n.value).abs())
                .fold(0.0, f64::max);
            Ok((
                Report::Margin(MarginOutput {
                    meta: meta(cli, "margin", Some(&parsed)),
                    max_residual: residual,
                    max_decomposition_error: decomposition,
                    margins,
                }),
                EXIT_OK,
            ))
        }
        Command::Bounds => {
            let parsed = load(cli)?;
            let tree = tree_of(&parsed)?;
            let result = value_liability(&tree, &parsed.rates, &parsed.risk, &parsed.rule)?;
            let residual = max_abs_residual(&acceptability_residual(&tree, &result));
            let bounds = bounds_report(&tree, &parsed.rates, &result)?;
            let out = BoundsOutput::new(
                meta(cli, "bounds", Some(&parsed)),
                &tree,
                &result,
                bounds,
                residual,
            );
            Ok((Report::Bounds(out), EXIT_OK))
        }
        Command::Example { mu, sigma } => {
            let mut m = meta(cli, "example", None);
            let spec = match &cli.input {
                Some(_) => {
                    let parsed = load(cli)?;
                    m = meta(cli, "example", Some(&parsed));
                    match parsed.model {
                        Model::Normal { spec, .. } => spec,
                        Model::Tree(_) => {
                            return Err(CliError::Validation(
                                "example needs a normal_example input".into(),
                            ))
                        }
                    }
                }
                None => {
                    let pair = |v: &Option<Vec<f64>>, default: f64| {
                        v.as_ref().map_or([default; 2], |v| [v[0], v[1]])
                    };
                    NormalLiabilitySpec::new(
                        pair(mu, 100.0),
                        pair(sigma, 50.0),
                        cli.alpha.unwrap_or(0.995),
                        cli.eta.unwrap_or(0.06),
                    )?
                }
            };
            m.alpha = Some(spec.alpha);
            m.dividend = Some(format!("eta = {}", spec.eta));
            let q = analytic_normal::std_normal_quantile(spec.alpha)?;
            let out = ExampleOutput {
                meta: m,
                mu: spec.mu,
                sigma: spec.sigma,
                eta: spec.eta,
                quantile: q,
                density_at_quantile: analytic_normal::std_normal_pdf(q),
                f: analytic_normal::f(spec.alpha)?,
                g: analytic_normal::g(spec.alpha)?,
                values: analytic_normal::value(&spec)?,
                upper_bound: analytic_normal::upper_bound(&spec)?,
                proposition: analytic_normal::check_proposition(&spec)?,
            };
            Ok((Report::Example(out), EXIT_OK))
        }
        Command::Oracle { seed, paths } => {
            let parsed = load(cli)?;
            let tree = tree_of(&parsed)?;
            let result = value_liability(&tree, &parsed.rates, &parsed.risk, &parsed.rule)?;
            let estimate = monte_carlo_acceptability(&tree, &result, *paths, *seed)?;
            let exact = acceptability_residual(&tree, &result)
                .into_iter()
                .find(|r| r.node == tree.root())
                .map_or(0.0, |r| r.residual);
            let mut m = meta(cli, "oracle", Some(&parsed));
            m.paths = Some(*paths);
            m.seed = Some(*seed);
            let out = OracleOutput {
                meta: m,
                node: tree.label(tree.root()).to_owned(),
                z_score: estimate.z_score(),
                within_three_standard_errors: estimate.within(3.0),
                estimate,
                exact_residual: exact,
            };
            Ok((Report::Oracle(out), EXIT_OK))
        }
    }
}

/// Parses arguments, runs the command, prints the report and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (report, code) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Some(path) = &cli.output {
        if let Err(e) = std::fs::write(path, report.to_json_string() + "\n") {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_OUTPUT;
        }
    }
    match cli.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", report.to_json_string()),
    }
    code
}

//! Command-line front end: `dirricci curvature | flow | check`.

pub mod check;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dirricci_core::{
    BetaOverride, CurvatureError, DiGraph, FlowConfig, FlowError, GraphError, GraphFile,
    GraphFileError, Integrator, StepSize,
};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "dirricci",
    version,
    about = "Ricci curvature and Ricci flow on weighted digraphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-edge curvature report (curvature.json).
    Curvature(CurvatureArgs),
    /// Run the normalized Ricci flow (trace.csv, summary.json).
    Flow(FlowArgs),
    /// Run the invariant suite against a graph and print a pass/fail table.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BetaPolicyArg {
    #[value(name = "degree_ratio", alias = "degree-ratio")]
    DegreeRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Discrete,
    Ode,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Graph description (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Balancing factor for every vertex; overrides the file.
    #[arg(long, conflicts_with = "beta_policy")]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub beta_policy: Option<BetaPolicyArg>,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Also report the alpha-curvature kappa_alpha / (1 - alpha).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Positive step length, or "auto" for half the stability bound.
    #[arg(long, default_value = "auto", value_parser = parse_step)]
    pub step_size: StepSize,
    #[arg(long, default_value_t = 200)]
    pub max_steps: usize,
    /// Stop once every edge curvature is this close to the average.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Total volume; initial weights are rescaled to it.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Discrete)]
    pub integrator: IntegratorArg,
    /// Write every n-th recorded state to the trace (the last is always written).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trace_every: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Laziness used for the transport duality check.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
}

fn parse_step(s: &str) -> Result<StepSize, String> {
    if s == "auto" {
        return Ok(StepSize::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(StepSize::Fixed(v)),
        _ => Err(format!("expected \"auto\" or a positive number, got {s:?}")),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error(transparent)]
    GraphFile(#[from] GraphFileError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{failed} check(s) failed; first counterexample: {first}")]
    ChecksFailed { failed: usize, first: String },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "invalid_arguments",
            CliError::GraphFile(GraphFileError::Io(_)) => "io_error",
            CliError::GraphFile(GraphFileError::Json(_)) => "malformed_graph_file",
            CliError::GraphFile(GraphFileError::Graph(g)) | CliError::Flow(FlowError::Graph(g)) => {
                graph_code(g)
            }
            CliError::Flow(FlowError::StepTooLarge { .. }) => "step_too_large",
            CliError::Flow(FlowError::InvalidConfig(_)) => "invalid_config",
            CliError::Flow(FlowError::NonPositiveWeight { .. }) => "non_positive_weight",
            CliError::Flow(FlowError::VolumeNotConserved { .. }) => "volume_not_conserved",
            CliError::Flow(FlowError::Curvature(_)) | CliError::Curvature(_) => "numerical_failure",
            CliError::Output { .. } => "output_error",
            CliError::ChecksFailed { .. } => "check_failed",
        }
    }

    /// 1 for rejected input, 2 for a computation or property failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::GraphFile(_)
            | CliError::Output { .. }
            | CliError::Flow(
                FlowError::Graph(_) | FlowError::StepTooLarge { .. } | FlowError::InvalidConfig(_),
            ) => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.code(), "message": self.to_string() }).to_string()
    }
}

fn graph_code(e: &GraphError) -> &'static str {
    match e {
        GraphError::TooSmall { .. } => "too_small",
        GraphError::DuplicateVertex(_) => "duplicate_vertex",
        GraphError::UnknownVertex(_) => "unknown_vertex",
        GraphError::Loop(_) => "self_loop",
        GraphError::MultiEdge(..) => "multi_edge",
        GraphError::NonPositiveWeightOrLength { .. } => "non_positive_weight_or_length",
        GraphError::NotStronglyConnected => "not_strongly_connected",
        GraphError::BetaOutOfRange { .. } => "beta_out_of_range",
        GraphError::MissingBeta(_) => "missing_beta",
        GraphError::WeightCount { .. } => "weight_count",
    }
}

pub fn load_graph(args: &GraphArgs) -> Result<DiGraph, CliError> {
    if let Some(b) = args.beta {
        if !(0.0..=1.0).contains(&b) {
            return Err(CliError::Usage(format!("--beta {b} is outside [0, 1]")));
        }
    }
    let file = GraphFile::read(&args.graph)?;
    let overrides = BetaOverride {
        constant: args.beta,
        degree_ratio: args.beta_policy == Some(BetaPolicyArg::DegreeRatio),
    };
    Ok(file.to_graph(overrides).map_err(GraphFileError::from)?)
}

impl FlowArgs {
    pub fn config(&self) -> Result<FlowConfig, CliError> {
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(CliError::Usage(format!(
                "--tol {} must be nonnegative",
                self.tol
            )));
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(CliError::Usage(format!("--sigma {s} must be positive")));
            }
        }
        Ok(FlowConfig {
            step_size: self.step_size,
            max_steps: self.max_steps,
            stop_tolerance: self.tol,
            sigma: self.sigma,
            integrator: match self.integrator {
                IntegratorArg::Discrete => Integrator::Discrete,
                IntegratorArg::Ode => Integrator::Ode,
            },
        })
    }
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--alpha {alpha} must lie in [0, 1)"
        )))
    }
}

fn output(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.join(name))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Executes a parsed command. Human-readable output goes to `stdout`.
pub fn run(cli: &Cli, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Curvature(args) => {
            if let Some(a) = args.alpha {
                check_alpha(a)?;
            }
            let g = load_graph(&args.graph)?;
            let d = g.shortest_distances();
            let report = report::curvature_report(&g, &d, args.alpha)?;
            write_file(
                &output(&args.out, "curvature.json")?,
                &report::to_json(&report),
            )
        }
        Command::Flow(args) => {
            let config = args.config()?;
            let g = load_graph(&args.graph)?;
            let d = g.shortest_distances();
            let trace = dirricci_core::run_flow(&g, &d, &config)?;
            let csv_path = output(&args.out, "trace.csv")?;
            let file = fs::File::create(&csv_path).map_err(|source| CliError::Output {
                path: csv_path.clone(),
                source,
            })?;
            report::write_trace(&g, &trace, args.trace_every as usize, file).map_err(|e| {
                CliError::Output {
                    path: csv_path,
                    source: e.into(),
                }
            })?;
            let summary = report::flow_summary(&trace);
            write_file(
                &output(&args.out, "summary.json")?,
                &report::to_json(&summary),
            )
        }
        Command::Check(args) => {
            check_alpha(args.alpha)?;
            let g = load_graph(&args.graph)?;
            let d = g.shortest_distances();
            let results = check::run_checks(&g, &d, args.alpha);
            check::print_table(&results, stdout).map_err(|source| CliError::Output {
                path: PathBuf::from("<stdout>"),
                source,
            })?;
            let failed: Vec<_> = results
                .iter()
                .filter_map(|r| r.outcome.as_ref().err())
                .collect();
            match failed.first() {
                None => Ok(()),
                Some(first) => Err(CliError::ChecksFailed {
                    failed: failed.len(),
                    first: (*first).clone(),
                }),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        let validation = CliError::GraphFile(GraphError::NotStronglyConnected.into());
        assert_eq!(
            (validation.exit_code(), validation.code()),
            (1, "not_strongly_connected")
        );
        let property = CliError::ChecksFailed {
            failed: 1,
            first: "triple (v2, v3, v1)".into(),
        };
        assert_eq!(property.exit_code(), 2);
        assert!(property.to_json().contains("triple (v2, v3, v1)"));
        let drift = CliError::Flow(FlowError::VolumeNotConserved {
            step: 3,
            drift: 1e-6,
        });
        assert_eq!(drift.exit_code(), 2);
    }

    #[test]
    fn step_size_parsing() {
        assert_eq!(parse_step("auto"), Ok(StepSize::Auto));
        assert_eq!(parse_step("0.01"), Ok(StepSize::Fixed(0.01)));
        assert!(parse_step("0").is_err());
        assert!(parse_step("nan").is_err());
    }
}

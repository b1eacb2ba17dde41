//! Command-line front end for the shapemem studies: scenario parsing,
//! validation, dispatch and artifact output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod run;
pub mod scenario;

use std::path::PathBuf;

use clap::{Args, Parser};

pub use error::{CliError, CliResult};
pub use run::{derive_seed, run_scenario, RunSummary};
pub use scenario::{parse_scenario, Kind, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "shapemem",
    version,
    about = "Shape-memory evolution studies driven by scenario files"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub kind: Kind,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed; overrides the scenario's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Parse and validate only.
    #[arg(long)]
    pub dry_run: bool,
}

/// Outcome of one invocation.
#[derive(Debug)]
pub enum Outcome {
    Validated { kind: Kind },
    Ran(RunSummary),
}

/// Reads, validates and (unless dry) runs the scenario named on the
/// command line.
pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    let args = &cli.common;
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(CliError::io(format!("reading {}", args.scenario.display())))?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let kind = scenario.resolve_kind(Some(cli.kind))?;
    scenario.validate(kind)?;
    if args.dry_run {
        return Ok(Outcome::Validated { kind });
    }
    if let Some(n) = args.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let out = args
        .out
        .clone()
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("out/{kind}")));
    Ok(Outcome::Ran(run_scenario(
        &scenario,
        kind,
        &out,
        args.threads,
    )?))
}

//! Argument definitions and the five subcommands.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stratalloc::oracles::{bisection_multiplier, kkt_verify};
use stratalloc::popgen::{self, PopulationKind, PopulationSpec, StratifiedPopulation};
use stratalloc::rounding::{variance_csv, variance_table};
use stratalloc::{is_optimal_takeall, solve, Algorithm, AllocationResult, Stratum};

use crate::bench::{bench_csv, bench_problem, BenchConfig, DEFAULT_REPETITIONS, DEFAULT_WARMUP};
use crate::error::{CliError, CliResult};
use crate::io::{self, AllocationOutput, StrataTable};

const DEFAULT_FRACTIONS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Parser)]
#[command(name = "stratalloc", version, about = "Optimal sample allocation under upper bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one allocation problem and write the result as JSON.
    Allocate(AllocateArgs),
    /// Check an allocation against the optimality conditions.
    Verify(VerifyArgs),
    /// Time rna, sga and coma over several sample fractions.
    Bench(BenchArgs),
    /// Write a synthetic population as a strata CSV.
    Genpop(GenpopArgs),
    /// Compare continuous, rounded and integer-optimal design variances.
    Roundcmp(RoundcmpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Rna,
    Sga,
    Coma,
    Bisection,
}

impl From<Solver> for Algorithm {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Rna => Algorithm::Rna,
            Solver::Sga => Algorithm::Sga,
            Solver::Coma => Algorithm::Coma,
            Solver::Bisection => Algorithm::Bisection,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PopulationChoice {
    Table1,
    Power,
    Lognormal,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Strata CSV with header `label,a,b` or `label,N,S`.
    #[arg(long)]
    pub input: PathBuf,
    /// Total sample size.
    #[arg(long)]
    pub n: f64,
    #[arg(long, value_enum, default_value_t = Solver::Rna)]
    pub algorithm: Solver,
    /// Relative tolerance for the bisection solver.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub n: f64,
    /// Allocation JSON as written by `allocate`.
    #[arg(long)]
    pub allocation: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Where a population comes from: a strata CSV or a generator.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Strata CSV; takes precedence over --kind.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<PopulationChoice>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long, env = "STRATALLOC_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Number of lognormal blocks.
    #[arg(long, default_value_t = 100)]
    pub blocks: usize,
    #[arg(long, default_value_t = 10_000)]
    pub block_size: usize,
    /// Geometric strata per lognormal block.
    #[arg(long, default_value_t = 10)]
    pub strata_per_block: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Sample fraction n/Σb; repeat for several. Defaults to 0.1 to 0.5.
    #[arg(long = "fraction")]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    pub repetitions: usize,
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    pub warmup: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenpopArgs {
    #[arg(long, value_enum)]
    pub kind: PopulationChoice,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RoundcmpArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long = "fraction")]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
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
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("stratalloc: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Allocate(a) => {
            let out = cmd_allocate(&a.input, a.n, a.algorithm.into(), a.tol)?;
            if let Some(note) = &out.note {
                eprintln!("note: {note}");
            }
            io::emit(a.output.as_deref(), &out.to_json()?)
        }
        Command::Verify(a) => {
            let report = cmd_verify(&a.input, a.n, &a.allocation, a.tol)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Input(e.to_string()))?;
            io::emit(a.output.as_deref(), &(json + "\n"))?;
            if report.valid {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "failing: {}",
                    report.failing.join(", ")
                )))
            }
        }
        Command::Bench(a) => {
            let (id, strata) = load_strata(&a.source)?;
            let config = BenchConfig {
                fractions: fractions_or_default(a.fractions),
                repetitions: a.repetitions,
                warmup: a.warmup,
            };
            let rows = bench_problem(&id, &strata, &config)?;
            io::emit(a.output.as_deref(), &bench_csv(&rows))
        }
        Command::Genpop(a) => io::emit(a.output.as_deref(), &cmd_genpop(a.kind, &a.generator)?),
        Command::Roundcmp(a) => {
            let population = load_population(&a.source)?;
            let csv = cmd_roundcmp(&population, &fractions_or_default(a.fractions))?;
            io::emit(a.output.as_deref(), &csv)
        }
    }
}

fn fractions_or_default(fractions: Vec<f64>) -> Vec<f64> {
    if fractions.is_empty() {
        DEFAULT_FRACTIONS.to_vec()
    } else {
        fractions
    }
}

pub fn cmd_allocate(input: &Path, n: f64, algorithm: Algorithm, tol: f64) -> CliResult<AllocationOutput> {
    let table = io::read_strata(input)?;
    let problem = table.problem(n)?;
    let result = match algorithm {
        Algorithm::Bisection => bisection_multiplier(&problem, tol)?,
        other => solve(&problem, other)?,
    };
    Ok(AllocationOutput::new(&problem, &result))
}

/// Residuals of the optimality certificate plus the take-all fixed-point test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub valid: bool,
    pub kkt_valid: bool,
    pub fixed_point: bool,
    pub mu: f64,
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub complementary_slackness: f64,
    pub dual_feasibility: f64,
    pub tol: f64,
    pub failing: Vec<String>,
}

pub fn cmd_verify(input: &Path, n: f64, allocation: &Path, tol: f64) -> CliResult<VerifyReport> {
    let table = io::read_strata(input)?;
    let problem = table.problem(n)?;
    let claimed = io::read_allocation(allocation)?;
    let (x, take_all) = claimed.align(&problem)?;
    let result = AllocationResult {
        x,
        take_all,
        s_final: claimed.s_final,
        iterations: claimed.iterations,
        trace: Vec::new(),
        algorithm: claimed.algorithm.parse().unwrap_or(Algorithm::VAllocation),
    };
    let cert = kkt_verify(&problem, &result, tol);
    let fixed_point = is_optimal_takeall(&problem, &result.take_all);
    let mut failing: Vec<String> = cert.failing_conditions().into_iter().map(String::from).collect();
    if !fixed_point {
        failing.push("take-all fixed point".into());
    }
    Ok(VerifyReport {
        valid: failing.is_empty(),
        kkt_valid: cert.is_valid(),
        fixed_point,
        mu: cert.mu,
        stationarity: cert.stationarity,
        primal_feasibility: cert.primal_feasibility,
        complementary_slackness: cert.complementary_slackness,
        dual_feasibility: cert.dual_feasibility,
        tol,
        failing,
    })
}

fn lognormal_spec(g: &GeneratorArgs) -> PopulationSpec {
    PopulationSpec {
        kind: PopulationKind::LognormalBlocks {
            block_count: g.blocks,
            block_size: g.block_size,
            strata_per_block: g.strata_per_block,
        },
        seed: g.seed,
    }
}

pub fn cmd_genpop(kind: PopulationChoice, g: &GeneratorArgs) -> CliResult<String> {
    match kind {
        PopulationChoice::Table1 => io::problem_csv(popgen::table1_problem().strata()),
        PopulationChoice::Power => io::problem_csv(popgen::power_problem(1.0)?.strata()),
        PopulationChoice::Lognormal => io::population_csv(&popgen::generate(&lognormal_spec(g))?),
    }
}

fn source_id(s: &SourceArgs) -> CliResult<String> {
    if let Some(path) = &s.input {
        return Ok(path
            .file_stem()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string()));
    }
    let g = &s.generator;
    match s.kind {
        Some(PopulationChoice::Table1) => Ok("table1".into()),
        Some(PopulationChoice::Power) => Ok("power".into()),
        Some(PopulationChoice::Lognormal) => Ok(format!(
            "lognormal-b{}-l{}-seed{}",
            g.blocks, g.strata_per_block, g.seed
        )),
        None => Err(CliError::Input("either --input or --kind is required".into())),
    }
}

fn load_table(s: &SourceArgs) -> CliResult<Option<StrataTable>> {
    s.input.as_deref().map(io::read_strata).transpose()
}

/// Problem identifier and strata for `bench`.
pub fn load_strata(s: &SourceArgs) -> CliResult<(String, Vec<Stratum>)> {
    let id = source_id(s)?;
    if let Some(table) = load_table(s)? {
        return Ok((id, table.strata));
    }
    let strata = match s.kind.expect("checked by source_id") {
        PopulationChoice::Table1 => popgen::table1_problem().strata().to_vec(),
        PopulationChoice::Power => popgen::power_problem(1.0)?.strata().to_vec(),
        PopulationChoice::Lognormal => popgen::generate(&lognormal_spec(&s.generator))?
            .problem(1.0)?
            .strata()
            .to_vec(),
    };
    Ok((id, strata))
}

/// A population with integer stratum sizes, for `roundcmp`.
pub fn load_population(s: &SourceArgs) -> CliResult<StratifiedPopulation> {
    source_id(s)?;
    if let Some(table) = load_table(s)? {
        return table
            .population
            .ok_or_else(|| CliError::Input("rounding needs integer bounds (stratum sizes)".into()));
    }
    let spec = match s.kind.expect("checked by source_id") {
        PopulationChoice::Table1 => PopulationSpec::table1(),
        PopulationChoice::Power => PopulationSpec::power(),
        PopulationChoice::Lognormal => lognormal_spec(&s.generator),
    };
    Ok(popgen::generate(&spec)?)
}

pub fn cmd_roundcmp(population: &StratifiedPopulation, fractions: &[f64]) -> CliResult<String> {
    let rows = variance_table(population, fractions)?;
    if let Some(skipped) = rows.iter().find_map(|r| r.skipped.as_ref()) {
        return Err(CliError::Input(skipped.clone()));
    }
    Ok(variance_csv(&rows))
}

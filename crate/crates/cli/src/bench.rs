//! Timing harness: median wall time of each solver over repeated runs.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;
use stratalloc::{coma, rna, sga, Algorithm, AllocationProblem, AllocationResult, Stratum};

use crate::error::{CliError, CliResult};

pub const BENCH_ALGORITHMS: [Algorithm; 3] = [Algorithm::Rna, Algorithm::Sga, Algorithm::Coma];
pub const DEFAULT_WARMUP: usize = 10;
pub const DEFAULT_REPETITIONS: usize = 100;

pub const BENCH_CSV_HEADER: &str = "algorithm,problem_id,K,n,fraction,median_ns,repetitions,iterations,take_all_count";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub algorithm: Algorithm,
    pub problem_id: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub n: f64,
    pub fraction: f64,
    pub median_ns: u64,
    pub repetitions: usize,
    pub iterations: usize,
    pub take_all_count: usize,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub fractions: Vec<f64>,
    pub repetitions: usize,
    pub warmup: usize,
}

impl BenchConfig {
    pub fn new(fractions: Vec<f64>, repetitions: usize) -> Self {
        BenchConfig {
            fractions,
            repetitions,
            warmup: DEFAULT_WARMUP,
        }
    }
}

fn run(problem: &AllocationProblem, algorithm: Algorithm) -> AllocationResult {
    match algorithm {
        Algorithm::Rna => rna(problem),
        Algorithm::Sga => sga(problem),
        Algorithm::Coma => coma(problem),
        other => unreachable!("{other} is not benchmarked"),
    }
}

/// Median of the samples; the mean of the two middle values for even counts.
pub fn median(samples: &mut [u64]) -> u64 {
    samples.sort_unstable();
    let m = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[m]
    } else {
        ((samples[m - 1] as u128 + samples[m] as u128) / 2) as u64
    }
}

/// `n = round(fraction·Σb)`, at least one unit.
pub fn sample_size(total_bound: f64, fraction: f64) -> CliResult<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CliError::Input(format!("sample fraction {fraction} is outside (0, 1]")));
    }
    Ok((fraction * total_bound).round().clamp(1.0, total_bound))
}

/// Times every benchmarked solver on every fraction of one problem.
/// The timed section is a single solver call; nothing runs in parallel.
pub fn bench_problem(problem_id: &str, strata: &[Stratum], config: &BenchConfig) -> CliResult<Vec<BenchResult>> {
    if config.repetitions == 0 {
        return Err(CliError::Input("repetitions must be at least 1".into()));
    }
    let total: f64 = strata.iter().map(|s| s.b).sum();
    let mut rows = Vec::new();
    for &fraction in &config.fractions {
        let n = sample_size(total, fraction)?;
        let problem = AllocationProblem::new(strata.to_vec(), n)?;
        for algorithm in BENCH_ALGORITHMS {
            for _ in 0..config.warmup {
                black_box(run(black_box(&problem), algorithm));
            }
            let mut samples = Vec::with_capacity(config.repetitions);
            let mut last = None;
            for _ in 0..config.repetitions {
                let start = Instant::now();
                let res = black_box(run(black_box(&problem), algorithm));
                samples.push(start.elapsed().as_nanos().max(1) as u64);
                last = Some(res);
            }
            let res = last.expect("at least one repetition");
            rows.push(BenchResult {
                algorithm,
                problem_id: problem_id.to_string(),
                k: problem.len(),
                n,
                fraction,
                median_ns: median(&mut samples),
                repetitions: config.repetitions,
                iterations: res.iterations,
                take_all_count: res.take_all.len(),
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchResult]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.algorithm, r.problem_id, r.k, r.n, r.fraction, r.median_ns, r.repetitions, r.iterations, r.take_all_count
        );
    }
    out
}

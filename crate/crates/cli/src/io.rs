//! Strata CSV and allocation JSON formats.
//!
//! A strata file has either the header `label,a,b` (the generic problem) or
//! `label,N,S` (stratum sizes and standard deviations, converted with
//! `a = N·S`, `b = N`). The sizes header is matched case-insensitively.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stratalloc::popgen::{PopulationStratum, StratifiedPopulation};
use stratalloc::{AllocationProblem, AllocationResult, Stratum, TakeAllSet};

use crate::error::{CliError, CliResult};

pub const PROBLEM_HEADER: [&str; 3] = ["label", "a", "b"];
pub const POPULATION_HEADER: [&str; 3] = ["label", "N", "S"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrataFormat {
    Problem,
    Population,
}

/// Parsed strata file. `population` is set when the file used the sizes
/// form, or when every bound is an integer so that `b` can serve as `N`.
#[derive(Debug, Clone)]
pub struct StrataTable {
    pub format: StrataFormat,
    pub strata: Vec<Stratum>,
    pub population: Option<StratifiedPopulation>,
}

impl StrataTable {
    pub fn problem(&self, n: f64) -> CliResult<AllocationProblem> {
        Ok(AllocationProblem::new(self.strata.clone(), n)?)
    }

    pub fn total_bound(&self) -> f64 {
        self.strata.iter().map(|s| s.b).sum()
    }
}

pub fn read_strata(path: &Path) -> CliResult<StrataTable> {
    let file = fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_strata(file, &path.display().to_string())
}

pub fn parse_strata<R: Read>(reader: R, source: &str) -> CliResult<StrataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{source}: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let format = match names.as_slice() {
        ["label", "a", "b"] => StrataFormat::Problem,
        ["label", n, s] if n.eq_ignore_ascii_case("n") && s.eq_ignore_ascii_case("s") => StrataFormat::Population,
        _ => {
            return Err(CliError::Input(format!(
                "{source}, line 1: expected header `label,a,b` or `label,N,S`, found `{}`",
                names.join(",")
            )))
        }
    };

    let mut strata = Vec::new();
    let mut pop = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("{source}, line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| CliError::Input(format!("{source}, line {line}: {msg}"));
        let label = record[0].to_string();
        if label.is_empty() {
            return Err(bad("empty label".into()));
        }
        let num = |i: usize| -> CliResult<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("`{}` is not a number", &record[i])))
        };
        let stratum = match format {
            StrataFormat::Problem => Stratum::new(label, num(1)?, num(2)?),
            StrataFormat::Population => {
                let size: u64 = record[1]
                    .parse()
                    .map_err(|_| bad(format!("N = `{}` is not a positive integer", &record[1])))?;
                let sd = num(2)?;
                if !(sd >= 0.0 && sd.is_finite()) {
                    return Err(bad(format!("S = {sd} must be non-negative")));
                }
                pop.push(PopulationStratum {
                    label: label.clone(),
                    size,
                    sd,
                });
                Stratum::new(label, size as f64 * sd, size as f64)
            }
        }
        .map_err(|e| bad(e.to_string()))?;
        strata.push(stratum);
    }
    if strata.is_empty() {
        return Err(CliError::Input(format!("{source}: no strata")));
    }

    let population = match format {
        StrataFormat::Population => Some(StratifiedPopulation { strata: pop }),
        StrataFormat::Problem => strata
            .iter()
            .map(|s| {
                (s.b.fract() == 0.0 && s.b <= u64::MAX as f64).then(|| PopulationStratum {
                    label: s.label.clone(),
                    size: s.b as u64,
                    sd: s.a / s.b,
                })
            })
            .collect::<Option<Vec<_>>>()
            .map(|strata| StratifiedPopulation { strata }),
    };
    Ok(StrataTable {
        format,
        strata,
        population,
    })
}

pub fn problem_csv(strata: &[Stratum]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(PROBLEM_HEADER).map_err(ser)?;
    for s in strata {
        w.write_record([s.label.clone(), s.a.to_string(), s.b.to_string()])
            .map_err(ser)?;
    }
    finish_csv(w)
}

pub fn population_csv(population: &StratifiedPopulation) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(POPULATION_HEADER).map_err(ser)?;
    for s in &population.strata {
        w.write_record([s.label.clone(), s.size.to_string(), s.sd.to_string()])
            .map_err(ser)?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationEntry {
    pub label: String,
    pub x: f64,
}

/// The JSON written by `allocate` and read back by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationOutput {
    pub algorithm: String,
    pub n: f64,
    pub s_final: f64,
    pub iterations: usize,
    pub take_all: Vec<String>,
    pub allocation: Vec<AllocationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub const CENSUS_NOTE: &str = "trivial census: n equals the total of the bounds, every stratum is take-all";

impl AllocationOutput {
    pub fn new(problem: &AllocationProblem, result: &AllocationResult) -> Self {
        AllocationOutput {
            algorithm: result.algorithm.to_string(),
            n: problem.n(),
            s_final: result.s_final,
            iterations: result.iterations,
            take_all: result.take_all.labels(problem).into_iter().map(String::from).collect(),
            allocation: problem
                .labels()
                .zip(&result.x)
                .map(|(label, &x)| AllocationEntry {
                    label: label.to_string(),
                    x,
                })
                .collect(),
            note: problem.is_census().then(|| CENSUS_NOTE.to_string()),
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| CliError::Input(e.to_string()))
    }

    /// Allocation vector and take-all set in the order of `problem`'s strata.
    pub fn align(&self, problem: &AllocationProblem) -> CliResult<(Vec<f64>, TakeAllSet)> {
        if self.allocation.len() != problem.len() {
            return Err(CliError::Input(format!(
                "allocation has {} entries but the problem has {} strata",
                self.allocation.len(),
                problem.len()
            )));
        }
        let mut x = vec![f64::NAN; problem.len()];
        for entry in &self.allocation {
            let i = problem
                .index_of(&entry.label)
                .ok_or_else(|| CliError::Input(format!("allocation names unknown stratum `{}`", entry.label)))?;
            if !x[i].is_nan() {
                return Err(CliError::Input(format!(
                    "stratum `{}` appears twice in the allocation",
                    entry.label
                )));
            }
            x[i] = entry.x;
        }
        let take_all = TakeAllSet::from_labels(problem, &self.take_all)?;
        Ok((x, take_all))
    }
}

pub fn read_allocation(path: &Path) -> CliResult<AllocationOutput> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Twelve significant digits: equal strings for values within ~1e-12 relative.
pub fn canonical_number(x: f64) -> String {
    format!("{x:.11e}")
}

/// The allocation array in canonical form, one `label=value` per line.
pub fn canonical_allocation(output: &AllocationOutput) -> String {
    output
        .allocation
        .iter()
        .map(|e| format!("{}={}\n", e.label, canonical_number(e.x)))
        .collect()
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

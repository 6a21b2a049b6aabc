//! Integer rounding of continuous allocations and the variance comparison
//! between continuous, rounded and integer-optimal allocations.

use std::fmt::Write as _;

use serde::Serialize;

use crate::algorithms::rna;
use crate::error::{AllocError, Result};
use crate::model::srswor_variance;
use crate::oracles::greedy_integer_optimal;
use crate::popgen::StratifiedPopulation;

/// Rounds a continuous allocation to integers summing to `n`.
///
/// Each entry is floored; entries that floor to zero are raised to one unit
/// (the variance is infinite at zero). Leftover units then go one at a time
/// to the entries with the largest fractional part, skipping entries at their
/// bound, ties to the earlier entry. If raising entries to one overshoots
/// `n`, the excess is taken back from the largest entries below their bound.
///
/// When every `x_w ≥ 1`, every output entry differs from `x_w` by less than 1.
pub fn round_allocation(x: &[f64], n: u64, bounds: &[u64]) -> Result<Vec<u64>> {
    if x.len() != bounds.len() {
        return Err(AllocError::Domain(format!(
            "allocation has {} entries but {} bounds were given",
            x.len(),
            bounds.len()
        )));
    }
    let total: f64 = x.iter().sum();
    if (total - n as f64).abs() > 1e-9 * (n as f64).max(1.0) {
        return Err(AllocError::Precondition(format!(
            "allocation sums to {total}, expected {n}"
        )));
    }
    for (w, (&xw, &bw)) in x.iter().zip(bounds).enumerate() {
        if !(xw >= 0.0) || xw > bw as f64 * (1.0 + 1e-12) || bw == 0 {
            return Err(AllocError::Precondition(format!(
                "entry {}: {xw} is outside [0, {bw}]",
                w + 1
            )));
        }
    }
    if (x.len() as u64) > n {
        return Err(AllocError::Precondition(format!(
            "cannot give each of {} strata a unit with n = {n}",
            x.len()
        )));
    }

    let mut rounded: Vec<u64> = x
        .iter()
        .zip(bounds)
        .map(|(&xw, &bw)| (xw.floor() as u64).min(bw))
        .collect();
    let mut raised = vec![false; x.len()];
    for (r, flag) in rounded.iter_mut().zip(raised.iter_mut()) {
        if *r == 0 {
            *r = 1;
            *flag = true;
        }
    }

    let assigned: u64 = rounded.iter().sum();
    if assigned <= n {
        let leftover = (n - assigned) as usize;
        let mut candidates: Vec<usize> = (0..x.len()).filter(|&w| !raised[w] && rounded[w] < bounds[w]).collect();
        if candidates.len() < leftover {
            return Err(AllocError::Precondition(format!(
                "{leftover} units left but only {} strata can take one",
                candidates.len()
            )));
        }
        let frac = |w: usize| x[w] - x[w].floor();
        // stable sort keeps input order among equal fractional parts
        candidates.sort_by(|&i, &j| frac(j).total_cmp(&frac(i)));
        for &w in &candidates[..leftover] {
            rounded[w] += 1;
        }
    } else {
        let mut excess = assigned - n;
        let mut donors: Vec<usize> = (0..x.len()).filter(|&w| rounded[w] > 1).collect();
        // strata below their bound first, then largest entries
        donors.sort_by(|&i, &j| {
            (rounded[i] == bounds[i])
                .cmp(&(rounded[j] == bounds[j]))
                .then(x[j].total_cmp(&x[i]))
        });
        while excess > 0 {
            let mut progressed = false;
            for &w in &donors {
                if excess == 0 {
                    break;
                }
                if rounded[w] > 1 {
                    rounded[w] -= 1;
                    excess -= 1;
                    progressed = true;
                }
            }
            if !progressed {
                return Err(AllocError::Precondition("no stratum can give up a unit".into()));
            }
        }
    }
    Ok(rounded)
}

/// One row of the continuous / rounded / integer variance comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub sample_fraction: f64,
    pub n: u64,
    /// Variance at the continuous optimum.
    pub d2_continuous: f64,
    /// Variance at the rounded continuous optimum.
    pub d2_rounded: f64,
    /// Variance at the integer optimum.
    pub d2_integer: f64,
    pub ratio_cont_over_int: f64,
    pub ratio_rounded_over_int: f64,
    /// Set when the row could not be computed (`n < K`).
    pub skipped: Option<String>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 && num == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// For each sample fraction: `n = round(fraction·ΣN)`, the continuous optimum
/// by rNa, its rounding, and the integer optimum, compared by design variance.
pub fn variance_table(population: &StratifiedPopulation, fractions: &[f64]) -> Result<Vec<VarianceReport>> {
    let sizes = population.sizes();
    let sds = population.sds();
    let bounds = sizes.clone();
    let total = population.total_size();
    let k = population.len() as u64;

    fractions
        .iter()
        .map(|&fraction| {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(AllocError::Domain(format!(
                    "sample fraction {fraction} is outside (0, 1]"
                )));
            }
            let n = (fraction * total as f64).round() as u64;
            if n < k {
                return Ok(VarianceReport {
                    sample_fraction: fraction,
                    n,
                    d2_continuous: f64::NAN,
                    d2_rounded: f64::NAN,
                    d2_integer: f64::NAN,
                    ratio_cont_over_int: f64::NAN,
                    ratio_rounded_over_int: f64::NAN,
                    skipped: Some(format!("n = {n} is below the number of strata {k}")),
                });
            }
            let problem = population.problem(n as f64)?;
            let continuous = rna(&problem).x;
            let rounded: Vec<f64> = round_allocation(&continuous, n, &bounds)?
                .into_iter()
                .map(|v| v as f64)
                .collect();
            let integer = greedy_integer_optimal(&problem)?.x;

            let d2_continuous = srswor_variance(&sizes, &sds, &continuous)?;
            let d2_rounded = srswor_variance(&sizes, &sds, &rounded)?;
            let d2_integer = srswor_variance(&sizes, &sds, &integer)?;
            Ok(VarianceReport {
                sample_fraction: fraction,
                n,
                d2_continuous,
                d2_rounded,
                d2_integer,
                ratio_cont_over_int: ratio(d2_continuous, d2_integer),
                ratio_rounded_over_int: ratio(d2_rounded, d2_integer),
                skipped: None,
            })
        })
        .collect()
}

pub const VARIANCE_CSV_HEADER: &str = "fraction,n,d2_cont,d2_rounded,d2_int,ratio_ci,ratio_ri";

/// CSV with header [`VARIANCE_CSV_HEADER`]; skipped rows leave the numeric
/// fields empty.
pub fn variance_csv(reports: &[VarianceReport]) -> String {
    let mut out = String::from(VARIANCE_CSV_HEADER);
    out.push('\n');
    for r in reports {
        if r.skipped.is_some() {
            let _ = writeln!(out, "{},{},,,,,", r.sample_fraction, r.n);
        } else {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.sample_fraction,
                r.n,
                r.d2_continuous,
                r.d2_rounded,
                r.d2_integer,
                r.ratio_cont_over_int,
                r.ratio_rounded_over_int
            );
        }
    }
    out
}

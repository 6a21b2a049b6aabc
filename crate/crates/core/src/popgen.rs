//! Synthetic populations for the allocation experiments.
//!
//! Every generator is a pure function of its [`PopulationSpec`]. Random
//! draws use ChaCha8 seeded with `seed`, one stream per block (stream `i` for
//! block `i`, stream `0` for the final stratum permutation), so blocks are
//! independent of generation order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{AllocError, Result};
use crate::model::{AllocationProblem, Stratum};

/// `c_w` of the 20-stratum Table-1 population, `b_w = 1000`, `n = 8000`.
///
/// Stratum 2 is 2.56: the products `c_2·s(V_1) = 0.480` and
/// `c_2·s(V_3) = 1.0011` printed alongside the column both give 2.56, and the
/// printed 2.65 is inconsistent with them.
pub const TABLE1_C: [f64; 20] = [
    0.33, 2.56, 0.15, 0.66, 0.15, 15.45, 1.49, 1.74, 0.30, 0.93, 2.37, 0.36, 0.14, 0.37, 4.25, 0.39, 10.21, 0.10, 0.23,
    0.51,
];
pub const TABLE1_BOUND: f64 = 1000.0;
pub const TABLE1_N: f64 = 8000.0;

/// Table-1 problem: `a_w = 1000·c_w`, `b_w = 1000`, `n = 8000`, labels `1..=20`.
pub fn table1_problem() -> AllocationProblem {
    let a: Vec<f64> = TABLE1_C.iter().map(|c| c * TABLE1_BOUND).collect();
    AllocationProblem::from_slices(&a, &[TABLE1_BOUND; 20], TABLE1_N).expect("table-1 data is a valid problem")
}

/// The `S_w = 10^w`, `N_w = 1000`, `w = 1..=20` population as a problem with
/// total sample size `n`. `a_20 = 10²³` is well inside double range.
pub fn power_problem(n: f64) -> Result<AllocationProblem> {
    generate(&PopulationSpec::power())?.problem(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationKind {
    Table1,
    LognormalBlocks {
        block_count: usize,
        block_size: usize,
        strata_per_block: usize,
    },
    Power {
        strata: usize,
        base: f64,
        size: u64,
    },
}

/// Recipe for a synthetic population. Identical specs give bit-identical
/// populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    #[serde(flatten)]
    pub kind: PopulationKind,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn table1() -> Self {
        PopulationSpec {
            kind: PopulationKind::Table1,
            seed: 0,
        }
    }

    pub fn power() -> Self {
        PopulationSpec {
            kind: PopulationKind::Power {
                strata: 20,
                base: 10.0,
                size: 1000,
            },
            seed: 0,
        }
    }

    /// Blocks of 10 000 lognormal values, 10 geometric strata per block.
    pub fn lognormal(block_count: usize, seed: u64) -> Self {
        PopulationSpec {
            kind: PopulationKind::LognormalBlocks {
                block_count,
                block_size: 10_000,
                strata_per_block: 10,
            },
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStratum {
    pub label: String,
    /// `N_w`.
    pub size: u64,
    /// `S_w`, the standard deviation with divisor `N_w − 1`.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StratifiedPopulation {
    pub strata: Vec<PopulationStratum>,
}

impl StratifiedPopulation {
    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    pub fn total_size(&self) -> u64 {
        self.strata.iter().map(|s| s.size).sum()
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.strata.iter().map(|s| s.size).collect()
    }

    pub fn sds(&self) -> Vec<f64> {
        self.strata.iter().map(|s| s.sd).collect()
    }

    /// The SRSWOR problem: `a_w = N_w·S_w`, `b_w = N_w`.
    pub fn problem(&self, n: f64) -> Result<AllocationProblem> {
        let strata = self
            .strata
            .iter()
            .map(|s| Stratum::new(s.label.clone(), s.size as f64 * s.sd, s.size as f64))
            .collect::<Result<Vec<_>>>()?;
        AllocationProblem::new(strata, n)
    }
}

pub fn generate(spec: &PopulationSpec) -> Result<StratifiedPopulation> {
    match &spec.kind {
        PopulationKind::Table1 => Ok(StratifiedPopulation {
            strata: TABLE1_C
                .iter()
                .enumerate()
                .map(|(i, &c)| PopulationStratum {
                    label: (i + 1).to_string(),
                    size: TABLE1_BOUND as u64,
                    sd: c,
                })
                .collect(),
        }),
        PopulationKind::Power { strata, base, size } => {
            if *strata == 0 || !(*base > 0.0) || *size == 0 {
                return Err(AllocError::Generation(format!(
                    "power population needs strata > 0, base > 0, size > 0 (got {strata}, {base}, {size})"
                )));
            }
            Ok(StratifiedPopulation {
                strata: (1..=*strata)
                    .map(|w| PopulationStratum {
                        label: w.to_string(),
                        size: *size,
                        sd: base.powi(w as i32),
                    })
                    .collect(),
            })
        }
        PopulationKind::LognormalBlocks { .. } => lognormal_population(spec),
    }
}

/// Concatenation of independently drawn lognormal blocks, each split into
/// geometric strata, in a seed-determined random stratum order.
///
/// Block `i` (1-based) has log-mean 0 and log-sd `ln(1 + i)`. Stratum labels
/// are `b{block}s{stratum}` so they survive the permutation.
pub fn lognormal_population(spec: &PopulationSpec) -> Result<StratifiedPopulation> {
    let PopulationKind::LognormalBlocks {
        block_count,
        block_size,
        strata_per_block,
    } = spec.kind
    else {
        return Err(AllocError::Generation(
            "spec is not a lognormal block population".into(),
        ));
    };
    if block_count == 0 || block_size < 2 || strata_per_block < 2 {
        return Err(AllocError::Generation(format!(
            "need block_count ≥ 1, block_size ≥ 2, strata_per_block ≥ 2 \
             (got {block_count}, {block_size}, {strata_per_block})"
        )));
    }

    let mut strata = Vec::new();
    for block in 1..=block_count {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(block as u64);
        let dist = LogNormal::new(0.0, (1.0 + block as f64).ln()).map_err(|e| AllocError::Generation(e.to_string()))?;
        let mut values: Vec<f64> = dist.sample_iter(&mut rng).take(block_size).collect();
        values.sort_by(f64::total_cmp);
        if values[0] == values[values.len() - 1] {
            return Err(AllocError::Generation(format!("block {block}: all values are equal")));
        }
        for (h, members) in stratify(&values, strata_per_block)?.into_iter().enumerate() {
            strata.push(PopulationStratum {
                label: format!("b{block}s{}", h + 1),
                size: members.len() as u64,
                sd: stratum_sd(members)?,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    strata.shuffle(&mut rng);
    Ok(StratifiedPopulation { strata })
}

/// Geometric stratum boundaries `k_h = min·(max/min)^(h/L)`, `h = 1..L−1`.
///
/// `values` must be sorted ascending and positive. Returns no boundaries when
/// all values are equal.
pub fn geometric_strata(values: &[f64], strata: usize) -> Result<Vec<f64>> {
    if strata < 2 {
        return Err(AllocError::Domain(format!("need at least 2 strata, got {strata}")));
    }
    let (Some(&min), Some(&max)) = (values.first(), values.last()) else {
        return Err(AllocError::Domain("no values to stratify".into()));
    };
    if !(min > 0.0) {
        return Err(AllocError::Domain(format!(
            "geometric stratification needs positive values, min = {min}"
        )));
    }
    if min == max {
        return Ok(Vec::new());
    }
    let ratio = max / min;
    Ok((1..strata)
        .map(|h| min * ratio.powf(h as f64 / strata as f64))
        .collect())
}

/// Splits sorted `values` at the geometric boundaries into `(k_{h−1}, k_h]`
/// intervals. Empty intervals vanish; intervals with a single unit are
/// merged into their right neighbour (the last one into its left), since
/// `S_w` needs `N_w ≥ 2`.
pub fn stratify(values: &[f64], strata: usize) -> Result<Vec<&[f64]>> {
    let boundaries = geometric_strata(values, strata)?;
    let mut cuts = vec![0];
    for k in &boundaries {
        cuts.push(values.partition_point(|v| v <= k));
    }
    cuts.push(values.len());
    cuts.dedup();

    let mut merged: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for &end in &cuts[1..] {
        if end - start >= 2 {
            merged.push((start, end));
            start = end;
        }
    }
    if start < values.len() {
        match merged.last_mut() {
            Some(last) => last.1 = values.len(),
            None => merged.push((start, values.len())),
        }
    }
    Ok(merged.into_iter().map(|(s, e)| &values[s..e]).collect())
}

/// Standard deviation with divisor `N − 1`, computed in two passes.
pub fn stratum_sd(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(AllocError::Domain(format!(
            "standard deviation needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((ss / (n - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_shape() {
        let p = table1_problem();
        assert_eq!(p.len(), 20);
        assert_eq!(p.total_bound(), 20_000.0);
        assert_eq!(p.n(), 8000.0);
        assert_eq!(p.strata()[5].c(), 15.45);
    }

    #[test]
    fn power_shape() {
        let p = power_problem(1000.0).unwrap();
        assert_eq!(p.len(), 20);
        assert_eq!(p.strata()[19].a, 1e23);
        assert!(p.strata().windows(2).all(|w| w[0].c() < w[1].c()));
        assert!(power_problem(20_001.0).is_err());
    }

    #[test]
    fn geometric_boundaries() {
        let b = geometric_strata(&[1.0, 5.0, 1024.0], 2).unwrap();
        assert!((b[0] - 32.0).abs() < 1e-12);
        let b = geometric_strata(&[1.0, 1e6], 3).unwrap();
        assert!((b[0] - 100.0).abs() < 1e-9 && (b[1] - 1e4).abs() < 1e-7);
        assert!(geometric_strata(&[2.0, 2.0], 4).unwrap().is_empty());
        assert!(geometric_strata(&[0.0, 1.0], 2).is_err());
        assert!(geometric_strata(&[1.0, 2.0], 1).is_err());
        assert!(geometric_strata(&[], 2).is_err());
    }

    #[test]
    fn uniform_values_give_ten_growing_strata() {
        let values: Vec<f64> = (0..=9900).map(|i| 1.0 + i as f64 / 100.0).collect();
        let strata = stratify(&values, 10).unwrap();
        assert_eq!(strata.len(), 10);
        let widths: Vec<f64> = strata.iter().map(|s| s[s.len() - 1] - s[0]).collect();
        assert!(widths.windows(2).all(|w| w[0] < w[1]), "{widths:?}");
        assert_eq!(strata.iter().map(|s| s.len()).sum::<usize>(), values.len());
    }

    #[test]
    fn sparse_strata_are_merged() {
        // boundaries for L = 3 are 10 and 100: the middle interval is empty
        // and the last holds a single value
        let values = [1.0, 2.0, 3.0, 1000.0];
        let strata = stratify(&values, 3).unwrap();
        assert_eq!(strata, vec![&values[..]]);
        let values = [1.0, 1.5, 50.0, 60.0, 1000.0, 1000.0];
        let strata = stratify(&values, 3).unwrap();
        assert_eq!(strata.len(), 3);
    }

    #[test]
    fn sd_values() {
        assert_eq!(stratum_sd(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((stratum_sd(&[0.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(stratum_sd(&[1.0]).is_err());
    }

    #[test]
    fn lognormal_sd_close_to_analytic() {
        let sigma = 2f64.ln();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dist = LogNormal::new(0.0, sigma).unwrap();
        let values: Vec<f64> = dist.sample_iter(&mut rng).take(10_000).collect();
        let sd = stratum_sd(&values).unwrap();
        let e = (sigma * sigma).exp();
        let analytic = ((e - 1.0) * e).sqrt();
        assert!(((sd - analytic) / analytic).abs() < 0.05, "{sd} vs {analytic}");
    }

    #[test]
    fn lognormal_is_deterministic_and_valid() {
        let spec = PopulationSpec::lognormal(5, 42);
        let a = lognormal_population(&spec).unwrap();
        let b = lognormal_population(&spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, lognormal_population(&PopulationSpec::lognormal(5, 43)).unwrap());
        assert!(a.len() > 5 * 5 && a.len() <= 50);
        assert_eq!(a.total_size(), 50_000);
        assert!(a.problem(1000.0).is_ok());
    }

    #[test]
    fn lognormal_rejects_bad_specs() {
        assert!(lognormal_population(&PopulationSpec::table1()).is_err());
        let mut spec = PopulationSpec::lognormal(0, 1);
        assert!(lognormal_population(&spec).is_err());
        spec.kind = PopulationKind::LognormalBlocks {
            block_count: 1,
            block_size: 100,
            strata_per_block: 1,
        };
        assert!(lognormal_population(&spec).is_err());
    }

    #[test]
    fn generate_matches_problem_constructors() {
        let table = generate(&PopulationSpec::table1()).unwrap().problem(TABLE1_N).unwrap();
        for (x, y) in table.strata().iter().zip(table1_problem().strata()) {
            assert!((x.a - y.a).abs() < 1e-9 && x.b == y.b);
        }
    }
}

//! Problem and solution types, the `s(V)` function, V-allocations and the
//! take-all fixed-point test.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AllocError, Result};

/// One stratum: objective coefficient `a` and upper bound `b` on its sample size.
///
/// For stratified SRSWOR, `a = N·S` and `b = N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    pub a: f64,
    pub b: f64,
}

impl Stratum {
    pub fn new(label: impl Into<String>, a: f64, b: f64) -> Result<Self> {
        let label = label.into();
        let invalid = |reason: &str| AllocError::InvalidStratum {
            label: label.clone(),
            reason: reason.to_string(),
        };
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid(&format!("a must be positive and finite, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid(&format!("b must be positive and finite, got {b}")));
        }
        if !(a / b).is_finite() {
            return Err(invalid("ratio a/b overflows"));
        }
        Ok(Stratum { label, a, b })
    }

    /// `c = a / b`. A stratum is take-all at the optimum iff `c·s(V) ≥ 1`.
    #[inline]
    pub fn c(&self) -> f64 {
        self.a / self.b
    }
}

/// A validated instance: strata in input order plus the total sample size `n`.
///
/// Construction accepts `0 < n ≤ Σ b`; `n = Σ b` is the trivial census case
/// (see [`AllocationProblem::is_census`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    strata: Vec<Stratum>,
    n: f64,
    total_bound: f64,
}

impl AllocationProblem {
    pub fn new(strata: Vec<Stratum>, n: f64) -> Result<Self> {
        if strata.is_empty() {
            return Err(AllocError::NoStrata);
        }
        let mut seen = HashSet::with_capacity(strata.len());
        for s in &strata {
            // Re-validate: fields are public, so a Stratum may not have gone
            // through Stratum::new.
            Stratum::new(s.label.clone(), s.a, s.b)?;
            if !seen.insert(s.label.as_str()) {
                return Err(AllocError::DuplicateLabel(s.label.clone()));
            }
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(AllocError::InvalidSampleSize(n));
        }
        let total_bound: f64 = strata.iter().map(|s| s.b).sum();
        if n > total_bound {
            return Err(AllocError::Infeasible { n, total: total_bound });
        }
        Ok(AllocationProblem { strata, n, total_bound })
    }

    /// Convenience constructor from parallel `a` and `b` slices, labelled `1..=K`.
    pub fn from_slices(a: &[f64], b: &[f64], n: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(AllocError::Domain(format!(
                "a has {} entries but b has {}",
                a.len(),
                b.len()
            )));
        }
        let strata = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&a, &b))| Stratum::new((i + 1).to_string(), a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(strata, n)
    }

    /// Same strata, different total sample size.
    pub fn with_n(&self, n: f64) -> Result<Self> {
        Self::new(self.strata.clone(), n)
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// Number of strata `K`.
    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    pub fn total_bound(&self) -> f64 {
        self.total_bound
    }

    /// `n = Σ b`: the only feasible allocation is `x = b`.
    pub fn is_census(&self) -> bool {
        self.n == self.total_bound
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.strata.iter().position(|s| s.label == label)
    }

    pub fn label(&self, index: usize) -> &str {
        &self.strata[index].label
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.strata.iter().map(|s| s.label.as_str())
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.strata.iter().map(|s| s.b).collect()
    }
}

/// Set of take-all strata, stored as indices into the owning problem's strata.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TakeAllSet(BTreeSet<usize>);

impl TakeAllSet {
    pub fn empty() -> Self {
        TakeAllSet(BTreeSet::new())
    }

    /// All strata of `problem`.
    pub fn full(problem: &AllocationProblem) -> Self {
        TakeAllSet((0..problem.len()).collect())
    }

    /// Builds a set from raw indices without checking them against a problem.
    /// Out-of-range indices are reported by the operations that consume the set.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        TakeAllSet(indices.into_iter().collect())
    }

    pub fn from_labels<S: AsRef<str>>(problem: &AllocationProblem, labels: &[S]) -> Result<Self> {
        labels
            .iter()
            .map(|l| {
                problem
                    .index_of(l.as_ref())
                    .ok_or_else(|| AllocError::UnknownStratum(format!("`{}`", l.as_ref())))
            })
            .collect::<Result<BTreeSet<_>>>()
            .map(TakeAllSet)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.contains(&index)
    }

    pub fn insert(&mut self, index: usize) -> bool {
        self.0.insert(index)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Labels in input order.
    pub fn labels<'a>(&self, problem: &'a AllocationProblem) -> Vec<&'a str> {
        self.iter().map(|i| problem.label(i)).collect()
    }

    /// Membership mask of length `k`.
    pub fn mask(&self, k: usize) -> Vec<bool> {
        let mut mask = vec![false; k];
        for i in self.iter().filter(|&i| i < k) {
            mask[i] = true;
        }
        mask
    }

    fn check(&self, problem: &AllocationProblem) -> Result<()> {
        match self.0.iter().next_back() {
            Some(&i) if i >= problem.len() => Err(AllocError::UnknownStratum(format!(
                "index {i} (problem has {} strata)",
                problem.len()
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rna,
    Sga,
    Coma,
    Bisection,
    BruteForce,
    GreedyInteger,
    /// A V-allocation evaluated for a caller-supplied take-all set.
    VAllocation,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Rna => "rna",
            Algorithm::Sga => "sga",
            Algorithm::Coma => "coma",
            Algorithm::Bisection => "bisection",
            Algorithm::BruteForce => "brute_force",
            Algorithm::GreedyInteger => "greedy_integer",
            Algorithm::VAllocation => "v_allocation",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = AllocError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "rna" => Algorithm::Rna,
            "sga" => Algorithm::Sga,
            "coma" => Algorithm::Coma,
            "bisection" => Algorithm::Bisection,
            "brute_force" => Algorithm::BruteForce,
            "greedy_integer" => Algorithm::GreedyInteger,
            "v_allocation" => Algorithm::VAllocation,
            other => return Err(AllocError::Domain(format!("unknown algorithm `{other}`"))),
        })
    }
}

/// One iteration of a recursive solver.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub r: usize,
    /// `s(V_r)`.
    pub s_value: f64,
    /// Strata moved into the take-all set in this iteration (indices into the
    /// problem). Empty in the final iteration.
    pub added: Vec<usize>,
    /// `s(V_{r+1})`, recorded by coma only.
    pub s_next: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    /// Allocation in the problem's input order.
    pub x: Vec<f64>,
    pub take_all: TakeAllSet,
    /// `s(V)` at termination, `0` when `V = W`.
    pub s_final: f64,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    pub algorithm: Algorithm,
}

impl AllocationResult {
    pub fn total(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn get(&self, problem: &AllocationProblem, label: &str) -> Option<f64> {
        problem.index_of(label).map(|i| self.x[i])
    }

    /// The census solution `x = b`, shared by every solver.
    pub(crate) fn census(problem: &AllocationProblem, algorithm: Algorithm) -> Self {
        AllocationResult {
            x: problem.bounds(),
            take_all: TakeAllSet::full(problem),
            s_final: 0.0,
            iterations: 1,
            trace: vec![IterationRecord {
                r: 1,
                s_value: 0.0,
                added: (0..problem.len()).collect(),
                s_next: None,
            }],
            algorithm,
        }
    }
}

/// `s(V) = (n − Σ_{w∈V} b_w) / Σ_{w∉V} a_w`, with `s(W) = 0`.
///
/// The value is negative when `V` already uses more than `n`; callers that
/// need a positive `s` must check.
pub fn s_of(problem: &AllocationProblem, v: &TakeAllSet) -> Result<f64> {
    v.check(problem)?;
    if v.len() == problem.len() {
        return Ok(0.0);
    }
    let mut bound_sum = 0.0;
    let mut a_sum = 0.0;
    for (i, s) in problem.strata().iter().enumerate() {
        if v.contains(i) {
            bound_sum += s.b;
        } else {
            a_sum += s.a;
        }
    }
    Ok((problem.n() - bound_sum) / a_sum)
}

/// Allocation with `x_w = b_w` on `V` and `x_w = a_w·s` elsewhere.
pub(crate) fn allocation_for(problem: &AllocationProblem, mask: &[bool], s: f64) -> Vec<f64> {
    problem
        .strata()
        .iter()
        .zip(mask)
        .map(|(st, &in_v)| if in_v { st.b } else { st.a * s })
        .collect()
}

/// The V-allocation for a given take-all set.
///
/// Fails with [`AllocError::InfeasibleSubset`] when `s(V) ≤ 0`. `V = W` is
/// accepted only for the census case `n = Σ b`.
pub fn v_allocation(problem: &AllocationProblem, v: &TakeAllSet) -> Result<AllocationResult> {
    v.check(problem)?;
    if v.len() == problem.len() {
        if problem.is_census() {
            return Ok(AllocationResult::census(problem, Algorithm::VAllocation));
        }
        return Err(AllocError::InfeasibleSubset(0.0));
    }
    let s = s_of(problem, v)?;
    if s.is_nan() || s <= 0.0 {
        return Err(AllocError::InfeasibleSubset(s));
    }
    Ok(AllocationResult {
        x: allocation_for(problem, &v.mask(problem.len()), s),
        take_all: v.clone(),
        s_final: s,
        iterations: 1,
        trace: Vec::new(),
        algorithm: Algorithm::VAllocation,
    })
}

/// Whether `V` is the optimal take-all set: `V = {w : c_w·s(V) ≥ 1}` with
/// `V ⊊ W` and `s(V) > 0`, or `V = W` in the census case.
///
/// The comparison is exact; near-ties are the caller's concern.
pub fn is_optimal_takeall(problem: &AllocationProblem, v: &TakeAllSet) -> bool {
    if v.check(problem).is_err() {
        return false;
    }
    if problem.is_census() {
        return v.len() == problem.len();
    }
    if v.len() == problem.len() {
        return false;
    }
    let s = match s_of(problem, v) {
        Ok(s) if s > 0.0 => s,
        _ => return false,
    };
    problem
        .strata()
        .iter()
        .enumerate()
        .all(|(i, st)| v.contains(i) == (st.c() * s >= 1.0))
}

/// `Σ a_w² / x_w`.
pub fn objective(problem: &AllocationProblem, x: &[f64]) -> Result<f64> {
    if x.len() != problem.len() {
        return Err(AllocError::Domain(format!(
            "allocation has {} entries, problem has {} strata",
            x.len(),
            problem.len()
        )));
    }
    let mut total = 0.0;
    for (st, &xw) in problem.strata().iter().zip(x) {
        if !(xw > 0.0) {
            return Err(AllocError::Domain(format!(
                "x for stratum `{}` must be positive, got {xw}",
                st.label
            )));
        }
        total += st.a * st.a / xw;
    }
    Ok(total)
}

/// Design variance of the stratified SRSWOR estimator of a total,
/// `Σ d_w²/x_w − Σ d_w²/N_w` with `d_w = N_w·S_w`.
///
/// Evaluated termwise as `d_w²·(1/x_w − 1/N_w)`, so a census is exactly zero.
pub fn srswor_variance(sizes: &[u64], sds: &[f64], x: &[f64]) -> Result<f64> {
    if sizes.len() != sds.len() || sizes.len() != x.len() {
        return Err(AllocError::Domain(format!(
            "length mismatch: {} sizes, {} standard deviations, {} allocations",
            sizes.len(),
            sds.len(),
            x.len()
        )));
    }
    let mut total = 0.0;
    for (w, ((&big_n, &sd), &xw)) in sizes.iter().zip(sds).zip(x).enumerate() {
        let big_n = big_n as f64;
        if !(xw > 0.0) || xw > big_n {
            return Err(AllocError::Domain(format!(
                "stratum {}: allocation {xw} outside (0, {big_n}]",
                w + 1
            )));
        }
        if sd < 0.0 || !sd.is_finite() {
            return Err(AllocError::Domain(format!(
                "stratum {}: standard deviation {sd} is not a nonnegative number",
                w + 1
            )));
        }
        let d = big_n * sd;
        total += d * d * (1.0 / xw - 1.0 / big_n);
    }
    Ok(total)
}

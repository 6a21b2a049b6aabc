//! The recursive solvers: rNa, SGa and coma.
//!
//! All three return the same allocation; they differ in how the take-all set
//! is searched for and therefore in iteration counts and running time.
//! Comparisons against `1` are exact, with no tolerance.

use std::cmp::Ordering;

use crate::error::Result;
use crate::model::{allocation_for, Algorithm, AllocationProblem, AllocationResult, IterationRecord, TakeAllSet};
use crate::oracles;

/// Dispatches to the named solver. `Bisection` runs with relative tolerance 1e-12.
pub fn solve(problem: &AllocationProblem, algorithm: Algorithm) -> Result<AllocationResult> {
    match algorithm {
        Algorithm::Rna => Ok(rna(problem)),
        Algorithm::Sga => Ok(sga(problem)),
        Algorithm::Coma => Ok(coma(problem)),
        Algorithm::Bisection => oracles::bisection_multiplier(problem, 1e-12),
        Algorithm::BruteForce => {
            let v = oracles::brute_force_subset(problem)?;
            let mut res = crate::model::v_allocation(problem, &v)?;
            res.algorithm = Algorithm::BruteForce;
            Ok(res)
        }
        Algorithm::GreedyInteger => oracles::greedy_integer_optimal(problem),
        Algorithm::VAllocation => crate::model::v_allocation(problem, &TakeAllSet::empty()),
    }
}

/// Recursive Neyman allocation.
///
/// Each iteration computes `s(V_r)` once and then moves every remaining
/// stratum with `c_w·s(V_r) ≥ 1` into the take-all set in a single pass.
/// The complement's `Σ a` is re-accumulated during that pass instead of being
/// obtained by subtraction, which would cancel catastrophically when the
/// take-all strata dominate `Σ a`.
pub fn rna(problem: &AllocationProblem) -> AllocationResult {
    if problem.is_census() {
        return AllocationResult::census(problem, Algorithm::Rna);
    }
    let strata = problem.strata();
    let k = strata.len();
    let mut in_v = vec![false; k];
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut bound_sum = 0.0;
    let mut a_sum: f64 = strata.iter().map(|s| s.a).sum();
    let mut trace = Vec::new();
    let mut r = 1;

    loop {
        let s = (problem.n() - bound_sum) / a_sum;
        let mut added = Vec::new();
        let mut kept = Vec::with_capacity(remaining.len());
        let mut kept_a = 0.0;
        for &i in &remaining {
            if strata[i].c() * s >= 1.0 {
                added.push(i);
            } else {
                kept.push(i);
                kept_a += strata[i].a;
            }
        }

        if added.is_empty() {
            trace.push(IterationRecord {
                r,
                s_value: s,
                added,
                s_next: None,
            });
            return AllocationResult {
                x: allocation_for(problem, &in_v, s),
                take_all: TakeAllSet::from_indices((0..k).filter(|&i| in_v[i])),
                s_final: s,
                iterations: r,
                trace,
                algorithm: Algorithm::Rna,
            };
        }
        for &i in &added {
            in_v[i] = true;
            bound_sum += strata[i].b;
        }
        trace.push(IterationRecord {
            r,
            s_value: s,
            added,
            s_next: None,
        });
        if kept.is_empty() {
            // Only reachable through rounding when n is within an ulp of Σb.
            let mut res = AllocationResult::census(problem, Algorithm::Rna);
            res.iterations = r;
            res.trace = trace;
            return res;
        }
        remaining = kept;
        a_sum = kept_a;
        r += 1;
    }
}

/// Strata sorted by non-increasing `c`, with prefix sums of `b` and suffix
/// sums of `a` so that `s(V_r)` for `V_r = {first r−1 strata}` is O(1).
struct SortedStrata {
    order: Vec<usize>,
    c: Vec<f64>,
    prefix_b: Vec<f64>,
    suffix_a: Vec<f64>,
    n: f64,
}

impl SortedStrata {
    fn new(problem: &AllocationProblem) -> Self {
        let strata = problem.strata();
        let k = strata.len();
        let mut order: Vec<usize> = (0..k).collect();
        // stable: ties in c keep input order
        order.sort_by(|&i, &j| strata[j].c().partial_cmp(&strata[i].c()).unwrap_or(Ordering::Equal));
        let c = order.iter().map(|&i| strata[i].c()).collect();
        let mut prefix_b = Vec::with_capacity(k + 1);
        prefix_b.push(0.0);
        for &i in &order {
            let last = *prefix_b.last().unwrap();
            prefix_b.push(last + strata[i].b);
        }
        // summed from the smallest-c end
        let mut suffix_a = vec![0.0; k + 1];
        for j in (0..k).rev() {
            suffix_a[j] = suffix_a[j + 1] + strata[order[j]].a;
        }
        SortedStrata {
            order,
            c,
            prefix_b,
            suffix_a,
            n: problem.n(),
        }
    }

    fn len(&self) -> usize {
        self.order.len()
    }

    /// `s` of the set holding the first `taken` sorted strata; `0` when all are taken.
    fn s(&self, taken: usize) -> f64 {
        if taken == self.len() {
            0.0
        } else {
            (self.n - self.prefix_b[taken]) / self.suffix_a[taken]
        }
    }

    fn finish(
        &self,
        problem: &AllocationProblem,
        taken: usize,
        trace: Vec<IterationRecord>,
        algorithm: Algorithm,
    ) -> AllocationResult {
        let s = self.s(taken);
        let take_all = TakeAllSet::from_indices(self.order[..taken].iter().copied());
        let x = if taken == self.len() {
            problem.bounds()
        } else {
            allocation_for(problem, &take_all.mask(self.len()), s)
        };
        AllocationResult {
            x,
            take_all,
            s_final: s,
            iterations: trace.len(),
            trace,
            algorithm,
        }
    }
}

/// Stenger–Gabler allocation: walk the strata in non-increasing `c` order and
/// stop at the first `r` with `c_r·s(V_r) < 1`.
pub fn sga(problem: &AllocationProblem) -> AllocationResult {
    if problem.is_census() {
        return AllocationResult::census(problem, Algorithm::Sga);
    }
    let sorted = SortedStrata::new(problem);
    let k = sorted.len();
    let mut trace = Vec::new();
    for j in 0..k {
        let s = sorted.s(j);
        if sorted.c[j] * s < 1.0 {
            trace.push(IterationRecord {
                r: j + 1,
                s_value: s,
                added: Vec::new(),
                s_next: None,
            });
            return sorted.finish(problem, j, trace, Algorithm::Sga);
        }
        trace.push(IterationRecord {
            r: j + 1,
            s_value: s,
            added: vec![sorted.order[j]],
            s_next: None,
        });
    }
    sorted.finish(problem, k, trace, Algorithm::Sga)
}

/// Change-of-monotonicity allocation: same ordering as [`sga`], but stop at
/// the first `r` with `s(V_r) > s(V_{r+1})`, using `s(W) = 0`.
pub fn coma(problem: &AllocationProblem) -> AllocationResult {
    if problem.is_census() {
        return AllocationResult::census(problem, Algorithm::Coma);
    }
    let sorted = SortedStrata::new(problem);
    let k = sorted.len();
    let mut trace = Vec::new();
    let mut s = sorted.s(0);
    for j in 0..k {
        let s_next = sorted.s(j + 1);
        if s > s_next {
            trace.push(IterationRecord {
                r: j + 1,
                s_value: s,
                added: Vec::new(),
                s_next: Some(s_next),
            });
            return sorted.finish(problem, j, trace, Algorithm::Coma);
        }
        trace.push(IterationRecord {
            r: j + 1,
            s_value: s,
            added: vec![sorted.order[j]],
            s_next: Some(s_next),
        });
        s = s_next;
    }
    sorted.finish(problem, k, trace, Algorithm::Coma)
}

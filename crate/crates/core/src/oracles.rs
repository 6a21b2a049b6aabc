//! Independent correctness oracles.
//!
//! None of these share a search path with the recursive solvers:
//! [`brute_force_subset`] enumerates every take-all set, [`kkt_verify`]
//! checks first-order optimality of a given allocation, [`bisection_multiplier`]
//! solves for the equality multiplier directly, and [`greedy_integer_optimal`]
//! solves the integer-restricted problem by marginal gains.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{AllocError, Result};
use crate::model::{s_of, Algorithm, AllocationProblem, AllocationResult, TakeAllSet};

/// Largest `K` accepted by [`brute_force_subset`].
pub const BRUTE_FORCE_MAX_STRATA: usize = 20;

/// Exhaustive search for the take-all set satisfying the fixed-point condition
/// `V = {w : c_w·s(V) ≥ 1}`.
///
/// On exact ties several sets can qualify; the smallest by cardinality, then
/// lexicographically by input position, is returned.
pub fn brute_force_subset(problem: &AllocationProblem) -> Result<TakeAllSet> {
    let k = problem.len();
    if k > BRUTE_FORCE_MAX_STRATA {
        return Err(AllocError::Precondition(format!(
            "exhaustive search supports at most {BRUTE_FORCE_MAX_STRATA} strata, got {k}"
        )));
    }
    if problem.is_census() {
        return Ok(TakeAllSet::full(problem));
    }
    let strata = problem.strata();
    let full = (1u32 << k) - 1;
    let mut best: Option<(u32, Vec<usize>)> = None;
    for mask in 0..full {
        let mut bound_sum = 0.0;
        let mut a_sum = 0.0;
        for (i, st) in strata.iter().enumerate() {
            if mask & (1 << i) != 0 {
                bound_sum += st.b;
            } else {
                a_sum += st.a;
            }
        }
        let s = (problem.n() - bound_sum) / a_sum;
        if !(s > 0.0) {
            continue;
        }
        let fixed_point = strata
            .iter()
            .enumerate()
            .all(|(i, st)| (mask & (1 << i) != 0) == (st.c() * s >= 1.0));
        if fixed_point {
            let members: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
            let key = (mask.count_ones(), members);
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
    }
    best.map(|(_, members)| TakeAllSet::from_indices(members))
        .ok_or_else(|| AllocError::Internal("no take-all set satisfies the fixed-point condition".into()))
}

/// First-order optimality certificate for an allocation.
///
/// Multipliers: `μ = 1/s(V)²` for the equality constraint, `λ_w = c_w² − μ`
/// on the take-all set and `0` elsewhere. For `V = W` (census) `μ = min c_w²`.
///
/// Residuals are scale-free so that one tolerance serves problems whose
/// `c_w²` range over many orders of magnitude:
/// * stationarity: `max |−a²/x² + λ + μ| / (a²/x²)`
/// * primal feasibility: `max(|Σx − n| / n, max (x − b)⁺ / b)`
/// * complementary slackness: `max |λ (x − b)| / (c² b)`
/// * dual feasibility: `max (−λ)⁺ / c²`
#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    pub mu: f64,
    pub lambda: Vec<f64>,
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub complementary_slackness: f64,
    pub dual_feasibility: f64,
    pub tol: f64,
}

impl KktCertificate {
    pub fn is_valid(&self) -> bool {
        self.failing_conditions().is_empty()
    }

    /// Names of the conditions whose residual exceeds the tolerance.
    pub fn failing_conditions(&self) -> Vec<&'static str> {
        let mut failing = Vec::new();
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            failing.push("multiplier");
        }
        let checks = [
            ("stationarity", self.stationarity),
            ("primal feasibility", self.primal_feasibility),
            ("complementary slackness", self.complementary_slackness),
            ("dual feasibility", self.dual_feasibility),
        ];
        for (name, residual) in checks {
            // NaN residuals fail
            if !(residual <= self.tol) {
                failing.push(name);
            }
        }
        failing
    }
}

pub fn kkt_verify(problem: &AllocationProblem, result: &AllocationResult, tol: f64) -> KktCertificate {
    let k = problem.len();
    let strata = problem.strata();
    let v = &result.take_all;

    let mu = if v.len() == k && v.iter().all(|i| i < k) {
        strata.iter().map(|s| s.c() * s.c()).fold(f64::INFINITY, f64::min)
    } else {
        match s_of(problem, v) {
            Ok(s) if s > 0.0 => 1.0 / (s * s),
            _ => f64::NAN,
        }
    };

    let lambda: Vec<f64> = strata
        .iter()
        .enumerate()
        .map(|(i, st)| if v.contains(i) { st.c() * st.c() - mu } else { 0.0 })
        .collect();

    if result.x.len() != k {
        return KktCertificate {
            mu,
            lambda,
            stationarity: f64::INFINITY,
            primal_feasibility: f64::INFINITY,
            complementary_slackness: f64::INFINITY,
            dual_feasibility: f64::INFINITY,
            tol,
        };
    }

    let mut stationarity: f64 = 0.0;
    let mut bound_violation: f64 = 0.0;
    let mut slackness: f64 = 0.0;
    let mut dual: f64 = 0.0;
    for ((st, &x), &lam) in strata.iter().zip(&result.x).zip(&lambda) {
        let c2 = st.c() * st.c();
        let grad = if x > 0.0 { st.a * st.a / (x * x) } else { f64::NAN };
        stationarity = nan_max(stationarity, (-grad + lam + mu).abs() / grad);
        bound_violation = nan_max(bound_violation, ((x - st.b) / st.b).max(0.0));
        slackness = nan_max(slackness, (lam * (x - st.b)).abs() / (c2 * st.b));
        dual = nan_max(dual, (-lam / c2).max(0.0));
    }
    let sum_residual = ((result.x.iter().sum::<f64>() - problem.n()) / problem.n()).abs();

    KktCertificate {
        mu,
        lambda,
        stationarity,
        primal_feasibility: nan_max(sum_residual, bound_violation),
        complementary_slackness: slackness,
        dual_feasibility: dual,
        tol,
    }
}

/// `max` that propagates NaN, so an undefined residual fails validation.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Solves `Σ min(a_w/√μ, b_w) = n` for the multiplier `μ` by bisection on
/// `log μ`, and returns the induced allocation `x_w = min(a_w/√μ, b_w)`.
///
/// The unconstrained Neyman multiplier `(Σa/n)²` is tried first; if nothing
/// is capped there it is already the answer. Otherwise the root lies in
/// `[min c², (Σa/n)²]`, padded by ×0.5 and ×2. The search runs until the
/// bracket collapses (at most 200 halvings) and keeps the evaluated `μ` with
/// the smallest `|Σx − n|`, which must be within `tol·n`.
pub fn bisection_multiplier(problem: &AllocationProblem, tol: f64) -> Result<AllocationResult> {
    if !(tol > 0.0) {
        return Err(AllocError::Precondition(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if problem.is_census() {
        return Ok(AllocationResult::census(problem, Algorithm::Bisection));
    }
    let strata = problem.strata();
    let n = problem.n();
    let supply = |mu: f64| -> f64 {
        let scale = mu.sqrt().recip();
        strata.iter().map(|s| (s.a * scale).min(s.b)).sum()
    };

    let a_sum: f64 = strata.iter().map(|s| s.a).sum();
    let neyman = (a_sum / n).powi(2);
    let mut evaluations = 1;
    let mut best = (neyman, (supply(neyman) - n).abs());

    if best.1 > tol * n {
        let min_c2 = strata.iter().map(|s| s.c() * s.c()).fold(f64::INFINITY, f64::min);
        let mut lo = min_c2 * 0.5;
        let mut hi = neyman * 2.0;
        let (g_lo, g_hi) = (supply(lo), supply(hi));
        evaluations += 2;
        if !(g_lo >= n && g_hi <= n) {
            return Err(AllocError::Internal(format!(
                "multiplier bracket [{lo:e}, {hi:e}] does not contain the root (supply {g_lo} .. {g_hi}, n = {n})"
            )));
        }
        for _ in 0..200 {
            let mid = lo.sqrt() * hi.sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            let g = supply(mid);
            evaluations += 1;
            let err = (g - n).abs();
            if err < best.1 {
                best = (mid, err);
            }
            if g > n {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    let (mu, err) = best;
    if err > tol * n {
        return Err(AllocError::Internal(format!(
            "bisection reached |Σx − n| = {err:e}, above tolerance {:e}",
            tol * n
        )));
    }
    let s = mu.sqrt().recip();
    let x: Vec<f64> = strata.iter().map(|st| (st.a * s).min(st.b)).collect();
    let take_all = TakeAllSet::from_indices((0..strata.len()).filter(|&i| strata[i].a * s >= strata[i].b));
    Ok(AllocationResult {
        x,
        take_all,
        s_final: s,
        iterations: evaluations,
        trace: Vec::new(),
        algorithm: Algorithm::Bisection,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Gain(f64);

impl Eq for Gain {}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Integer-optimal allocation of Problem 1 restricted to `x_w ∈ {1, …, b_w}`.
///
/// Every stratum starts at one unit; each remaining unit goes to the stratum
/// with the largest objective decrease `a²/x − a²/(x+1)` among those below
/// their bound (ties to the earlier stratum). For a separable convex
/// objective this greedy is exact.
///
/// Requires integer `n` and `b_w`, and `n ≥ K`. The returned `s_final` is `0`
/// because integer allocations are not V-allocations; `iterations` counts the
/// units granted after seeding.
pub fn greedy_integer_optimal(problem: &AllocationProblem) -> Result<AllocationResult> {
    let n = problem.n();
    if n.fract() != 0.0 {
        return Err(AllocError::Precondition(format!(
            "integer allocation requires integer n, got {n}"
        )));
    }
    let strata = problem.strata();
    if let Some(st) = strata.iter().find(|s| s.b.fract() != 0.0) {
        return Err(AllocError::Precondition(format!(
            "integer allocation requires integer bounds, stratum `{}` has b = {}",
            st.label, st.b
        )));
    }
    let k = strata.len();
    let n = n as u64;
    if n < k as u64 {
        return Err(AllocError::Precondition(format!(
            "integer allocation requires n ≥ K (n = {n}, K = {k})"
        )));
    }

    let bounds: Vec<u64> = strata.iter().map(|s| s.b as u64).collect();
    let mut x = vec![1u64; k];
    let gain = |i: usize, xi: u64| {
        let a2 = strata[i].a * strata[i].a;
        let xf = xi as f64;
        Gain(a2 / (xf * (xf + 1.0)))
    };
    let mut heap: BinaryHeap<(Gain, Reverse<usize>)> = (0..k)
        .filter(|&i| x[i] < bounds[i])
        .map(|i| (gain(i, 1), Reverse(i)))
        .collect();

    let mut remaining = n - k as u64;
    let granted = remaining;
    while remaining > 0 {
        let (_, Reverse(i)) = heap
            .pop()
            .ok_or_else(|| AllocError::Internal("all strata at their bound before reaching n".into()))?;
        x[i] += 1;
        remaining -= 1;
        if x[i] < bounds[i] {
            heap.push((gain(i, x[i]), Reverse(i)));
        }
    }

    let take_all = TakeAllSet::from_indices((0..k).filter(|&i| x[i] == bounds[i]));
    Ok(AllocationResult {
        x: x.into_iter().map(|v| v as f64).collect(),
        take_all,
        s_final: 0.0,
        iterations: granted.max(1) as usize,
        trace: Vec::new(),
        algorithm: Algorithm::GreedyInteger,
    })
}

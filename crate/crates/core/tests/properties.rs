use proptest::prelude::*;
use stratalloc::oracles::{bisection_multiplier, brute_force_subset, greedy_integer_optimal, kkt_verify};
use stratalloc::rounding::round_allocation;
use stratalloc::{
    coma, is_optimal_takeall, objective, rna, s_of, sga, v_allocation, AllocationProblem, Stratum, TakeAllSet,
};

fn problem_strategy(max_k: usize) -> impl Strategy<Value = AllocationProblem> {
    (1..=max_k)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.1f64..10.0, k),
                prop::collection::vec(1.0f64..100.0, k),
                0.05f64..0.95,
            )
        })
        .prop_map(|(a, b, f)| {
            let n = f * b.iter().sum::<f64>();
            AllocationProblem::from_slices(&a, &b, n).unwrap()
        })
}

fn rel_close(x: &[f64], y: &[f64], tol: f64) -> bool {
    x.len() == y.len()
        && x.iter()
            .zip(y)
            .all(|(p, q)| (p - q).abs() <= tol * p.abs().max(q.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn solvers_agree_and_certify(p in problem_strategy(12)) {
        let base = rna(&p);
        prop_assert!(kkt_verify(&p, &base, 1e-8).is_valid());
        prop_assert!(is_optimal_takeall(&p, &base.take_all));
        for res in [sga(&p), coma(&p), bisection_multiplier(&p, 1e-12).unwrap()] {
            prop_assert!(rel_close(&base.x, &res.x, 1e-9), "{}", res.algorithm);
            prop_assert!(kkt_verify(&p, &res, 1e-8).is_valid(), "{}", res.algorithm);
        }
        prop_assert_eq!(&sga(&p).take_all, &base.take_all);
        prop_assert_eq!(&coma(&p).take_all, &base.take_all);
    }

    #[test]
    fn traces_are_nondecreasing(p in problem_strategy(12)) {
        for res in [rna(&p), sga(&p)] {
            prop_assert!(res.trace.windows(2).all(|w| w[0].s_value <= w[1].s_value));
            prop_assert!(res.iterations <= p.len() + 1);
        }
        // coma's last record is the one where s decreases
        let c = coma(&p);
        let n = c.trace.len();
        prop_assert!(c.trace[..n - 1].iter().all(|t| t.s_value <= t.s_next.unwrap()));
        // rNa's take-all set strictly grows in every non-final iteration
        let r = rna(&p);
        prop_assert!(r.trace[..r.trace.len() - 1].iter().all(|t| !t.added.is_empty()));
    }

    #[test]
    fn exactly_one_subset_is_a_fixed_point(p in problem_strategy(10)) {
        let k = p.len();
        let fixed: Vec<TakeAllSet> = (0u32..1 << k)
            .map(|mask| TakeAllSet::from_indices((0..k).filter(|&i| mask >> i & 1 == 1)))
            .filter(|v| is_optimal_takeall(&p, v))
            .collect();
        prop_assert_eq!(fixed.len(), 1);
        prop_assert_eq!(&fixed[0], &rna(&p).take_all);
        prop_assert_eq!(&brute_force_subset(&p).unwrap(), &fixed[0]);
    }

    #[test]
    fn permuting_strata_changes_nothing(p in problem_strategy(12), seed in any::<u64>()) {
        let mut strata = p.strata().to_vec();
        // deterministic Fisher-Yates from the seed
        let mut state = seed | 1;
        for i in (1..strata.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            strata.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let q = AllocationProblem::new(strata, p.n()).unwrap();
        for (orig, perm) in [(rna(&p), rna(&q)), (sga(&p), sga(&q)), (coma(&p), coma(&q))] {
            for label in p.labels() {
                let (x, y) = (orig.get(&p, label).unwrap(), perm.get(&q, label).unwrap());
                prop_assert!((x - y).abs() <= 1e-12 * x.max(y));
            }
            let mut l1 = orig.take_all.labels(&p);
            let mut l2 = perm.take_all.labels(&q);
            l1.sort();
            l2.sort();
            prop_assert_eq!(l1, l2);
        }
    }

    #[test]
    fn growing_the_take_all_set_equivalence(p in problem_strategy(12), pick in prop::collection::vec(0u8..3, 12)) {
        let k = p.len();
        // 0: neither, 1: A, 2: B; at least one stratum outside A ∪ B
        let pick = &pick[..k];
        prop_assume!(pick.contains(&0));
        let a_set = TakeAllSet::from_indices((0..k).filter(|&i| pick[i] == 1));
        let ab_set = TakeAllSet::from_indices((0..k).filter(|&i| pick[i] != 0));
        let s_a = s_of(&p, &a_set).unwrap();
        let s_ab = s_of(&p, &ab_set).unwrap();
        let (b_a, b_b): (f64, f64) = (0..k)
            .filter(|&i| pick[i] == 2)
            .map(|i| (p.strata()[i].a, p.strata()[i].b))
            .fold((0.0, 0.0), |(x, y), (a, b)| (x + a, y + b));
        prop_assert_eq!(s_ab >= s_a, s_a * b_a >= b_b);
    }

    #[test]
    fn rounding_preserves_sum_and_bounds(
        parts in prop::collection::vec((1u64..60, 0.01f64..1.0), 1..15),
        f in 0.2f64..0.9,
    ) {
        let bounds: Vec<u64> = parts.iter().map(|p| p.0).collect();
        let a: Vec<f64> = parts.iter().map(|p| p.1 * p.0 as f64).collect();
        let total: u64 = bounds.iter().sum();
        let n = ((f * total as f64).round() as u64).max(bounds.len() as u64).min(total);
        let b: Vec<f64> = bounds.iter().map(|&v| v as f64).collect();
        let p = AllocationProblem::from_slices(&a, &b, n as f64).unwrap();
        let x = rna(&p).x;
        let r = round_allocation(&x, n, &bounds).unwrap();
        prop_assert_eq!(r.iter().sum::<u64>(), n);
        prop_assert!(r.iter().zip(&bounds).all(|(&v, &bw)| v >= 1 && v <= bw));
        if x.iter().all(|&v| v >= 1.0) {
            prop_assert!(r.iter().zip(&x).all(|(&v, &xw)| (v as f64 - xw).abs() < 1.0));
        }
    }
}

#[test]
fn grid_search_never_beats_the_solver() {
    let cases: [(&[f64], &[f64], f64); 4] = [
        (&[1.0, 9.0], &[50.0, 5.0], 20.0),
        (&[3.0, 3.0], &[10.0, 10.0], 7.0),
        (&[2.0, 8.0, 0.5], &[30.0, 6.0, 40.0], 25.0),
        (&[5.0, 1.0, 4.0], &[3.0, 40.0, 2.0], 12.0),
    ];
    for (a, b, n) in cases {
        let p = AllocationProblem::from_slices(a, b, n).unwrap();
        let best = objective(&p, &rna(&p).x).unwrap();
        let steps = 400;
        let mut checked = 0;
        let mut visit = |x: &[f64]| {
            if x.iter().zip(b).all(|(&v, &bw)| v > 0.0 && v <= bw) {
                checked += 1;
                assert!(objective(&p, x).unwrap() >= best * (1.0 - 1e-12), "{x:?}");
            }
        };
        if a.len() == 2 {
            for i in 1..steps {
                let x0 = b[0] * i as f64 / steps as f64;
                visit(&[x0, n - x0]);
            }
        } else {
            for i in 1..steps {
                for j in 1..steps {
                    let (x0, x1) = (b[0] * i as f64 / steps as f64, b[1] * j as f64 / steps as f64);
                    visit(&[x0, x1, n - x0 - x1]);
                }
            }
        }
        assert!(checked > 0);
    }
}

#[test]
fn brute_force_v_allocation_matches() {
    let p = stratalloc::popgen::table1_problem();
    let v = brute_force_subset(&p).unwrap();
    let x = v_allocation(&p, &v).unwrap().x;
    assert!(rel_close(&x, &rna(&p).x, 1e-12));
}

#[test]
fn greedy_is_never_worse_than_a_rounded_optimum() {
    let p = AllocationProblem::new(
        (1..=6)
            .map(|i| Stratum::new(i.to_string(), (i * i) as f64, (3 * i) as f64).unwrap())
            .collect(),
        30.0,
    )
    .unwrap();
    let g = greedy_integer_optimal(&p).unwrap();
    let bounds: Vec<u64> = p.bounds().iter().map(|&b| b as u64).collect();
    let r: Vec<f64> = round_allocation(&rna(&p).x, 30, &bounds)
        .unwrap()
        .into_iter()
        .map(|v| v as f64)
        .collect();
    assert!(objective(&p, &g.x).unwrap() <= objective(&p, &r).unwrap());
    assert!(objective(&p, &rna(&p).x).unwrap() <= objective(&p, &g.x).unwrap());
}

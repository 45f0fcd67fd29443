use kdsat_core::formula::{stats, tree_to_cnf};
use kdsat_core::recursion::{derive_params, run, run_status, verify_closed_form};
use kdsat_core::satcheck::{brute_force_sat, dpll_sat, moser_tardos, random_bounded_cnf, random_cnf};
use kdsat_core::search::{constructible_fixpoint, min_tree_plan, min_tree_size, MinTreeSize};
use kdsat_core::tree_builder::{
    apply_double, apply_splice, kraft_tree, prune_to_minimal, validate_kd_tree, validate_kdx_tree, PlanBuilder,
};
use kdsat_core::{KdVector, OpParams, ScaledWeight};
use num_bigint::BigUint;
use proptest::prelude::*;

/// A (k,d)-vector: entries drawn in order, each capped by what is left of `d`.
fn kd_vector(k_max: usize, d_max: u64) -> impl Strategy<Value = KdVector> {
    (1..=k_max, 1..=d_max).prop_flat_map(|(k, d)| {
        prop::collection::vec(0..=d, k + 1).prop_map(move |raw| {
            let mut left = d;
            let e: Vec<u64> = raw
                .iter()
                .map(|&r| {
                    let take = r.min(left);
                    left -= take;
                    take
                })
                .collect();
            KdVector::from_u64s(k, d, &e).unwrap()
        })
    })
}

/// A vector with k >= 4 and operator parameters for it.
fn with_ops() -> impl Strategy<Value = (KdVector, OpParams)> {
    (4..=9usize, 8..=200u64).prop_flat_map(|(k, d)| {
        let ls = 2..=k.min(4);
        (prop::collection::vec(0..=d, k + 1), ls, 1..=k).prop_map(move |(raw, l, s)| {
            let mut left = d;
            let e: Vec<u64> = raw
                .iter()
                .map(|&r| {
                    let take = r.min(left);
                    left -= take;
                    take
                })
                .collect();
            let x = KdVector::from_u64s(k, d, &e).unwrap();
            (x, OpParams::new(k, BigUint::from(d), l, s).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn weight_is_at_most_d_with_equality_only_at_the_root(x in kd_vector(10, 64)) {
        let k = x.k();
        let cap = x.d() << k;
        let w = x.weight_scaled().0;
        prop_assert!(w <= cap);
        let all_at_root = *x.entry(0) == *x.d();
        prop_assert_eq!(w == cap, all_at_root);
    }

    #[test]
    fn trim_is_dominated_idempotent_and_exact(x in kd_vector(10, 64)) {
        let k = x.k();
        match x.trim_to_weight_one() {
            Ok(y) => {
                prop_assert!(x.weight_scaled().is_at_least_one(k));
                prop_assert!(y.is_dominated_by(&x));
                prop_assert!(y.weight_scaled().is_exactly_one(k));
                prop_assert_eq!(y.trim_to_weight_one().unwrap(), y);
            }
            Err(_) => prop_assert!(!x.weight_scaled().is_at_least_one(k)),
        }
    }

    #[test]
    fn kraft_tree_exists_iff_weight_at_least_one(x in kd_vector(10, 64)) {
        let k = x.k();
        let d = u64::try_from(x.d()).unwrap();
        match x.trim_to_weight_one().and_then(|y| kraft_tree(&y)) {
            Ok(t) => {
                prop_assert!(x.weight_scaled().is_at_least_one(k));
                prop_assert!(validate_kdx_tree(&t, k, d, &x).is_ok());
                prop_assert!(t.depth() <= k);
                prop_assert!(t.kraft_sum_is_one());
            }
            Err(_) => prop_assert!(!x.weight_scaled().is_at_least_one(k)),
        }
    }

    #[test]
    fn operators_give_vectors((x, op) in with_ops()) {
        let e = op.op_e(&x);
        prop_assert!(e.is_valid());
        // |E(x)| <= |x|/2 + d'/2 < d
        prop_assert!(&e.sum() * 2u32 <= x.sum() + op.d_prime_shifted(0));
        for r in op.l()..=op.k() {
            prop_assert!(op.op_c(&x, r).unwrap().is_valid());
            let star = op.op_c_star(&x, r).unwrap();
            prop_assert!(star.is_valid());
            prop_assert!(star.sum() <= x.sum());
        }
        prop_assert!(op.op_c(&x, op.l() - 1).is_err());
        prop_assert!(op.op_c(&x, op.k() + 1).is_err());
    }

    #[test]
    fn doubling_builds_a_tree_for_x((x, op) in with_ops()) {
        let (k, d) = (op.k(), u64::try_from(op.d()).unwrap());
        let ex = op.op_e(&x);
        if let Ok(y) = ex.trim_to_weight_one() {
            let t = kraft_tree(&y).unwrap();
            prop_assert!(validate_kdx_tree(&t, k, d, &ex).is_ok());
            prop_assert!(validate_kdx_tree(&apply_double(&t), k, d, &x).is_ok());
        }
    }

    #[test]
    fn splice_builds_a_tree_for_x((x, op) in with_ops(), pick in 0usize..8) {
        let (k, d, l) = (op.k(), u64::try_from(op.d()).unwrap(), op.l());
        let r = l + pick % (k + 1 - l);
        let c = op.op_c(&x, r).unwrap();
        let star = op.op_c_star(&x, r).unwrap();
        if let (Ok(cy), Ok(sy)) = (c.trim_to_weight_one(), star.trim_to_weight_one()) {
            let tree = apply_splice(l, &kraft_tree(&cy).unwrap(), &kraft_tree(&sy).unwrap());
            let tree_ok = validate_kdx_tree(&tree, k, d, &x).is_ok();
            // the plan-level check must agree with the explicit tree
            let mut b = PlanBuilder::new(k, op.d().clone());
            let main = b.kraft_leaf(cy).unwrap();
            let st = b.kraft_leaf(sy).unwrap();
            let root = b.splice(l, main, st, r);
            let plan = b.finish(root);
            prop_assert_eq!(plan.validate(Some(&x)).is_ok(), tree_ok);
            prop_assert_eq!(plan.leaf_count(), &BigUint::from(tree.num_leaves()));
            prop_assert_eq!(plan.depth(), tree.depth() as u64);
            // a small enough star always works
            if (star.sum() << l) < BigUint::from(d) {
                prop_assert!(tree_ok);
            }
        }
    }

    #[test]
    fn dpll_agrees_with_brute_force(k in 1..=4usize, n in 4..=12usize, ratio in 1..=7usize, seed: u64) {
        let f = random_cnf(k, n, ratio * n, seed);
        let fast = dpll_sat(&f, u64::MAX).unwrap();
        prop_assert_eq!(fast.is_sat(), brute_force_sat(&f).is_some());
    }

    #[test]
    fn resampling_is_deterministic(seed in 0u64..1000) {
        let f = random_bounded_cnf(5, 6, 60, 70, seed);
        prop_assert_eq!(moser_tardos(&f, seed, 100_000), moser_tardos(&f, seed, 100_000));
    }
}

fn capped(d: u64, raw: &[u64]) -> Vec<u64> {
    let mut left = d;
    raw.iter()
        .map(|&r| {
            let take = r.min(left);
            left -= take;
            take
        })
        .collect()
}

/// Random small plans over Kraft leaves at a tight `d`, with a random cap.
fn small_plan() -> impl Strategy<Value = (usize, u64, Vec<Vec<u64>>, Vec<u8>, Vec<u64>)> {
    (2..=5usize, 2..=12u64).prop_flat_map(|(k, d)| {
        (
            Just(k),
            Just(d),
            prop::collection::vec(prop::collection::vec(0..=d, k + 1), 2),
            prop::collection::vec(0u8..12, 1..4),
            prop::collection::vec(0..=d, k + 1),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn plan_checks_agree_with_explicit_trees((k, d, leaves, ops, cap) in small_plan()) {
        let mut b = PlanBuilder::new(k, BigUint::from(d));
        let mut ids = Vec::new();
        for raw in &leaves {
            let x = KdVector::from_u64s(k, d, &capped(d, raw)).unwrap();
            let y = x.trim_to_weight_one();
            prop_assume!(y.is_ok());
            ids.push(b.kraft_leaf(y.unwrap()).unwrap());
        }
        let (mut cur, other) = (ids[0], ids[1]);
        for op in ops {
            cur = match op % 4 {
                0 => b.double(cur),
                1 => b.join(cur, other),
                2 => b.join(other, cur),
                _ => b.splice(1 + (op as usize / 4) % 3, cur, other, k),
            };
        }
        let plan = b.finish(cur);
        let x = KdVector::from_u64s(k, d, &capped(d, &cap)).unwrap();
        let tree = plan.materialize(&BigUint::from(1u32 << 22)).unwrap();
        prop_assert_eq!(plan.leaf_count(), &BigUint::from(tree.num_leaves()));
        prop_assert_eq!(plan.depth(), tree.depth() as u64);
        prop_assert_eq!(plan.validate(Some(&x)).is_ok(), validate_kdx_tree(&tree, k, d, &x).is_ok());
        let as_kd = validate_kd_tree(&tree, k, d).is_ok();
        prop_assert_eq!(plan.validate(None).is_ok(), as_kd);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recursion_trace_invariants(k in 16..=40usize, scale in 60u32..=140) {
        let base = derive_params(k, None).unwrap();
        let d = base.d() * scale / 100u32;
        prop_assume!(d > BigUint::from(0u32));
        let p = base.with_d(d).unwrap();
        let t = run(&p, 400);
        prop_assert_eq!(run_status(&p, 400), t.status);
        prop_assert!(verify_closed_form(&t).ok());
        let s = p.s();
        for st in &t.steps {
            prop_assert!(st.x.entries()[..=s].iter().all(|e| *e == BigUint::from(0u32)));
        }
        for w in t.steps.windows(2) {
            prop_assert!(w[0].x.is_dominated_by(&w[1].x));
            prop_assert!(w[0].x.weight_scaled().0 <= w[1].x.weight_scaled().0);
        }
        let qs = t.qs();
        prop_assert!(qs.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(run(&p, 400), t);
    }

    #[test]
    fn smallest_tree_formulas_are_tight(k in 2..=4usize, extra in 0u64..4) {
        let d = [0u64, 1, 2, 4, 6][k] + 1 + extra;
        let plan = min_tree_plan(k, d, u64::MAX).unwrap().unwrap();
        prop_assert!(plan.validate(None).is_ok());
        let t = plan.materialize(&BigUint::from(1u32 << 20)).unwrap();
        prop_assert_eq!(plan.leaf_count(), &BigUint::from(t.num_leaves()));
        prop_assert_eq!(plan.depth(), t.depth() as u64);
        prop_assert!(validate_kd_tree(&t, k, d).is_ok());
        let f = tree_to_cnf(&prune_to_minimal(&t, k, d).unwrap(), k).unwrap();
        prop_assert_eq!(f.n_clauses(), f.n_vars() + 1);
        let st = stats(&f);
        prop_assert!(st.max_var_occurrences as u64 <= d);
        prop_assert!(st.max_neighborhood <= k * (st.max_var_occurrences - 1));
        prop_assert!(!dpll_sat(&f, u64::MAX).unwrap().is_sat());
        for i in 0..f.n_clauses() {
            prop_assert!(dpll_sat(&f.without_clause(i), u64::MAX).unwrap().is_sat());
        }
    }
}

#[test]
fn smallest_size_is_nonincreasing_in_d() {
    for k in 2..=6usize {
        let mut prev: Option<BigUint> = None;
        for d in 1..=24u64 {
            if let MinTreeSize::Exact { size, .. } = min_tree_size(k, d, u64::MAX).unwrap() {
                if let Some(p) = &prev {
                    assert!(size <= *p, "k={k} d={d}: {size} > {p}");
                }
                prev = Some(size);
            } else {
                assert!(prev.is_none(), "k={k} d={d}: tree vanished as d grew");
            }
        }
        assert!(prev.is_some(), "k={k}: no tree up to d=24");
    }
}

#[test]
fn antichain_witnesses_validate() {
    for (k, d) in [(3usize, 4u64), (4, 6), (4, 9), (5, 8)] {
        let chain = constructible_fixpoint(k, d, u64::MAX).unwrap();
        assert!(chain.is_complete());
        assert!(chain.kd_tree_exists());
        for (i, x) in chain.elements().iter().enumerate() {
            let plan = chain.witness_plan(i).unwrap();
            assert!(plan.validate(Some(x)).is_ok(), "k={k} d={d}: witness {i} for {x}");
        }
    }
}

#[test]
fn scaled_weight_of_one() {
    for k in 0..12 {
        assert!(ScaledWeight::one(k).is_exactly_one(k));
    }
}

//! Fast search and closed forms checked against slow references and values
//! computed independently at high precision.

use kdsat_core::bounds::{bks_f, construction_d, floor_div_e, floor_div_e_rational, kst_f, lll_l};
use kdsat_core::formula::{to_dimacs_string, tree_to_cnf};
use kdsat_core::recursion::{derive_params, run};
use kdsat_core::search::{
    brute_force_trees, constructible_fixpoint, f2, kd_tree_exists, min_tree_plan, min_tree_size, MinTreeSize, F2,
};
use kdsat_core::tree_builder::{plan_from_trace, prune_to_minimal};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use sha2::{Digest, Sha256};

fn big(s: &str) -> BigUint {
    s.parse().unwrap()
}

#[test]
fn min_tree_size_matches_brute_force() {
    for k in 1..=4usize {
        for d in 1..=8u64 {
            let oracle = brute_force_trees(k, d, 1 << 20).unwrap();
            match min_tree_size(k, d, u64::MAX).unwrap() {
                MinTreeSize::Exact { size, .. } => {
                    assert_eq!(Some(size), oracle.min_size.map(BigUint::from), "({k},{d})")
                }
                MinTreeSize::NoTree { .. } => assert!(!oracle.exists, "({k},{d})"),
                other => panic!("({k},{d}): {other:?}"),
            }
        }
    }
}

#[test]
fn existence_matches_brute_force() {
    for k in 1..=3usize {
        for d in 1..=6u64 {
            let oracle = brute_force_trees(k, d, 1 << 20).unwrap().exists;
            assert_eq!(kd_tree_exists(k, d, u64::MAX).unwrap().exists, oracle, "({k},{d})");
            assert_eq!(
                constructible_fixpoint(k, d, u64::MAX).unwrap().kd_tree_exists(),
                oracle,
                "({k},{d})"
            );
        }
    }
}

#[test]
fn extremal_values() {
    let exact = |k| match f2(k, 255, u64::MAX).unwrap() {
        F2::Exact { value, .. } => value,
        other => panic!("f2({k}): {other:?}"),
    };
    assert_eq!([exact(3), exact(5), exact(6), exact(7)], [3, 7, 11, 17]);
    match min_tree_size(7, 18, u64::MAX).unwrap() {
        MinTreeSize::Exact { size, .. } => assert_eq!(size, big("10262519933858")),
        other => panic!("{other:?}"),
    }
}

/// `e` enclosed by a partial sum of `1/i!` and its tail bound `2/(n+1)!`.
fn e_interval(n: u32) -> (BigRational, BigRational) {
    let mut sum = BigRational::from_integer(BigInt::from(0));
    let mut fact = BigInt::one();
    for i in 0..=n {
        if i > 0 {
            fact *= i;
        }
        sum += BigRational::new(BigInt::one(), fact.clone());
    }
    let tail = BigRational::new(BigInt::from(2), fact * (n + 1));
    (sum.clone(), sum + tail)
}

#[test]
fn floor_div_e_against_series() {
    let (lo, hi) = e_interval(120);
    for n in [1u64, 2, 3, 1000, 123_456_789, u64::MAX] {
        let q = floor_div_e(&BigUint::from(n));
        let qn = BigRational::from_integer(BigInt::from(q));
        let nn = BigRational::from_integer(BigInt::from(n));
        // q <= n/e < q + 1
        assert!(&qn * &hi <= nn, "n={n}");
        assert!(nn < (qn + BigRational::one()) * &lo, "n={n}");
    }
    assert_eq!(
        floor_div_e(&(BigUint::from(10u32).pow(50))),
        big("36787944117144232159552377016146086744581113103176")
    );
    let third = BigRational::new(BigInt::from(1000), BigInt::from(3));
    assert_eq!(floor_div_e_rational(&third), BigUint::from(122u32));
}

#[test]
fn threshold_values() {
    assert_eq!(lll_l(5).unwrap(), BigUint::from(10u32));
    assert_eq!(lll_l(10).unwrap(), BigUint::from(375u32));
    assert_eq!(lll_l(64).unwrap(), big("6786177901268885273"));
    assert_eq!(kst_f(10).unwrap(), BigUint::from(37u32));
    assert_eq!(kst_f(20).unwrap(), BigUint::from(19287u32));
    assert_eq!(kst_f(64).unwrap(), big("106034029707326332"));
    assert_eq!(bks_f(10).unwrap(), BigUint::from(74u32));
    assert_eq!(bks_f(20).unwrap(), BigUint::from(38573u32));
    assert_eq!(bks_f(64).unwrap(), big("212068059414652663"));
    assert_eq!(construction_d(16).unwrap(), BigUint::from(207_813u32));
    assert_eq!(construction_d(17).unwrap(), BigUint::from(379_668u32));
    assert_eq!(construction_d(32).unwrap(), BigUint::from(4_844_065_166u64));
    assert_eq!(construction_d(64).unwrap(), big("7417827463207446264"));
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[test]
fn frozen_outputs() {
    let plan = min_tree_plan(3, 4, u64::MAX).unwrap().unwrap();
    let t = prune_to_minimal(&plan.materialize(&BigUint::from(1000u32)).unwrap(), 3, 4).unwrap();
    let dimacs = to_dimacs_string(&tree_to_cnf(&t, 3).unwrap(), &[]);
    assert_eq!(
        sha256_hex(&dimacs),
        "07e668c44f71080615444c08ddc3f157827a7ea14bea90352345d0a97c8a9f26"
    );

    let p = derive_params(16, None).unwrap();
    let plan = plan_from_trace(&run(&p, 100)).unwrap();
    assert_eq!(plan.leaf_count(), &BigUint::from(131_072u32));
    assert_eq!(
        plan.sha256_hex(),
        "875a76c4b0747ce79fe25160710ca1ce18fe45e1b2b9cb88585d13cba4b0b367"
    );
}

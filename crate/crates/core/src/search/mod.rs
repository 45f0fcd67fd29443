//! Exact existence and minimal size of (k,d)-trees.
//!
//! A tree is summarized by its root profile `p in N^(k+1)`: `p_j` leaves at
//! distance `j`. A single leaf has profile `(1,0,...,0)`. Joining two trees
//! under a new root gives profile `(0, u_0+v_0, ..., u_{k-1}+v_{k-1})`; the
//! children's distance-`k` leaves drop out of the new root's window, and the
//! new root obeys the occurrence cap iff the sum is at most `d`. A vector `x`
//! is constructible iff it dominates the profile of some valid tree, so the
//! dominance-minimal profiles form an antichain that decides everything.
//!
//! Internally only the first `k` entries of a child profile matter when
//! joining, and a non-leaf tree is characterized by the `k-1` entries
//! `1..k` of its truncated profile. The engine saturates those `(k-1)`-dim
//! truncations in a dense up-closed bitmap; see [`Engine`].

mod brute;
mod cache;
mod lattice;

pub use brute::{brute_force_trees, BruteForce};
pub use cache::{CacheRecord, ResultCache, CACHE_VERSION};

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kd_vectors::KdVector;
use crate::tree_builder::{BuildPlan, PlanBuilder, PlanNodeId};
use lattice::{lattice_size, Lattice};

/// Largest `k` the dense search supports.
pub const MAX_SEARCH_K: usize = 15;
/// Largest `d` the dense search supports.
pub const MAX_SEARCH_D: u64 = 255;
/// Largest number of lattice points the dense search will allocate.
pub const MAX_LATTICE: u128 = 1 << 28;

/// Default budget, in combination-rule applications.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

const W: usize = MAX_SEARCH_K + 1;
type Alloc = [u8; W];

#[derive(Clone, Copy, Debug)]
struct Element {
    /// Truncated profile (entries `0..k`) the element guarantees not to exceed.
    alloc: Alloc,
    weight: u8,
    value: u128,
    parents: Option<(u32, u32)>,
}

/// Dominance-minimal set of constructible profiles for fixed `(k, d)`.
#[derive(Clone, Debug)]
pub struct Antichain {
    k: usize,
    d: u64,
    elements: Vec<KdVector>,
    /// Per element: the pair of internal elements whose join witnesses it.
    witness: Vec<Option<(u32, u32)>>,
    internal: Vec<Element>,
    combinations: u64,
    complete: bool,
}

impl Antichain {
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn d(&self) -> u64 {
        self.d
    }
    pub fn elements(&self) -> &[KdVector] {
        &self.elements
    }
    pub fn len(&self) -> usize {
        self.elements.len()
    }
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
    /// Combination-rule applications spent.
    pub fn combinations(&self) -> u64 {
        self.combinations
    }
    /// False when the budget ran out: every element is still constructible,
    /// but some constructible vectors may not be covered yet.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// True iff `x` dominates some element.
    pub fn is_constructible(&self, x: &KdVector) -> bool {
        x.k() == self.k && self.elements.iter().any(|e| e.is_dominated_by(x))
    }

    /// Whether a (k,d)-tree exists, i.e. `(0,...,0,d)` is constructible.
    pub fn kd_tree_exists(&self) -> bool {
        let mut top = vec![0u64; self.k + 1];
        top[self.k] = self.d;
        let x = KdVector::from_u64s(self.k, self.d, &top).expect("valid top vector");
        self.is_constructible(&x)
    }

    /// A plan for a tree whose root profile is dominated by element `index`.
    pub fn witness_plan(&self, index: usize) -> Option<BuildPlan> {
        let mut builder = PlanBuilder::new(self.k, BigUint::from(self.d));
        let root = match self.witness.get(index)? {
            None => builder.kraft_leaf(unit_leaf(self.k, self.d)).ok()?,
            Some((a, b)) => {
                let mut memo = vec![None; self.internal.len()];
                let l = plan_for(&self.internal, *a as usize, &mut builder, &mut memo, self.k, self.d);
                let r = plan_for(&self.internal, *b as usize, &mut builder, &mut memo, self.k, self.d);
                builder.join(l, r)
            }
        };
        Some(builder.finish(root))
    }
}

fn unit_leaf(k: usize, d: u64) -> KdVector {
    let mut e = vec![0u64; k + 1];
    e[0] = 1;
    KdVector::from_u64s(k, d, &e).expect("leaf profile")
}

/// Smallest size and the pair of elements whose join achieves it.
type Minimum = (u128, (u32, u32));

fn plan_for(
    elems: &[Element],
    idx: usize,
    builder: &mut PlanBuilder,
    memo: &mut [Option<PlanNodeId>],
    k: usize,
    d: u64,
) -> PlanNodeId {
    // explicit stack: witness chains can be long
    let mut stack = vec![(idx, false)];
    while let Some((i, expanded)) = stack.pop() {
        if memo[i].is_some() {
            continue;
        }
        match elems[i].parents {
            None => {
                memo[i] = Some(builder.kraft_leaf(unit_leaf(k, d)).expect("leaf"));
            }
            Some((a, b)) => {
                let (a, b) = (a as usize, b as usize);
                if expanded {
                    let id = builder.join(memo[a].unwrap(), memo[b].unwrap());
                    memo[i] = Some(id);
                } else {
                    stack.push((i, true));
                    stack.push((a, false));
                    stack.push((b, false));
                }
            }
        }
    }
    memo[idx].unwrap()
}

/// Errors from the fixpoint computation.
#[derive(Debug, Clone)]
pub enum FixpointError {
    /// The budget ran out; the partial antichain has lower-bound semantics.
    BudgetExhausted {
        partial: Box<Antichain>,
    },
    Invalid(Error),
}

impl std::fmt::Display for FixpointError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FixpointError::BudgetExhausted { partial } => {
                write!(f, "budget exhausted after {} combinations", partial.combinations)
            }
            FixpointError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for FixpointError {}

fn validate_kd(k: usize, d: u64) -> Result<()> {
    if k == 0 || k > MAX_SEARCH_K {
        return Err(Error::InvalidParams(format!(
            "search supports 1 <= k <= {MAX_SEARCH_K}, got {k}"
        )));
    }
    if d == 0 || d > MAX_SEARCH_D {
        return Err(Error::InvalidParams(format!(
            "search supports 1 <= d <= {MAX_SEARCH_D}, got {d}"
        )));
    }
    if lattice_size(k, d as usize) > MAX_LATTICE {
        return Err(Error::InvalidParams(format!(
            "lattice for k = {k}, d = {d} is too large"
        )));
    }
    Ok(())
}

/// The saturation engine shared by existence and minimal-size searches.
///
/// Elements are "allowances" `b in N^k`: a tree is admissible for `b` when its
/// truncated profile is at most `b`. The leaf has allowance `(1,0,...,0)`;
/// every non-leaf allowance is `(0,u)` with `u in N^(k-1)`. Joining `b` and
/// `c` with `|b|+|c| <= d` yields the non-leaf class `u = (b+c)[0..k-1]`.
struct Engine {
    k: usize,
    d: usize,
    lat: Lattice,
    marks: Vec<bool>,
    elements: Vec<Element>,
    /// element ids grouped by weight `|b|`
    buckets: Vec<Vec<u32>>,
    combinations: u64,
    budget: u64,
    stack: Vec<Vec<u8>>,
}

enum Stop {
    Done,
    Target,
    Budget,
}

impl Engine {
    fn new(k: usize, d: u64, budget: u64) -> Self {
        let lat = Lattice::new(k - 1, d as usize);
        let marks = vec![false; lat.len()];
        Engine {
            k,
            d: d as usize,
            lat,
            marks,
            elements: Vec::new(),
            buckets: vec![Vec::new(); d as usize + 1],
            combinations: 0,
            budget,
            stack: Vec::new(),
        }
    }

    fn leaf(&self) -> Element {
        let mut alloc = [0u8; W];
        alloc[0] = 1;
        Element {
            alloc,
            weight: 1,
            value: 1,
            parents: None,
        }
    }

    fn push_element(&mut self, e: Element) -> u32 {
        let id = self.elements.len() as u32;
        self.buckets[e.weight as usize].push(id);
        self.elements.push(e);
        id
    }

    fn non_leaf(&self, u: &[u8], value: u128, parents: (u32, u32)) -> Element {
        let mut alloc = [0u8; W];
        alloc[1..self.k].copy_from_slice(u);
        Element {
            alloc,
            weight: u.iter().sum(),
            value,
            parents: Some(parents),
        }
    }

    /// `true` iff some `u - e_i` is marked, i.e. the element is no longer minimal.
    fn is_stale(&self, e: &Element) -> bool {
        if e.parents.is_none() {
            return false;
        }
        let mut u: Vec<u8> = e.alloc[1..self.k].to_vec();
        for i in 0..u.len() {
            if u[i] > 0 {
                u[i] -= 1;
                let hit = self.marks[self.lat.rank(&u)];
                u[i] += 1;
                if hit {
                    return true;
                }
            }
        }
        false
    }

    #[inline]
    fn sum_of(&self, a: &Element, b: &Element) -> Alloc {
        let mut s = [0u8; W];
        for (i, x) in s.iter_mut().enumerate().take(self.k) {
            *x = a.alloc[i] + b.alloc[i];
        }
        s
    }

    /// Breadth-first saturation in rounds. Optionally records every pair sum
    /// `s` (k entries) into `sums` with its first witness pair.
    fn saturate(&mut self, stop_at_target: bool, mut sums: Option<&mut SumTable>) -> Stop {
        let leaf = self.leaf();
        let mut frontier = vec![self.push_element(leaf)];
        let target_rank = 0usize; // u = 0
        loop {
            // drop elements that are no longer minimal
            let alive: Vec<bool> = self.elements.iter().map(|e| !self.is_stale(e)).collect();
            let mut cands: Vec<(Vec<u8>, (u32, u32))> = Vec::new();
            for &n in &frontier {
                if !alive[n as usize] {
                    continue;
                }
                let ne = self.elements[n as usize];
                let room = self.d - ne.weight as usize;
                for w in 0..=room.min(self.d) {
                    for &c in &self.buckets[w] {
                        // each unordered pair once: partner is old, or new with id <= n
                        if c > n && frontier.binary_search(&c).is_ok() {
                            continue;
                        }
                        if !alive[c as usize] {
                            continue;
                        }
                        if self.combinations >= self.budget {
                            return Stop::Budget;
                        }
                        self.combinations += 1;
                        let ce = &self.elements[c as usize];
                        let s = self.sum_of(&ne, ce);
                        if let Some(t) = sums.as_deref_mut() {
                            t.record(&s[..self.k], (n, c));
                        }
                        let u = &s[..self.k - 1];
                        if !self.marks[self.lat.rank(u)] {
                            cands.push((u.to_vec(), (n, c)));
                        }
                    }
                }
            }
            if cands.is_empty() {
                return Stop::Done;
            }
            // smaller sums first so they can cover later candidates
            cands.sort_by(|a, b| {
                let sa: u32 = a.0.iter().map(|&x| x as u32).sum();
                let sb: u32 = b.0.iter().map(|&x| x as u32).sum();
                sa.cmp(&sb).then_with(|| a.0.cmp(&b.0))
            });
            let mut next = Vec::new();
            for (u, parents) in cands {
                if self.lat.mark_up_closure(&u, &mut self.marks, &mut self.stack) > 0 {
                    let e = self.non_leaf(&u, 0, parents);
                    next.push(self.push_element(e));
                }
            }
            if stop_at_target && self.marks[target_rank] {
                return Stop::Target;
            }
            frontier = next;
        }
    }

    /// Knuth's generalization of Dijkstra: classes are finalized in order of
    /// their minimal tree size. Returns the size for `u = 0` and its witness
    /// pair, if reached; on failure, the last finalized size.
    fn minimize(&mut self) -> std::result::Result<Option<Minimum>, (u128, Error)> {
        let n = self.lat.len();
        let mut best = vec![u128::MAX; n];
        let mut best_parents = vec![(0u32, 0u32); n];
        let mut vecs: Vec<Alloc> = vec![[0u8; W]; n];
        let mut heap: BinaryHeap<Reverse<(u128, u32)>> = BinaryHeap::new();
        let mut last = 1u128;

        let leaf = self.leaf();
        let mut newest = self.push_element(leaf);
        loop {
            let ne = self.elements[newest as usize];
            let room = self.d - ne.weight as usize;
            for w in 0..=room {
                for idx in 0..self.buckets[w].len() {
                    let c = self.buckets[w][idx];
                    if self.combinations >= self.budget {
                        return Err((
                            last,
                            Error::BudgetExhausted {
                                used: self.combinations,
                            },
                        ));
                    }
                    self.combinations += 1;
                    let ce = &self.elements[c as usize];
                    let s = self.sum_of(&ne, ce);
                    let u = &s[..self.k - 1];
                    let r = self.lat.rank(u);
                    if self.marks[r] {
                        continue;
                    }
                    let v = ne
                        .value
                        .checked_add(ce.value)
                        .ok_or((last, Error::InvalidParams("tree size overflows 128 bits".into())))?;
                    if v < best[r] {
                        best[r] = v;
                        best_parents[r] = (newest, c);
                        vecs[r] = s;
                        heap.push(Reverse((v, r as u32)));
                    }
                }
            }
            // next class to finalize
            loop {
                let Some(Reverse((v, r))) = heap.pop() else {
                    return Ok(None);
                };
                let r = r as usize;
                if self.marks[r] || best[r] != v {
                    continue;
                }
                last = v;
                let u: Vec<u8> = vecs[r][..self.k - 1].to_vec();
                self.lat.mark_up_closure(&u, &mut self.marks, &mut self.stack);
                if r == 0 {
                    return Ok(Some((v, best_parents[0])));
                }
                let e = self.non_leaf(&u, v, best_parents[r]);
                newest = self.push_element(e);
                break;
            }
        }
    }
}

/// Pair sums `s in N^k` seen during saturation, with a witness pair each.
struct SumTable {
    lat: Lattice,
    seen: Vec<Option<(u32, u32)>>,
}

impl SumTable {
    fn new(k: usize, d: usize) -> Self {
        let lat = Lattice::new(k, d);
        let seen = vec![None; lat.len()];
        SumTable { lat, seen }
    }

    fn record(&mut self, s: &[u8], pair: (u32, u32)) {
        let r = self.lat.rank(s);
        if self.seen[r].is_none() {
            self.seen[r] = Some(pair);
        }
    }

    /// Dominance-minimal recorded sums, in lexicographic order.
    fn minimal(&self) -> Vec<(Vec<u8>, (u32, u32))> {
        let mut closed = vec![false; self.lat.len()];
        let mut out = Vec::new();
        for (r, s) in self.lat.iter().enumerate() {
            let mut below = false;
            let mut t = s.clone();
            for i in 0..t.len() {
                if t[i] > 0 {
                    t[i] -= 1;
                    below |= closed[self.lat.rank(&t)];
                    t[i] += 1;
                }
            }
            closed[r] = below || self.seen[r].is_some();
            if !below {
                if let Some(p) = self.seen[r] {
                    out.push((s, p));
                }
            }
        }
        out
    }
}

/// Least fixed point of the leaf and join rules, as a dominance antichain.
pub fn constructible_fixpoint(k: usize, d: u64, budget: u64) -> std::result::Result<Antichain, FixpointError> {
    validate_kd(k, d).map_err(FixpointError::Invalid)?;
    let mut engine = Engine::new(k, d, budget);
    let mut sums = SumTable::new(k, d as usize);
    let stop = engine.saturate(false, Some(&mut sums));
    let mut elements = vec![unit_leaf(k, d)];
    let mut witness = vec![None];
    for (s, pair) in sums.minimal() {
        let mut e = Vec::with_capacity(k + 1);
        e.push(0u64);
        e.extend(s.iter().map(|&x| x as u64));
        elements.push(KdVector::from_u64s(k, d, &e).expect("pair sums respect d"));
        witness.push(Some(pair));
    }
    let chain = Antichain {
        k,
        d,
        elements,
        witness,
        internal: engine.elements,
        combinations: engine.combinations,
        complete: !matches!(stop, Stop::Budget),
    };
    if chain.complete {
        Ok(chain)
    } else {
        Err(FixpointError::BudgetExhausted {
            partial: Box::new(chain),
        })
    }
}

/// Existence of a (k,d)-tree, stopping as soon as one is found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Existence {
    pub exists: bool,
    pub combinations: u64,
}

pub fn kd_tree_exists(k: usize, d: u64, budget: u64) -> Result<Existence> {
    validate_kd(k, d)?;
    let mut engine = Engine::new(k, d, budget);
    match engine.saturate(true, None) {
        Stop::Budget => Err(Error::BudgetExhausted {
            used: engine.combinations,
        }),
        Stop::Target => Ok(Existence {
            exists: true,
            combinations: engine.combinations,
        }),
        Stop::Done => Ok(Existence {
            exists: engine.marks[0],
            combinations: engine.combinations,
        }),
    }
}

/// Outcome of an `f2` scan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum F2 {
    /// `f2(k)` exactly.
    Exact { value: u64, combinations: u64 },
    /// No decision on `d >= undecided_from`; `f2(k) >= undecided_from - 1`.
    Inconclusive { undecided_from: u64, combinations: u64 },
}

/// `f2(k)`: the largest `d` with no (k,d)-tree, by ascending scan up to `d_max`.
pub fn f2(k: usize, d_max: u64, budget: u64) -> Result<F2> {
    f2_with(k, d_max, budget, |_, _| {})
}

/// [`f2`] with a callback after each decided `d`.
pub fn f2_with(k: usize, d_max: u64, budget: u64, mut on_probe: impl FnMut(u64, &Existence)) -> Result<F2> {
    let mut spent = 0u64;
    for d in 1..=d_max {
        match kd_tree_exists(k, d, budget.saturating_sub(spent)) {
            Ok(ex) => {
                spent += ex.combinations;
                on_probe(d, &ex);
                if ex.exists {
                    return Ok(F2::Exact {
                        value: d - 1,
                        combinations: spent,
                    });
                }
            }
            Err(Error::BudgetExhausted { used }) => {
                return Ok(F2::Inconclusive {
                    undecided_from: d,
                    combinations: spent + used,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(F2::Inconclusive {
        undecided_from: d_max + 1,
        combinations: spent,
    })
}

/// Outcome of a minimal-size computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum MinTreeSize {
    /// Leaf count of a smallest (k,d)-tree.
    Exact {
        #[serde(with = "crate::serde_big::decimal")]
        size: BigUint,
        combinations: u64,
    },
    /// No (k,d)-tree exists (`d <= f2(k)`).
    NoTree { combinations: u64 },
    /// Budget exhausted; every (k,d)-tree has at least this many leaves.
    LowerBound {
        #[serde(with = "crate::serde_big::decimal")]
        bound: BigUint,
        combinations: u64,
    },
}

/// `f2(k,d)`: the number of leaves of a smallest (k,d)-tree.
pub fn min_tree_size(k: usize, d: u64, budget: u64) -> Result<MinTreeSize> {
    validate_kd(k, d)?;
    let mut engine = Engine::new(k, d, budget);
    match engine.minimize() {
        Ok(Some((v, _))) => Ok(MinTreeSize::Exact {
            size: BigUint::from(v),
            combinations: engine.combinations,
        }),
        Ok(None) => Ok(MinTreeSize::NoTree {
            combinations: engine.combinations,
        }),
        Err((last, Error::BudgetExhausted { used })) => Ok(MinTreeSize::LowerBound {
            bound: BigUint::from(last),
            combinations: used,
        }),
        Err((_, e)) => Err(e),
    }
}

/// A smallest (k,d)-tree as a plan (joins over shared subplans), if one exists.
pub fn min_tree_plan(k: usize, d: u64, budget: u64) -> Result<Option<BuildPlan>> {
    validate_kd(k, d)?;
    let mut engine = Engine::new(k, d, budget);
    match engine.minimize() {
        Ok(Some((_, (a, b)))) => {
            let mut builder = PlanBuilder::new(k, BigUint::from(d));
            let mut memo = vec![None; engine.elements.len()];
            let l = plan_for(&engine.elements, a as usize, &mut builder, &mut memo, k, d);
            let r = plan_for(&engine.elements, b as usize, &mut builder, &mut memo, k, d);
            let root = builder.join(l, r);
            Ok(Some(builder.finish(root)))
        }
        Ok(None) => Ok(None),
        Err((_, e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_values() {
        // (1,d): root with two leaf children needs d >= 2
        assert!(matches!(f2(1, 10, DEFAULT_BUDGET).unwrap(), F2::Exact { value: 1, .. }));
        // (2,3): root over two caterpillars, each vertex with one leaf child
        assert!(!kd_tree_exists(2, 2, DEFAULT_BUDGET).unwrap().exists);
        assert!(kd_tree_exists(2, 3, DEFAULT_BUDGET).unwrap().exists);
        assert!(matches!(f2(2, 10, DEFAULT_BUDGET).unwrap(), F2::Exact { value: 2, .. }));
    }

    #[test]
    fn complete_tree_size_when_d_is_large() {
        for k in 1..=4 {
            let d = 1u64 << k;
            match min_tree_size(k, d, DEFAULT_BUDGET).unwrap() {
                MinTreeSize::Exact { size, .. } => assert_eq!(size, BigUint::from(d)),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn base_vector_k1() {
        let chain = constructible_fixpoint(1, 2, DEFAULT_BUDGET).unwrap();
        assert!(chain.is_constructible(&KdVector::from_u64s(1, 2, &[0, 2]).unwrap()));
        // with window 1 any vertex over two non-leaf children works
        assert!(chain.is_constructible(&KdVector::from_u64s(1, 2, &[0, 0]).unwrap()));
        assert_eq!(chain.len(), 2);
        let chain = constructible_fixpoint(1, 1, DEFAULT_BUDGET).unwrap();
        assert!(!chain.is_constructible(&KdVector::from_u64s(1, 1, &[0, 1]).unwrap()));
        assert_eq!(chain.len(), 1);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(kd_tree_exists(0, 3, 10).is_err());
        assert!(kd_tree_exists(3, 0, 10).is_err());
        assert!(kd_tree_exists(16, 3, 10).is_err());
    }
}

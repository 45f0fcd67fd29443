//! Materialized full binary trees.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::kd_vectors::KdVector;

const NONE: u32 = u32::MAX;

/// A finite rooted full binary tree, stored in breadth-first order
/// (vertex 0 is the root, children come after their parent, first child
/// before second).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTree {
    kids: Vec<[u32; 2]>,
}

/// Incremental construction in any order; [`TreeBuilder::finish`] renumbers
/// to breadth-first order.
#[derive(Default, Debug)]
pub struct TreeBuilder {
    kids: Vec<[u32; 2]>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        TreeBuilder {
            kids: Vec::with_capacity(n),
        }
    }

    pub fn leaf(&mut self) -> u32 {
        self.kids.push([NONE, NONE]);
        (self.kids.len() - 1) as u32
    }

    pub fn join(&mut self, first: u32, second: u32) -> u32 {
        self.kids.push([first, second]);
        (self.kids.len() - 1) as u32
    }

    pub fn len(&self) -> usize {
        self.kids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kids.is_empty()
    }

    /// Breadth-first renumbering of the tree hanging from `root`.
    pub fn finish(self, root: u32) -> BinaryTree {
        renumber(&self.kids, root)
    }
}

fn renumber(kids: &[[u32; 2]], root: u32) -> BinaryTree {
    let mut order = Vec::with_capacity(kids.len());
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let v = order[head] as usize;
        head += 1;
        if kids[v][0] != NONE {
            order.push(kids[v][0]);
            order.push(kids[v][1]);
        }
    }
    // children of the i-th vertex in BFS order are found at consecutive positions
    let mut out = Vec::with_capacity(order.len());
    let mut next_child = 1u32;
    for &v in &order {
        if kids[v as usize][0] == NONE {
            out.push([NONE, NONE]);
        } else {
            out.push([next_child, next_child + 1]);
            next_child += 2;
        }
    }
    BinaryTree { kids: out }
}

impl BinaryTree {
    pub fn single_vertex() -> Self {
        BinaryTree {
            kids: vec![[NONE, NONE]],
        }
    }

    /// Complete tree with all leaves at depth `h`.
    pub fn complete(h: usize) -> Self {
        let n = (1usize << (h + 1)) - 1;
        let internal = (1usize << h) - 1;
        let kids = (0..n)
            .map(|v| {
                if v < internal {
                    [(2 * v + 1) as u32, (2 * v + 2) as u32]
                } else {
                    [NONE, NONE]
                }
            })
            .collect();
        BinaryTree { kids }
    }

    /// Joins two trees under a new root.
    pub fn join(a: &BinaryTree, b: &BinaryTree) -> BinaryTree {
        let mut builder = TreeBuilder::with_capacity(a.len() + b.len() + 1);
        let ra = a.copy_into(&mut builder);
        let rb = b.copy_into(&mut builder);
        let root = builder.join(ra, rb);
        builder.finish(root)
    }

    /// Appends a copy of this tree to `builder`, returning its root there.
    pub fn copy_into(&self, builder: &mut TreeBuilder) -> u32 {
        let base = builder.kids.len() as u32;
        for k in &self.kids {
            if k[0] == NONE {
                builder.kids.push([NONE, NONE]);
            } else {
                builder.kids.push([k[0] + base, k[1] + base]);
            }
        }
        base
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn len(&self) -> usize {
        self.kids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kids.is_empty()
    }

    pub fn children(&self, v: u32) -> Option<(u32, u32)> {
        let k = self.kids[v as usize];
        (k[0] != NONE).then_some((k[0], k[1]))
    }

    pub fn is_leaf(&self, v: u32) -> bool {
        self.kids[v as usize][0] == NONE
    }

    pub fn num_leaves(&self) -> usize {
        self.kids.iter().filter(|k| k[0] == NONE).count()
    }

    pub fn num_internal(&self) -> usize {
        self.len() - self.num_leaves()
    }

    /// Parent of every vertex (`u32::MAX` for the root).
    pub fn parents(&self) -> Vec<u32> {
        let mut p = vec![NONE; self.len()];
        for (v, k) in self.kids.iter().enumerate() {
            if k[0] != NONE {
                p[k[0] as usize] = v as u32;
                p[k[1] as usize] = v as u32;
            }
        }
        p
    }

    /// Depth of every vertex.
    pub fn depths(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.len()];
        for v in 0..self.len() {
            let k = self.kids[v];
            if k[0] != NONE {
                depth[k[0] as usize] = depth[v] + 1;
                depth[k[1] as usize] = depth[v] + 1;
            }
        }
        depth
    }

    pub fn depth(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0) as usize
    }

    /// Number of leaves at each depth.
    pub fn leaf_depth_profile(&self) -> Vec<u64> {
        let depths = self.depths();
        let mut prof = vec![0u64; self.depth() + 1];
        for (v, k) in self.kids.iter().enumerate() {
            if k[0] == NONE {
                prof[depths[v] as usize] += 1;
            }
        }
        prof
    }

    /// `sum over leaves of 2^-depth == 1`, checked exactly.
    pub fn kraft_sum_is_one(&self) -> bool {
        let prof = self.leaf_depth_profile();
        let h = prof.len() - 1;
        let total: BigUint = prof.iter().enumerate().map(|(j, &c)| BigUint::from(c) << (h - j)).sum();
        total == BigUint::one() << h
    }

    /// True iff every vertex has zero or two children and all are reachable.
    pub fn is_full_binary(&self) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0u32];
        let mut count = 0;
        while let Some(v) = stack.pop() {
            if seen[v as usize] {
                return false;
            }
            seen[v as usize] = true;
            count += 1;
            let k = self.kids[v as usize];
            match (k[0] == NONE, k[1] == NONE) {
                (true, true) => {}
                (false, false) => {
                    stack.push(k[0]);
                    stack.push(k[1]);
                }
                _ => return false,
            }
        }
        count == self.len()
    }

    /// Copy of the subtree rooted at `v`.
    pub fn subtree(&self, v: u32) -> BinaryTree {
        renumber(&self.kids, v)
    }

    /// Post-order fold: `leaf(v)` at leaves, `join(v, a, b)` at internal
    /// vertices; `visit` sees every vertex's value once. Memory is bounded by
    /// the depth of the tree.
    pub fn fold<T, E>(
        &self,
        mut leaf: impl FnMut(u32) -> T,
        mut join: impl FnMut(u32, T, T) -> T,
        mut visit: impl FnMut(u32, &T) -> std::result::Result<(), E>,
    ) -> std::result::Result<T, E> {
        let mut values: Vec<T> = Vec::new();
        let mut stack: Vec<(u32, bool)> = vec![(0, false)];
        while let Some((v, expanded)) = stack.pop() {
            let k = self.kids[v as usize];
            if k[0] == NONE {
                let t = leaf(v);
                visit(v, &t)?;
                values.push(t);
            } else if expanded {
                let b = values.pop().expect("second child value");
                let a = values.pop().expect("first child value");
                let t = join(v, a, b);
                visit(v, &t)?;
                values.push(t);
            } else {
                stack.push((v, true));
                stack.push((k[1], false));
                stack.push((k[0], false));
            }
        }
        Ok(values.pop().expect("root value"))
    }

    /// Distance from each vertex to its nearest descendant leaf.
    pub fn min_leaf_distances(&self) -> Vec<u32> {
        let mut mld = vec![0u32; self.len()];
        for v in (0..self.len()).rev() {
            let k = self.kids[v];
            if k[0] != NONE {
                mld[v] = 1 + mld[k[0] as usize].min(mld[k[1] as usize]);
            }
        }
        mld
    }
}

/// First failure found by a tree validator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NotFullBinary,
    /// Condition (i): a leaf closer than `k` to the root.
    ShallowLeaf {
        depth: usize,
    },
    /// Condition (i'): too many leaves at distance `j` from the root.
    ProfileExceeded {
        distance: usize,
        count: u64,
    },
    /// Condition (ii): a vertex with more than `d` leaves within distance `k`.
    Overfull {
        vertex: u32,
        count: u64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotFullBinary => write!(f, "not a full binary tree"),
            Violation::ShallowLeaf { depth } => write!(f, "leaf at depth {depth}"),
            Violation::ProfileExceeded { distance, count } => {
                write!(f, "{count} leaves at distance {distance} exceed the cap")
            }
            Violation::Overfull { vertex, count } => {
                write!(f, "vertex {vertex} sees {count} leaves within distance k")
            }
        }
    }
}

/// Root profile (leaves by distance `0..=k`) while checking `(ii)` everywhere.
fn checked_profile(t: &BinaryTree, k: usize, d: u64) -> std::result::Result<Vec<u64>, Violation> {
    if !t.is_full_binary() {
        return Err(Violation::NotFullBinary);
    }
    t.fold(
        |_| {
            let mut p = vec![0u64; k + 1];
            p[0] = 1;
            p
        },
        |_, a, b| {
            let mut p = vec![0u64; k + 1];
            for j in 0..k {
                p[j + 1] = a[j] + b[j];
            }
            p
        },
        |v, p| {
            let count: u64 = p.iter().sum();
            if count > d {
                Err(Violation::Overfull { vertex: v, count })
            } else {
                Ok(())
            }
        },
    )
}

/// Checks conditions (i) and (ii).
pub fn validate_kd_tree(t: &BinaryTree, k: usize, d: u64) -> std::result::Result<(), Violation> {
    let p = checked_profile(t, k, d)?;
    if let Some(j) = p[..k].iter().position(|&c| c > 0) {
        return Err(Violation::ShallowLeaf { depth: j });
    }
    Ok(())
}

/// Checks conditions (i') against `x` and (ii).
pub fn validate_kdx_tree(t: &BinaryTree, k: usize, d: u64, x: &KdVector) -> std::result::Result<(), Violation> {
    let p = checked_profile(t, k, d)?;
    for (j, (&c, cap)) in p.iter().zip(x.entries()).enumerate() {
        if BigUint::from(c) > *cap {
            return Err(Violation::ProfileExceeded { distance: j, count: c });
        }
    }
    Ok(())
}

/// Canonical tree whose leaf-depth profile is exactly `y` (weight one).
///
/// Level by level, the leftmost free slots become leaves and the rest are
/// expanded into two children each.
pub fn kraft_tree(y: &KdVector) -> Result<BinaryTree> {
    if !y.weight_scaled().is_exactly_one(y.k()) {
        return Err(Error::WeightNotOne);
    }
    let counts: Vec<u64> = y
        .entries()
        .iter()
        .map(|e| u64::try_from(e).map_err(|_| Error::InvalidParams("profile entry too large to materialize".into())))
        .collect::<Result<_>>()?;
    let leaves: u64 = counts.iter().sum();
    let mut kids: Vec<[u32; 2]> = Vec::with_capacity((2 * leaves - 1) as usize);
    let mut slots = 1u64;
    let mut next = 1u64;
    for &c in &counts {
        if slots == 0 {
            break;
        }
        debug_assert!(c <= slots);
        for i in 0..slots {
            if i < c {
                kids.push([NONE, NONE]);
            } else {
                kids.push([next as u32, next as u32 + 1]);
                next += 2;
            }
        }
        slots = 2 * (slots - c);
    }
    debug_assert_eq!(slots, 0);
    Ok(BinaryTree { kids })
}

/// Descends to a minimal (k,d)-tree: while some proper descendant of the
/// current root has no leaf closer than `k`, move to the first such vertex in
/// pre-order.
pub fn prune_to_minimal(t: &BinaryTree, k: usize, d: u64) -> Result<BinaryTree> {
    validate_kd_tree(t, k, d).map_err(|v| Error::NotAKdTree(v.to_string()))?;
    let mld = t.min_leaf_distances();
    let mut cur = 0u32;
    'descend: loop {
        let mut stack = Vec::new();
        if let Some((a, b)) = t.children(cur) {
            stack.push(b);
            stack.push(a);
        }
        while let Some(v) = stack.pop() {
            if mld[v as usize] as usize >= k {
                cur = v;
                continue 'descend;
            }
            // a vertex with a leaf closer than k can still contain a deeper
            // candidate
            if let Some((a, b)) = t.children(v) {
                stack.push(b);
                stack.push(a);
            }
        }
        break;
    }
    Ok(t.subtree(cur))
}

/// True iff no proper non-leaf descendant of the root is itself a (k,d)-tree.
pub fn is_minimal_kd_tree(t: &BinaryTree, k: usize) -> bool {
    let mld = t.min_leaf_distances();
    (1..t.len()).all(|v| (mld[v] as usize) < k)
}

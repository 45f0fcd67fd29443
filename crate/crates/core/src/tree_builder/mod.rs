//! Tree construction: the Kraft tree for a weight-one profile, the doubling
//! and splicing steps that invert `E` and `C_r`, and plans that describe huge
//! trees by shared subplans with exact size and depth.

mod tree;

pub use tree::{
    is_minimal_kd_tree, kraft_tree, prune_to_minimal, validate_kd_tree, validate_kdx_tree, BinaryTree, TreeBuilder,
    Violation,
};

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kd_vectors::KdVector;
use crate::recursion::{self, RecursionTrace, Status};

/// Index into a plan's node table. Children always have smaller ids.
pub type PlanNodeId = u32;

/// Default cap on materialized vertices.
pub const DEFAULT_VERTEX_CAP: u64 = 10_000_000;

/// Format version of the plan JSON.
pub const PLAN_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PlanNode {
    /// The Kraft tree of a weight-one profile.
    KraftLeaf { profile: KdVector },
    /// Two copies of `child` under a new root.
    Double { child: PlanNodeId },
    /// A complete tree of depth `l` with `star` at the last slot and copies
    /// of `main` at the other `2^l - 1` slots. `r` is the index the splice
    /// was chosen at.
    Splice {
        l: usize,
        main: PlanNodeId,
        star: PlanNodeId,
        r: usize,
    },
    /// `first` and `second` under a new root.
    Join { first: PlanNodeId, second: PlanNodeId },
}

impl PlanNode {
    fn children(&self) -> Vec<PlanNodeId> {
        match *self {
            PlanNode::KraftLeaf { .. } => vec![],
            PlanNode::Double { child } => vec![child],
            PlanNode::Splice { main, star, .. } => vec![main, star],
            PlanNode::Join { first, second } => vec![first, second],
        }
    }
}

/// A recipe for a full binary tree with shared substructure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildPlan {
    k: usize,
    d: BigUint,
    nodes: Vec<PlanNode>,
    leaf_count: Vec<BigUint>,
    depth: Vec<u64>,
    root: PlanNodeId,
}

/// Hash-consing builder: structurally equal nodes get the same id.
#[derive(Debug)]
pub struct PlanBuilder {
    k: usize,
    d: BigUint,
    nodes: Vec<PlanNode>,
    index: HashMap<PlanNode, PlanNodeId>,
    leaf_count: Vec<BigUint>,
    depth: Vec<u64>,
}

fn derived(node: &PlanNode, leaf_count: &[BigUint], depth: &[u64]) -> (BigUint, u64) {
    match node {
        PlanNode::KraftLeaf { profile } => (profile.sum(), profile.max_support().unwrap_or(0) as u64),
        PlanNode::Double { child } => {
            let c = *child as usize;
            (&leaf_count[c] << 1, depth[c] + 1)
        }
        PlanNode::Splice { l, main, star, .. } => {
            let (m, s) = (*main as usize, *star as usize);
            let arity = (BigUint::one() << *l) - 1u32;
            (
                arity * &leaf_count[m] + &leaf_count[s],
                *l as u64 + depth[m].max(depth[s]),
            )
        }
        PlanNode::Join { first, second } => {
            let (a, b) = (*first as usize, *second as usize);
            (&leaf_count[a] + &leaf_count[b], 1 + depth[a].max(depth[b]))
        }
    }
}

impl PlanBuilder {
    pub fn new(k: usize, d: BigUint) -> Self {
        PlanBuilder {
            k,
            d,
            nodes: Vec::new(),
            index: HashMap::new(),
            leaf_count: Vec::new(),
            depth: Vec::new(),
        }
    }

    fn intern(&mut self, node: PlanNode) -> PlanNodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        for c in node.children() {
            assert!((c as usize) < self.nodes.len(), "child {c} does not exist");
        }
        let (lc, dp) = derived(&node, &self.leaf_count, &self.depth);
        let id = self.nodes.len() as PlanNodeId;
        self.leaf_count.push(lc);
        self.depth.push(dp);
        self.index.insert(node.clone(), id);
        self.nodes.push(node);
        id
    }

    /// A Kraft tree for `profile`, which must have weight exactly one and
    /// respect this plan's `d`.
    pub fn kraft_leaf(&mut self, profile: KdVector) -> Result<PlanNodeId> {
        if profile.k() != self.k {
            return Err(Error::InvalidParams(format!(
                "profile has k = {}, plan has k = {}",
                profile.k(),
                self.k
            )));
        }
        if !profile.weight_scaled().is_exactly_one(self.k) {
            return Err(Error::WeightNotOne);
        }
        let profile = profile.with_d(self.d.clone())?;
        Ok(self.intern(PlanNode::KraftLeaf { profile }))
    }

    pub fn double(&mut self, child: PlanNodeId) -> PlanNodeId {
        self.intern(PlanNode::Double { child })
    }

    /// `times` nested doublings.
    pub fn double_n(&mut self, mut child: PlanNodeId, times: usize) -> PlanNodeId {
        for _ in 0..times {
            child = self.double(child);
        }
        child
    }

    pub fn splice(&mut self, l: usize, main: PlanNodeId, star: PlanNodeId, r: usize) -> PlanNodeId {
        assert!(l >= 1, "splice depth must be positive");
        self.intern(PlanNode::Splice { l, main, star, r })
    }

    pub fn join(&mut self, first: PlanNodeId, second: PlanNodeId) -> PlanNodeId {
        self.intern(PlanNode::Join { first, second })
    }

    /// Keeps the nodes reachable from `root`, renumbered in creation order.
    pub fn finish(self, root: PlanNodeId) -> BuildPlan {
        let n = self.nodes.len();
        let mut reach = vec![false; n];
        reach[root as usize] = true;
        for i in (0..n).rev() {
            if reach[i] {
                for c in self.nodes[i].children() {
                    reach[c as usize] = true;
                }
            }
        }
        let mut remap = vec![u32::MAX; n];
        let mut nodes = Vec::new();
        let mut leaf_count = Vec::new();
        let mut depth = Vec::new();
        for (i, node) in self.nodes.into_iter().enumerate() {
            if !reach[i] {
                continue;
            }
            remap[i] = nodes.len() as u32;
            let m = |c: PlanNodeId| remap[c as usize];
            nodes.push(match node {
                PlanNode::KraftLeaf { profile } => PlanNode::KraftLeaf { profile },
                PlanNode::Double { child } => PlanNode::Double { child: m(child) },
                PlanNode::Splice { l, main, star, r } => PlanNode::Splice {
                    l,
                    main: m(main),
                    star: m(star),
                    r,
                },
                PlanNode::Join { first, second } => PlanNode::Join {
                    first: m(first),
                    second: m(second),
                },
            });
            leaf_count.push(self.leaf_count[i].clone());
            depth.push(self.depth[i]);
        }
        BuildPlan {
            k: self.k,
            d: self.d,
            root: remap[root as usize],
            nodes,
            leaf_count,
            depth,
        }
    }
}

/// Failure found by plan-level validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanViolation {
    /// A vertex of node `node`'s top part, at `height` above the node's
    /// slots, sees `count > d` leaves within distance `k`.
    Overfull {
        node: PlanNodeId,
        height: usize,
        count: BigUint,
    },
    /// A leaf closer than `k` to the root.
    ShallowLeaf { distance: usize },
    /// Root profile exceeds the cap vector at `distance`.
    ProfileExceeded { distance: usize, count: BigUint },
}

impl std::fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanViolation::Overfull { node, height, count } => {
                write!(f, "node {node}: vertex at height {height} sees {count} leaves")
            }
            PlanViolation::ShallowLeaf { distance } => write!(f, "leaf at distance {distance}"),
            PlanViolation::ProfileExceeded { distance, count } => {
                write!(f, "{count} leaves at distance {distance} exceed the cap")
            }
        }
    }
}

type Profile = Vec<BigUint>;

fn shifted(p: &Profile, h: usize) -> Profile {
    let k = p.len() - 1;
    let mut out = vec![BigUint::zero(); k + 1];
    if h <= k {
        out[h..].clone_from_slice(&p[..=k - h]);
    }
    out
}

fn scaled_add(acc: &mut Profile, p: &Profile, factor: &BigUint) {
    for (a, b) in acc.iter_mut().zip(p) {
        if !b.is_zero() {
            *a += b * factor;
        }
    }
}

fn total(p: &Profile) -> BigUint {
    p.iter().sum()
}

impl BuildPlan {
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn d(&self) -> &BigUint {
        &self.d
    }
    pub fn root(&self) -> PlanNodeId {
        self.root
    }
    pub fn nodes(&self) -> &[PlanNode] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn node_leaf_count(&self, id: PlanNodeId) -> &BigUint {
        &self.leaf_count[id as usize]
    }
    pub fn node_depth(&self, id: PlanNodeId) -> u64 {
        self.depth[id as usize]
    }
    /// Leaves of the described tree.
    pub fn leaf_count(&self) -> &BigUint {
        &self.leaf_count[self.root as usize]
    }
    /// Depth of the described tree.
    pub fn depth(&self) -> u64 {
        self.depth[self.root as usize]
    }
    /// `2 * leaves - 1`.
    pub fn vertex_count(&self) -> BigUint {
        (self.leaf_count() << 1) - 1u32
    }

    /// Checks the occurrence cap at every vertex of the described tree, then
    /// conditions on the root profile: no leaf closer than `k` when `cap` is
    /// `None`, otherwise the profile must not exceed `cap`. Returns the root
    /// profile (leaves at distance `0..=k`).
    ///
    /// Each node's profile is dropped after its last use, so a chain-shaped
    /// plan needs memory for only a few profiles at a time.
    pub fn validate(&self, cap: Option<&KdVector>) -> std::result::Result<Vec<BigUint>, PlanViolation> {
        let n = self.nodes.len();
        let k = self.k;
        let mut last_use = vec![0usize; n];
        for (i, node) in self.nodes.iter().enumerate() {
            for c in node.children() {
                last_use[c as usize] = i;
            }
        }
        let mut profiles: Vec<Option<Profile>> = vec![None; n];
        let check = |node: usize, height: usize, p: &Profile| {
            let count = total(p);
            if count > self.d {
                Err(PlanViolation::Overfull {
                    node: node as PlanNodeId,
                    height,
                    count,
                })
            } else {
                Ok(())
            }
        };
        for i in 0..n {
            let prof = match &self.nodes[i] {
                PlanNode::KraftLeaf { profile } => {
                    // every vertex of a Kraft tree sees at most all its leaves
                    let p = profile.entries().to_vec();
                    check(i, 0, &p)?;
                    p
                }
                PlanNode::Double { child } => {
                    let c = profiles[*child as usize].as_ref().expect("child profile");
                    let mut p = vec![BigUint::zero(); k + 1];
                    scaled_add(&mut p, &shifted(c, 1), &BigUint::from(2u32));
                    check(i, 1, &p)?;
                    p
                }
                PlanNode::Join { first, second } => {
                    let a = profiles[*first as usize].as_ref().expect("child profile");
                    let b = profiles[*second as usize].as_ref().expect("child profile");
                    let mut p = shifted(a, 1);
                    scaled_add(&mut p, &shifted(b, 1), &BigUint::one());
                    check(i, 1, &p)?;
                    p
                }
                PlanNode::Splice { l, main, star, .. } => {
                    let m = profiles[*main as usize].as_ref().expect("child profile");
                    let s = profiles[*star as usize].as_ref().expect("child profile");
                    let mut root = Vec::new();
                    for h in 1..=*l {
                        let slots = BigUint::one() << h;
                        let mh = shifted(m, h);
                        // vertices whose slots are all copies of main
                        if h < *l {
                            let mut a = vec![BigUint::zero(); k + 1];
                            scaled_add(&mut a, &mh, &slots);
                            check(i, h, &a)?;
                        }
                        // the vertex above the star slot
                        let mut b = shifted(s, h);
                        scaled_add(&mut b, &mh, &(slots - 1u32));
                        check(i, h, &b)?;
                        if h == *l {
                            root = b;
                        }
                    }
                    root
                }
            };
            for c in self.nodes[i].children() {
                if last_use[c as usize] == i {
                    profiles[c as usize] = None;
                }
            }
            profiles[i] = Some(prof);
        }
        let root = profiles[self.root as usize].take().expect("root profile");
        match cap {
            None => {
                if let Some(j) = root[..k].iter().position(|c| !c.is_zero()) {
                    return Err(PlanViolation::ShallowLeaf { distance: j });
                }
            }
            Some(x) => {
                for (j, (c, bound)) in root.iter().zip(x.entries()).enumerate() {
                    if c > bound {
                        return Err(PlanViolation::ProfileExceeded {
                            distance: j,
                            count: c.clone(),
                        });
                    }
                }
            }
        }
        Ok(root)
    }

    /// Expands the plan into an explicit tree; shared nodes become distinct
    /// copies.
    pub fn materialize(&self, cap_vertices: &BigUint) -> Result<BinaryTree> {
        let required = self.vertex_count();
        let hard = BigUint::from(u32::MAX - 1);
        if &required > cap_vertices || required > hard {
            return Err(Error::CapExceeded {
                required,
                cap: cap_vertices.clone().min(hard),
            });
        }
        let n = required.to_usize().expect("checked above");
        let mut kraft: HashMap<PlanNodeId, BinaryTree> = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let PlanNode::KraftLeaf { profile } = node {
                kraft.insert(i as PlanNodeId, kraft_tree(profile)?);
            }
        }
        let mut b = TreeBuilder::with_capacity(n);
        let root = self.expand(self.root, &mut b, &kraft);
        Ok(b.finish(root))
    }

    fn expand(&self, id: PlanNodeId, b: &mut TreeBuilder, kraft: &HashMap<PlanNodeId, BinaryTree>) -> u32 {
        match self.nodes[id as usize] {
            PlanNode::KraftLeaf { .. } => kraft[&id].copy_into(b),
            PlanNode::Double { child } => {
                let x = self.expand(child, b, kraft);
                let y = self.expand(child, b, kraft);
                b.join(x, y)
            }
            PlanNode::Join { first, second } => {
                let x = self.expand(first, b, kraft);
                let y = self.expand(second, b, kraft);
                b.join(x, y)
            }
            PlanNode::Splice { l, main, star, .. } => self.expand_top(l, true, main, star, b, kraft),
        }
    }

    /// Complete tree of height `h`; the all-second-child path ends at `star`
    /// when `on_last` holds.
    fn expand_top(
        &self,
        h: usize,
        on_last: bool,
        main: PlanNodeId,
        star: PlanNodeId,
        b: &mut TreeBuilder,
        kraft: &HashMap<PlanNodeId, BinaryTree>,
    ) -> u32 {
        if h == 0 {
            return self.expand(if on_last { star } else { main }, b, kraft);
        }
        let x = self.expand_top(h - 1, false, main, star, b, kraft);
        let y = self.expand_top(h - 1, on_last, main, star, b, kraft);
        b.join(x, y)
    }

    pub fn to_json(&self) -> PlanJson {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| NodeJson {
                id: i as PlanNodeId,
                node: match node {
                    PlanNode::KraftLeaf { profile } => NodeKind::KraftLeaf {
                        profile: profile.entries().to_vec(),
                    },
                    PlanNode::Double { child } => NodeKind::Double { child: *child },
                    PlanNode::Splice { l, main, star, r } => NodeKind::Splice {
                        l: *l,
                        main: *main,
                        star: *star,
                        r: *r,
                    },
                    PlanNode::Join { first, second } => NodeKind::Join {
                        first: *first,
                        second: *second,
                    },
                },
                leaf_count: self.leaf_count[i].clone(),
                depth: BigUint::from(self.depth[i]),
            })
            .collect();
        PlanJson {
            version: PLAN_VERSION,
            k: self.k,
            d: self.d.clone(),
            root: self.root,
            leaf_count: self.leaf_count().clone(),
            depth: BigUint::from(self.depth()),
            nodes,
        }
    }

    /// Rebuilds a plan, recomputing and checking every derived field.
    pub fn from_json(j: &PlanJson) -> Result<Self> {
        if j.version != PLAN_VERSION {
            return Err(Error::PlanRejected(format!("unsupported plan version {}", j.version)));
        }
        let mut nodes = Vec::with_capacity(j.nodes.len());
        let mut leaf_count = Vec::with_capacity(j.nodes.len());
        let mut depth = Vec::with_capacity(j.nodes.len());
        for (i, nj) in j.nodes.iter().enumerate() {
            if nj.id as usize != i {
                return Err(Error::PlanRejected(format!("node {i} has id {}", nj.id)));
            }
            let node = match &nj.node {
                NodeKind::KraftLeaf { profile } => {
                    let profile = KdVector::new(j.k, j.d.clone(), profile.clone())?;
                    if !profile.weight_scaled().is_exactly_one(j.k) {
                        return Err(Error::WeightNotOne);
                    }
                    PlanNode::KraftLeaf { profile }
                }
                NodeKind::Double { child } => PlanNode::Double { child: *child },
                NodeKind::Splice { l, main, star, r } => {
                    if *l == 0 {
                        return Err(Error::PlanRejected(format!("node {i}: splice depth 0")));
                    }
                    PlanNode::Splice {
                        l: *l,
                        main: *main,
                        star: *star,
                        r: *r,
                    }
                }
                NodeKind::Join { first, second } => PlanNode::Join {
                    first: *first,
                    second: *second,
                },
            };
            if node.children().iter().any(|&c| c as usize >= i) {
                return Err(Error::PlanRejected(format!("node {i} refers forward")));
            }
            let (lc, dp) = derived(&node, &leaf_count, &depth);
            if lc != nj.leaf_count || BigUint::from(dp) != nj.depth {
                return Err(Error::PlanRejected(format!("node {i}: derived fields disagree")));
            }
            nodes.push(node);
            leaf_count.push(lc);
            depth.push(dp);
        }
        if j.root as usize >= nodes.len() {
            return Err(Error::PlanRejected("root out of range".into()));
        }
        let plan = BuildPlan {
            k: j.k,
            d: j.d.clone(),
            nodes,
            leaf_count,
            depth,
            root: j.root,
        };
        if *plan.leaf_count() != j.leaf_count || BigUint::from(plan.depth()) != j.depth {
            return Err(Error::PlanRejected("root fields disagree".into()));
        }
        Ok(plan)
    }

    /// Canonical JSON text (compact, fixed field order).
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("plan serializes")
    }

    /// SHA-256 of [`BuildPlan::to_json_string`], in hex.
    pub fn sha256_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_string().as_bytes()))
    }
}

/// Canonical JSON node table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlanJson {
    pub version: u32,
    pub k: usize,
    #[serde(with = "crate::serde_big::decimal")]
    pub d: BigUint,
    pub root: PlanNodeId,
    #[serde(with = "crate::serde_big::decimal")]
    pub leaf_count: BigUint,
    #[serde(with = "crate::serde_big::decimal")]
    pub depth: BigUint,
    pub nodes: Vec<NodeJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeJson {
    pub id: PlanNodeId,
    #[serde(flatten)]
    pub node: NodeKind,
    #[serde(with = "crate::serde_big::decimal")]
    pub leaf_count: BigUint,
    #[serde(with = "crate::serde_big::decimal")]
    pub depth: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum NodeKind {
    KraftLeaf {
        #[serde(with = "crate::serde_big::decimal_vec")]
        profile: Vec<BigUint>,
    },
    Double {
        child: PlanNodeId,
    },
    Splice {
        l: usize,
        main: PlanNodeId,
        star: PlanNodeId,
        r: usize,
    },
    Join {
        first: PlanNodeId,
        second: PlanNodeId,
    },
}

/// Plan for a (k,d)-tree from a successful trace, re-checking every step.
///
/// The weight-one vector at the end becomes a Kraft tree; walking back, each
/// step contributes `r-s-l` doublings and a splice whose star is the Kraft
/// tree of the trimmed `C*_r`; `k-s` final doublings undo the start.
pub fn plan_from_trace(trace: &RecursionTrace) -> Result<BuildPlan> {
    let p = &trace.params;
    let (k, l, s) = (p.k(), p.l(), p.s());
    let Status::ReachedWeightOne(last) = trace.status else {
        return Err(Error::PlanRejected(format!("trace status is {}", trace.status.name())));
    };
    if last + 1 != trace.steps.len() {
        return Err(Error::PlanRejected("status does not match step count".into()));
    }
    if trace.steps[0].x != recursion::initial_vector(p) {
        return Err(Error::PlanRejected("first vector is not E^(k-s)(0)".into()));
    }
    for t in 0..last {
        let x = &trace.steps[t].x;
        let r = trace.steps[t]
            .r
            .ok_or_else(|| Error::PlanRejected(format!("step {t} has no index")))?;
        if x.weight_scaled().is_at_least_one(k) {
            return Err(Error::PlanRejected(format!("step {t} already had weight one")));
        }
        if recursion::select_r(x, p)? != r {
            return Err(Error::PlanRejected(format!("step {t}: r is not minimal")));
        }
        if !recursion::star_fits(x, r, p)? {
            return Err(Error::PlanRejected(format!("step {t}: star bound fails")));
        }
        if recursion::next_vector(x, r, p)? != trace.steps[t + 1].x {
            return Err(Error::PlanRejected(format!("step {t}: successor mismatch")));
        }
    }
    let mut b = PlanBuilder::new(k, p.d().clone());
    let core = trace.steps[last]
        .x
        .trim_to_weight_one()
        .map_err(|_| Error::PlanRejected("last vector has weight below one".into()))?;
    let mut node = b.kraft_leaf(core)?;
    for t in (0..last).rev() {
        let x = &trace.steps[t].x;
        let r = trace.steps[t].r.expect("checked");
        node = b.double_n(node, r - s - l);
        let star = p
            .op()
            .op_c_star(x, r)?
            .trim_to_weight_one()
            .map_err(|_| Error::PlanRejected(format!("step {t}: star weight below one")))?;
        let star = b.kraft_leaf(star)?;
        node = b.splice(l, node, star, r);
    }
    node = b.double_n(node, k - s);
    Ok(b.finish(node))
}

/// Two copies of `t` under a new root.
pub fn apply_double(t: &BinaryTree) -> BinaryTree {
    BinaryTree::join(t, t)
}

/// Complete depth-`l` tree with `star` at the last slot and `main` elsewhere.
pub fn apply_splice(l: usize, main: &BinaryTree, star: &BinaryTree) -> BinaryTree {
    fn top(h: usize, last: bool, main: &BinaryTree, star: &BinaryTree, b: &mut TreeBuilder) -> u32 {
        if h == 0 {
            return if last { star.copy_into(b) } else { main.copy_into(b) };
        }
        let x = top(h - 1, false, main, star, b);
        let y = top(h - 1, last, main, star, b);
        b.join(x, y)
    }
    let mut b = TreeBuilder::new();
    let root = top(l, true, main, star, &mut b);
    b.finish(root)
}

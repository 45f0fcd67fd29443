//! CNF formulas read off (k,d)-trees, their occurrence statistics, and DIMACS.
//!
//! Every non-leaf vertex gets a variable; its first child carries the plain
//! literal and its second child the negated one. Each leaf contributes the
//! clause formed by the literals of the `k` vertices nearest to it on its
//! root path. Variables are numbered in breadth-first order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree_builder::BinaryTree;

/// A CNF formula in which every clause has exactly `k` literals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    k: usize,
    n_vars: usize,
    /// Clause `i` is `lits[i*k .. (i+1)*k]`.
    lits: Vec<i32>,
}

impl CnfFormula {
    /// Checks clause width, variable range and distinct variables per clause.
    pub fn new(k: usize, n_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("clause width must be positive".into()));
        }
        let mut lits = Vec::with_capacity(clauses.len() * k);
        for (i, c) in clauses.iter().enumerate() {
            if c.len() != k {
                return Err(Error::InvalidParams(format!(
                    "clause {i} has {} literals, expected {k}",
                    c.len()
                )));
            }
            for (a, &x) in c.iter().enumerate() {
                if x == 0 || x.unsigned_abs() as usize > n_vars {
                    return Err(Error::InvalidParams(format!("clause {i}: literal {x} out of range")));
                }
                if c[..a].iter().any(|y| y.abs() == x.abs()) {
                    return Err(Error::InvalidParams(format!(
                        "clause {i}: variable {} repeated",
                        x.abs()
                    )));
                }
            }
            lits.extend_from_slice(c);
        }
        Ok(CnfFormula { k, n_vars, lits })
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }
    pub fn n_clauses(&self) -> usize {
        self.lits.len() / self.k
    }
    pub fn clause(&self, i: usize) -> &[i32] {
        &self.lits[i * self.k..(i + 1) * self.k]
    }
    pub fn clauses(&self) -> impl ExactSizeIterator<Item = &[i32]> + '_ {
        self.lits.chunks_exact(self.k)
    }

    /// The formula without clause `i`.
    pub fn without_clause(&self, i: usize) -> CnfFormula {
        let mut lits = self.lits.clone();
        lits.drain(i * self.k..(i + 1) * self.k);
        CnfFormula {
            k: self.k,
            n_vars: self.n_vars,
            lits,
        }
    }

    /// Whether `assignment[v-1]` satisfies clause `i`.
    pub fn clause_satisfied(&self, i: usize, assignment: &[bool]) -> bool {
        self.clause(i).iter().any(|&l| lit_true(l, assignment))
    }

    /// Index of the first clause falsified by a total assignment.
    pub fn first_falsified(&self, assignment: &[bool]) -> Option<usize> {
        (0..self.n_clauses()).find(|&i| !self.clause_satisfied(i, assignment))
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.first_falsified(assignment).is_none()
    }

    /// Variable to clause incidence, each list in increasing clause order.
    pub fn incidence(&self) -> Vec<Vec<u32>> {
        let mut inc = vec![Vec::new(); self.n_vars + 1];
        for (i, c) in self.clauses().enumerate() {
            for &l in c {
                inc[l.unsigned_abs() as usize].push(i as u32);
            }
        }
        inc
    }
}

#[inline]
pub(crate) fn lit_true(l: i32, assignment: &[bool]) -> bool {
    assignment[l.unsigned_abs() as usize - 1] == (l > 0)
}

/// Per-vertex literal (0 at the root) under the breadth-first numbering of
/// non-leaf vertices.
fn vertex_literals(t: &BinaryTree) -> (Vec<i32>, usize) {
    let mut lit = vec![0i32; t.len()];
    let mut next = 0i32;
    for v in 0..t.len() as u32 {
        if let Some((a, b)) = t.children(v) {
            next += 1;
            lit[a as usize] = next;
            lit[b as usize] = -next;
        }
    }
    (lit, next as usize)
}

/// The formula of a tree with no leaf closer than `k` to the root.
pub fn tree_to_cnf(t: &BinaryTree, k: usize) -> Result<CnfFormula> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be positive".into()));
    }
    let depths = t.depths();
    let parents = t.parents();
    if let Some(v) = (0..t.len()).find(|&v| t.is_leaf(v as u32) && (depths[v] as usize) < k) {
        return Err(Error::LeafTooShallow {
            depth: depths[v] as usize,
            k,
        });
    }
    let (lit, n_vars) = vertex_literals(t);
    let mut lits = Vec::with_capacity(t.num_leaves() * k);
    let mut path = vec![0i32; k];
    for v in 0..t.len() as u32 {
        if !t.is_leaf(v) {
            continue;
        }
        let mut u = v;
        for slot in (0..k).rev() {
            path[slot] = lit[u as usize];
            u = parents[u as usize];
        }
        lits.extend_from_slice(&path);
    }
    Ok(CnfFormula { k, n_vars, lits })
}

/// Occurrence and neighborhood counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FormulaStats {
    pub k: usize,
    pub n_vars: usize,
    pub n_clauses: usize,
    #[serde(rename = "maxVarOcc")]
    pub max_var_occurrences: usize,
    #[serde(rename = "maxLitOcc")]
    pub max_literal_occurrences: usize,
    /// Most other clauses sharing a variable with one clause.
    pub max_neighborhood: usize,
}

pub fn stats(f: &CnfFormula) -> FormulaStats {
    let inc = f.incidence();
    let max_var = inc.iter().map(Vec::len).max().unwrap_or(0);
    let mut pos = vec![0usize; f.n_vars + 1];
    let mut neg = vec![0usize; f.n_vars + 1];
    for &l in &f.lits {
        if l > 0 {
            pos[l as usize] += 1;
        } else {
            neg[(-l) as usize] += 1;
        }
    }
    let max_lit = pos.iter().chain(&neg).copied().max().unwrap_or(0);
    let max_nb = max_neighborhood(f, &inc);
    FormulaStats {
        k: f.k,
        n_vars: f.n_vars,
        n_clauses: f.n_clauses(),
        max_var_occurrences: max_var,
        max_literal_occurrences: max_lit,
        max_neighborhood: max_nb,
    }
}

/// Variables with at least this many occurrences are handled as bitsets.
const HEAVY_OCC: usize = 64;

/// Exact maximum over clauses of `|union of inc(v) over v in C| - 1`.
///
/// Clauses are visited in lexicographic order of their heavy variables, and
/// a per-clause coverage count for the current heavy set is updated by the
/// difference to the previous set. Only light incidences are walked per
/// clause. In tree formulas the heavy variables are ancestors near the root,
/// so consecutive heavy sets share long prefixes.
fn max_neighborhood(f: &CnfFormula, inc: &[Vec<u32>]) -> usize {
    let n = f.n_clauses();
    let is_heavy = |l: &i32| inc[l.unsigned_abs() as usize].len() >= HEAVY_OCC;
    let key = |i: usize| -> Vec<u32> {
        let mut h: Vec<u32> = f
            .clause(i)
            .iter()
            .filter(|l| is_heavy(l))
            .map(|l| l.unsigned_abs())
            .collect();
        h.sort_unstable();
        h
    };
    let mut order: Vec<(Vec<u32>, usize)> = (0..n).map(|i| (key(i), i)).collect();
    order.sort_unstable();

    let mut cover = vec![0u32; n];
    let mut covered = 0usize;
    let mut cur: &[u32] = &[];
    let mut seen = vec![u32::MAX; n];
    let mut best = 0usize;
    for (heavy, i) in &order {
        if heavy.as_slice() != cur {
            for &v in cur.iter().filter(|v| heavy.binary_search(v).is_err()) {
                for &c in &inc[v as usize] {
                    cover[c as usize] -= 1;
                    covered -= usize::from(cover[c as usize] == 0);
                }
            }
            for &v in heavy.iter().filter(|v| cur.binary_search(v).is_err()) {
                for &c in &inc[v as usize] {
                    covered += usize::from(cover[c as usize] == 0);
                    cover[c as usize] += 1;
                }
            }
            cur = heavy;
        }
        let stamp = *i as u32;
        let mut count = covered;
        for l in f.clause(*i).iter().filter(|l| !is_heavy(l)) {
            for &c in &inc[l.unsigned_abs() as usize] {
                if cover[c as usize] == 0 && seen[c as usize] != stamp {
                    seen[c as usize] = stamp;
                    count += 1;
                }
            }
        }
        // the clause itself is counted
        best = best.max(count - 1);
    }
    best
}

/// Walks from the root into the child whose literal is false; the clause
/// of the leaf reached is falsified.
pub struct FalsificationWalker<'a> {
    tree: &'a BinaryTree,
    lit: Vec<i32>,
    /// Clause index of each leaf.
    clause_of: Vec<u32>,
}

impl<'a> FalsificationWalker<'a> {
    pub fn new(tree: &'a BinaryTree) -> Self {
        let (lit, _) = vertex_literals(tree);
        let mut clause_of = vec![u32::MAX; tree.len()];
        let mut next = 0u32;
        for v in 0..tree.len() as u32 {
            if tree.is_leaf(v) {
                clause_of[v as usize] = next;
                next += 1;
            }
        }
        FalsificationWalker { tree, lit, clause_of }
    }

    pub fn falsified_clause(&self, assignment: &[bool]) -> usize {
        let mut v = 0u32;
        while let Some((a, _)) = self.tree.children(v) {
            let first = self.lit[a as usize];
            // first child holds the plain literal; go where the literal is false
            v = if lit_true(first, assignment) { a + 1 } else { a };
        }
        self.clause_of[v as usize] as usize
    }
}

/// Clause of the tree formula falsified by a total assignment.
pub fn falsified_clause(t: &BinaryTree, assignment: &[bool]) -> usize {
    FalsificationWalker::new(t).falsified_clause(assignment)
}

/// True iff every non-root non-leaf vertex has a leaf within distance
/// `k-1` (so both of its literals occur) and clauses outnumber variables by one.
pub fn check_mu1_structure(t: &BinaryTree, k: usize, f: &CnfFormula) -> bool {
    if f.n_clauses() != f.n_vars() + 1 {
        return false;
    }
    let mld = t.min_leaf_distances();
    (1..t.len()).all(|v| t.is_leaf(v as u32) || (mld[v] as usize) < k)
}

/// True iff any two clauses sharing a variable share one with opposite signs.
pub fn opposite_sign_intersection(f: &CnfFormula) -> bool {
    let inc = f.incidence();
    (0..f.n_clauses()).all(|i| {
        let ci = f.clause(i);
        let mut partners: Vec<u32> = ci
            .iter()
            .flat_map(|&l| inc[l.unsigned_abs() as usize].iter().copied())
            .filter(|&c| c as usize > i)
            .collect();
        partners.sort_unstable();
        partners.dedup();
        partners.into_iter().all(|j| {
            let cj = f.clause(j as usize);
            ci.iter().any(|&a| cj.contains(&-a))
        })
    })
}

/// Writes DIMACS CNF: comment lines, `p cnf` header, one clause per line.
pub fn emit_dimacs<W: Write>(f: &CnfFormula, comments: &[String], out: &mut W) -> Result<()> {
    let mut buf = String::with_capacity(f.lits.len() * 8 + 64);
    for c in comments {
        for line in c.lines() {
            buf.push_str("c ");
            buf.push_str(line);
            buf.push('\n');
        }
    }
    buf.push_str(&format!("p cnf {} {}\n", f.n_vars, f.n_clauses()));
    out.write_all(buf.as_bytes())?;
    buf.clear();
    for c in f.clauses() {
        for &l in c {
            buf.push_str(itoa(l).as_str());
            buf.push(' ');
        }
        buf.push_str("0\n");
        if buf.len() > 1 << 16 {
            out.write_all(buf.as_bytes())?;
            buf.clear();
        }
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

fn itoa(l: i32) -> String {
    l.to_string()
}

/// DIMACS text as a string.
pub fn to_dimacs_string(f: &CnfFormula, comments: &[String]) -> String {
    let mut v = Vec::new();
    emit_dimacs(f, comments, &mut v).expect("writing to memory");
    String::from_utf8(v).expect("ascii")
}

/// Parses DIMACS CNF. Clauses may span lines; all must have the same width.
pub fn parse_dimacs<R: BufRead>(input: R) -> Result<CnfFormula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut cur: Vec<i32> = Vec::new();
    let mut last_line = 0;
    for (no, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = no + 1;
        last_line = line_no;
        let t = line.trim();
        if t.is_empty() || t.starts_with('c') || t.starts_with('%') {
            continue;
        }
        if t.starts_with('p') {
            let parts: Vec<&str> = t.split_whitespace().collect();
            if header.is_some() || parts.len() != 4 || parts[1] != "cnf" {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("bad header {t:?}"),
                });
            }
            let num = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad number {s:?}"),
                })
            };
            header = Some((num(parts[2])?, num(parts[3])?));
            continue;
        }
        if header.is_none() {
            return Err(Error::Parse {
                line: line_no,
                msg: "clause before header".into(),
            });
        }
        for tok in t.split_whitespace() {
            let l: i32 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad literal {tok:?}"),
            })?;
            if l == 0 {
                clauses.push(std::mem::take(&mut cur));
            } else {
                cur.push(l);
            }
        }
    }
    let Some((n_vars, n_clauses)) = header else {
        return Err(Error::Parse {
            line: last_line,
            msg: "missing header".into(),
        });
    };
    if !cur.is_empty() {
        return Err(Error::Parse {
            line: last_line,
            msg: "last clause is not terminated by 0".into(),
        });
    }
    if clauses.len() != n_clauses {
        return Err(Error::Parse {
            line: last_line,
            msg: format!("header declares {n_clauses} clauses, found {}", clauses.len()),
        });
    }
    let k = clauses.first().map_or(1, Vec::len);
    CnfFormula::new(k, n_vars, clauses).map_err(|e| Error::Parse {
        line: last_line,
        msg: e.to_string(),
    })
}

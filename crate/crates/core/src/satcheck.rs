//! Small, complete SAT tools used as ground truth: DPLL, minimal
//! unsatisfiability by clause deletion, and resampling search.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formula::{lit_true, CnfFormula};

/// A total truth assignment; `values[v-1]` is the value of variable `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<bool>,
}

impl Assignment {
    pub fn value(&self, var: usize) -> bool {
        self.values[var - 1]
    }

    /// `v 1 -2 3 ... 0` in the usual solver output style.
    pub fn to_v_line(&self) -> String {
        let mut s = String::from("v");
        for (i, &b) in self.values.iter().enumerate() {
            let v = i as i64 + 1;
            s.push(' ');
            s.push_str(&(if b { v } else { -v }).to_string());
        }
        s.push_str(" 0");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// Default DPLL node budget.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

struct Dpll<'a> {
    f: &'a CnfFormula,
    occ: Vec<Vec<u32>>,
    /// 0 unassigned, 1 true, -1 false
    val: Vec<i8>,
    trail: Vec<u32>,
    qhead: usize,
    nodes: u64,
    budget: u64,
}

impl<'a> Dpll<'a> {
    fn new(f: &'a CnfFormula, budget: u64) -> Self {
        Dpll {
            f,
            occ: f.incidence(),
            val: vec![0; f.n_vars() + 1],
            trail: Vec::new(),
            qhead: 0,
            nodes: 0,
            budget,
        }
    }

    #[inline]
    fn lit_val(&self, l: i32) -> i8 {
        let v = self.val[l.unsigned_abs() as usize];
        if l > 0 {
            v
        } else {
            -v
        }
    }

    fn assign(&mut self, l: i32) {
        let v = l.unsigned_abs();
        self.val[v as usize] = if l > 0 { 1 } else { -1 };
        self.trail.push(v);
    }

    fn undo(&mut self, mark: usize) {
        for &v in &self.trail[mark..] {
            self.val[v as usize] = 0;
        }
        self.trail.truncate(mark);
        self.qhead = self.qhead.min(mark);
    }

    /// Unit propagation over clauses touching newly assigned variables.
    /// `false` on conflict.
    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let v = self.trail[self.qhead] as usize;
            self.qhead += 1;
            for idx in 0..self.occ[v].len() {
                let c = self.occ[v][idx] as usize;
                let mut unassigned = 0;
                let mut last = 0i32;
                let mut sat = false;
                for &l in self.f.clause(c) {
                    match self.lit_val(l) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            unassigned += 1;
                            last = l;
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match unassigned {
                    0 => return false,
                    1 => self.assign(last),
                    _ => {}
                }
            }
        }
        true
    }

    /// Assigns units present from the start; `false` on an immediate conflict.
    fn initial_units(&mut self) -> bool {
        for i in 0..self.f.n_clauses() {
            let c = self.f.clause(i);
            let open: Vec<i32> = c.iter().copied().filter(|&l| self.lit_val(l) == 0).collect();
            let sat = c.iter().any(|&l| self.lit_val(l) == 1);
            if sat {
                continue;
            }
            match open.len() {
                0 => return false,
                1 => {
                    self.assign(open[0]);
                    if !self.propagate() {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    /// Literal counts over unsatisfied clauses: `(pos, neg)` per variable.
    fn open_counts(&self) -> (Vec<u32>, Vec<u32>) {
        let n = self.f.n_vars() + 1;
        let (mut pos, mut neg) = (vec![0u32; n], vec![0u32; n]);
        for c in self.f.clauses() {
            if c.iter().any(|&l| self.lit_val(l) == 1) {
                continue;
            }
            for &l in c {
                if self.lit_val(l) == 0 {
                    if l > 0 {
                        pos[l as usize] += 1;
                    } else {
                        neg[(-l) as usize] += 1;
                    }
                }
            }
        }
        (pos, neg)
    }

    fn search(&mut self) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExhausted { used: self.nodes - 1 });
        }
        let mark = self.trail.len();
        if !self.propagate() {
            self.undo(mark);
            return Ok(false);
        }
        // pure literals never cause conflicts
        loop {
            let (pos, neg) = self.open_counts();
            let mut any = false;
            for v in 1..pos.len() {
                if self.val[v] == 0 && (pos[v] == 0) != (neg[v] == 0) {
                    self.assign(if pos[v] > 0 { v as i32 } else { -(v as i32) });
                    any = true;
                }
            }
            if !any {
                break;
            }
            let ok = self.propagate();
            debug_assert!(ok);
        }
        let (pos, neg) = self.open_counts();
        let best = (1..pos.len())
            .filter(|&v| self.val[v] == 0 && pos[v] + neg[v] > 0)
            .max_by_key(|&v| (pos[v] + neg[v], std::cmp::Reverse(v)));
        let Some(v) = best else {
            return Ok(true);
        };
        for lit in [v as i32, -(v as i32)] {
            let m = self.trail.len();
            self.assign(lit);
            if self.search()? {
                return Ok(true);
            }
            self.undo(m);
        }
        self.undo(mark);
        Ok(false)
    }
}

/// Complete decision by DPLL with unit propagation, pure literals and
/// most-frequent-variable branching (true first). Returned assignments are
/// checked against every clause.
pub fn dpll_sat(f: &CnfFormula, node_budget: u64) -> Result<SatResult> {
    let mut s = Dpll::new(f, node_budget);
    if !s.initial_units() {
        return Ok(SatResult::Unsat);
    }
    if !s.search()? {
        return Ok(SatResult::Unsat);
    }
    let values: Vec<bool> = s.val[1..].iter().map(|&x| x == 1).collect();
    assert!(f.is_satisfied_by(&values), "DPLL produced a non-model");
    Ok(SatResult::Sat(Assignment { values }))
}

/// Satisfiability by trying all `2^n` assignments (`n <= 24`).
pub fn brute_force_sat(f: &CnfFormula) -> Option<Assignment> {
    let n = f.n_vars();
    assert!(n <= 24, "brute force limited to 24 variables");
    let mut values = vec![false; n];
    for bits in 0u64..(1u64 << n) {
        for (i, v) in values.iter_mut().enumerate() {
            *v = bits >> i & 1 == 1;
        }
        if f.is_satisfied_by(&values) {
            return Some(Assignment { values });
        }
    }
    None
}

/// Unsatisfiable, and satisfiable after deleting any one clause.
pub fn verify_mu(f: &CnfFormula, node_budget: u64) -> Result<bool> {
    if dpll_sat(f, node_budget)?.is_sat() {
        return Ok(false);
    }
    for i in 0..f.n_clauses() {
        if !dpll_sat(&f.without_clause(i), node_budget)?.is_sat() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MtResult {
    Sat { assignment: Assignment, resamples: u64 },
    GaveUp { resamples: u64 },
}

/// Resampling search: start uniformly at random, then repeatedly resample the
/// variables of the lowest-index violated clause.
pub fn moser_tardos(f: &CnfFormula, seed: u64, max_resamples: u64) -> MtResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<bool> = (0..f.n_vars()).map(|_| rng.random()).collect();
    let inc = f.incidence();
    let mut true_lits: Vec<u32> = f
        .clauses()
        .map(|c| c.iter().filter(|&&l| lit_true(l, &values)).count() as u32)
        .collect();
    let mut violated: BTreeSet<u32> = (0..f.n_clauses() as u32)
        .filter(|&i| true_lits[i as usize] == 0)
        .collect();
    let mut resamples = 0u64;
    while let Some(&c) = violated.iter().next() {
        if resamples >= max_resamples {
            return MtResult::GaveUp { resamples };
        }
        resamples += 1;
        let vars: Vec<u32> = f.clause(c as usize).iter().map(|l| l.unsigned_abs()).collect();
        for v in vars {
            let new = rng.random::<bool>();
            let vi = v as usize - 1;
            if values[vi] == new {
                continue;
            }
            values[vi] = new;
            for &o in &inc[v as usize] {
                let pos = f
                    .clause(o as usize)
                    .iter()
                    .find(|l| l.unsigned_abs() == v)
                    .copied()
                    .unwrap();
                if (pos > 0) == new {
                    true_lits[o as usize] += 1;
                    if true_lits[o as usize] == 1 {
                        violated.remove(&o);
                    }
                } else {
                    true_lits[o as usize] -= 1;
                    if true_lits[o as usize] == 0 {
                        violated.insert(o);
                    }
                }
            }
        }
    }
    assert!(f.is_satisfied_by(&values), "resampling ended on a non-model");
    MtResult::Sat {
        assignment: Assignment { values },
        resamples,
    }
}

/// Random k-CNF where no variable occurs more than `max_occ` times: each
/// clause picks `k` distinct variables uniformly among those below the cap,
/// with independent signs. Stops early when fewer than `k` remain.
pub fn random_bounded_cnf(k: usize, max_occ: usize, n_vars: usize, n_clauses: usize, seed: u64) -> CnfFormula {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut occ = vec![0usize; n_vars + 1];
    let mut open: Vec<usize> = (1..=n_vars).collect();
    let mut clauses = Vec::with_capacity(n_clauses);
    while clauses.len() < n_clauses && open.len() >= k {
        let picked = rand::seq::index::sample(&mut rng, open.len(), k);
        let mut c: Vec<i32> = picked
            .iter()
            .map(|i| {
                let v = open[i] as i32;
                if rng.random() {
                    v
                } else {
                    -v
                }
            })
            .collect();
        c.sort_by_key(|l| l.unsigned_abs());
        for &l in &c {
            occ[l.unsigned_abs() as usize] += 1;
        }
        open.retain(|&v| occ[v] < max_occ);
        clauses.push(c);
    }
    CnfFormula::new(k, n_vars, clauses).expect("generated clauses are well formed")
}

/// Random k-CNF with clauses drawn uniformly and independently.
pub fn random_cnf(k: usize, n_vars: usize, n_clauses: usize, seed: u64) -> CnfFormula {
    random_bounded_cnf(k, usize::MAX, n_vars, n_clauses, seed)
}

//! The vector recursion behind the large-k construction.
//!
//! Starting from `x(0) = E^(k-s)(0)`, each step picks the smallest index `r`
//! in `[s+l, k]` whose prefix weight reaches `2^-l`, and moves to
//! `x(t+1) = E^(r-s-l)(C_r(x(t)))`. Once some `x(T)` has weight at least one,
//! every earlier vector is constructible and a (k,d)-tree follows.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::kd_vectors::{KdVector, OpParams};

/// Parameters of one construction run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionParams {
    op: OpParams,
    /// `2^(k-l)`: prefix weight `2^-l` scaled by `2^k`.
    threshold: BigUint,
}

/// Smallest `k` the construction accepts.
pub const MIN_K: usize = 16;

/// `floor(log2(k) / 2)`.
pub fn splice_depth(k: usize) -> usize {
    (usize::BITS - 1 - k.leading_zeros()) as usize / 2
}

/// Parameters for `k`, with `d` either given or taken from the closed formula.
pub fn derive_params(k: usize, d_override: Option<BigUint>) -> Result<ConstructionParams> {
    if k < MIN_K {
        return Err(Error::KTooSmall(k));
    }
    let d = match d_override {
        Some(d) => d,
        None => bounds::construction_d(k)?,
    };
    let l = splice_depth(k);
    let s = 2 * l;
    if s + l > k {
        return Err(Error::InvalidParams(format!("s + l = {} exceeds k = {k}", s + l)));
    }
    let op = OpParams::new(k, d, l, s)?;
    Ok(ConstructionParams {
        threshold: BigUint::one() << (k - l),
        op,
    })
}

impl ConstructionParams {
    pub fn k(&self) -> usize {
        self.op.k()
    }
    pub fn d(&self) -> &BigUint {
        self.op.d()
    }
    pub fn l(&self) -> usize {
        self.op.l()
    }
    pub fn s(&self) -> usize {
        self.op.s()
    }
    pub fn op(&self) -> &OpParams {
        &self.op
    }
    pub fn threshold_scaled(&self) -> &BigUint {
        &self.threshold
    }

    /// Same `k`, `l`, `s` with another `d`.
    pub fn with_d(&self, d: BigUint) -> Result<Self> {
        derive_params(self.k(), Some(d))
    }
}

/// `E^(k-s)` applied to the zero vector.
pub fn initial_vector(p: &ConstructionParams) -> KdVector {
    let z = KdVector::zero(p.k(), p.d().clone());
    p.op.op_e_pow(&z, p.k() - p.s())
}

/// Smallest `r` in `[s+l, k]` with prefix weight at least `2^-l`.
pub fn select_r(x: &KdVector, p: &ConstructionParams) -> Result<usize> {
    let k = p.k();
    let mut acc = BigUint::zero();
    for (j, e) in x.entries().iter().enumerate() {
        if !e.is_zero() {
            acc += e << (k - j);
        }
        if j >= p.s() + p.l() && acc >= p.threshold {
            return Ok(j);
        }
    }
    Err(Error::ThresholdUnreachable)
}

/// One recorded vector with the index chosen at it (absent at the last step).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub x: KdVector,
    pub r: Option<usize>,
}

impl Step {
    /// `q = r - s`.
    pub fn q(&self, s: usize) -> Option<usize> {
        self.r.map(|r| r - s)
    }
}

/// Why a run stopped. `step` is the index of the last recorded vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "step")]
pub enum Status {
    ReachedWeightOne(usize),
    /// The sequence reached a fixed point of weight below one.
    Stabilized(usize),
    ThresholdUnreachable(usize),
    /// `2^l |C*_r(x)| >= d` at this step.
    StarTooLarge(usize),
    BudgetExhausted(usize),
}

impl Status {
    pub fn is_success(&self) -> bool {
        matches!(self, Status::ReachedWeightOne(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Status::ReachedWeightOne(_) => "ReachedWeightOne",
            Status::Stabilized(_) => "Stabilized",
            Status::ThresholdUnreachable(_) => "ThresholdUnreachable",
            Status::StarTooLarge(_) => "StarTooLarge",
            Status::BudgetExhausted(_) => "BudgetExhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionTrace {
    pub params: ConstructionParams,
    pub steps: Vec<Step>,
    pub status: Status,
}

impl RecursionTrace {
    /// `q_t` for every step that chose an index.
    pub fn qs(&self) -> Vec<usize> {
        self.steps.iter().filter_map(|st| st.q(self.params.s())).collect()
    }
}

/// `x -> E^(r-s-l)(C_r(x))`.
pub fn next_vector(x: &KdVector, r: usize, p: &ConstructionParams) -> Result<KdVector> {
    let c = p.op.op_c(x, r)?;
    Ok(p.op.op_e_pow(&c, r - p.s() - p.l()))
}

/// `2^l |C*_r(x)| < d`.
pub fn star_fits(x: &KdVector, r: usize, p: &ConstructionParams) -> Result<bool> {
    let star = p.op.op_c_star(x, r)?;
    Ok((star.sum() << p.l()) < *p.d())
}

/// Runs the recursion, stopping at the first vector of weight at least one.
pub fn run(p: &ConstructionParams, max_steps: usize) -> RecursionTrace {
    let k = p.k();
    let mut steps = Vec::new();
    let mut x = initial_vector(p);
    let status = loop {
        let t = steps.len();
        if x.weight_scaled().is_at_least_one(k) {
            steps.push(Step { x, r: None });
            break Status::ReachedWeightOne(t);
        }
        if t >= max_steps {
            steps.push(Step { x, r: None });
            break Status::BudgetExhausted(t);
        }
        let Ok(r) = select_r(&x, p) else {
            steps.push(Step { x, r: None });
            break Status::ThresholdUnreachable(t);
        };
        if !star_fits(&x, r, p).expect("r in range") {
            steps.push(Step { x, r: Some(r) });
            break Status::StarTooLarge(t);
        }
        let next = next_vector(&x, r, p).expect("r in range");
        let fixed = next == x;
        steps.push(Step { x, r: Some(r) });
        if fixed {
            break Status::Stabilized(t);
        }
        x = next;
    };
    RecursionTrace {
        params: p.clone(),
        steps,
        status,
    }
}

/// Final status of [`run`] without recording the trace.
///
/// Every visited vector is zero up to index `s` and equals
/// `floor(V_c / 2^(k+1-j))` beyond it, with
/// `V_c = floor(d (2^l-2) 2^(lc) / (2^l-1)^(c+1))` and `c` the number of recent
/// splices that fit in `k - j` (the identity [`verify_closed_form`] checks).
/// So the run only needs the history of chosen indices, and each step costs
/// a few fixed-width additions per entry instead of bignum divisions.
pub fn run_status(p: &ConstructionParams, max_steps: usize) -> Status {
    let k = p.k();
    let (l, s) = (p.l(), p.s());
    let mut levels = SpliceLevels::new(p);
    let mut qs: Vec<usize> = Vec::new();
    let mut cur = splice_profile(&qs, k, s);
    let mut acc: Vec<u64> = Vec::new();
    loop {
        let t = qs.len();
        // prefix weights scaled by 2^(k+1)
        acc.clear();
        let mut r = None;
        for j in s + 1..=k {
            add_masked(&mut acc, levels.limbs(cur[j - s - 1]), k + 1 - j);
            if r.is_none() && j >= s + l && at_least_pow2(&acc, k + 1 - l) {
                r = Some(j);
            }
        }
        if at_least_pow2(&acc, k + 1) {
            return Status::ReachedWeightOne(t);
        }
        if t >= max_steps {
            return Status::BudgetExhausted(t);
        }
        let Some(r) = r else {
            return Status::ThresholdUnreachable(t);
        };
        acc.clear();
        for j in s + 1..=r {
            add_shr(&mut acc, levels.limbs(cur[j - s - 1]), k + 1 - j);
        }
        if (limbs_to_big(&acc) << l) >= *p.d() {
            return Status::StarTooLarge(t);
        }
        qs.push(r - s);
        let next = splice_profile(&qs, k, s);
        let fixed = (s + 1..=k).rev().all(|j| {
            let (a, b) = (cur[j - s - 1], next[j - s - 1]);
            a == b || levels.big(a) >> (k + 1 - j) == levels.big(b) >> (k + 1 - j)
        });
        if fixed {
            return Status::Stabilized(t);
        }
        cur = next;
    }
}

/// `c(t,j)` for `j = s+1..=k` after the index history `qs`.
fn splice_profile(qs: &[usize], k: usize, s: usize) -> Vec<usize> {
    let t = qs.len();
    let mut out = vec![0; k - s];
    let (mut c, mut sum) = (0usize, 0usize);
    for j in (s + 1..=k).rev() {
        while c < t && sum + qs[t - 1 - c] <= k - j {
            sum += qs[t - 1 - c];
            c += 1;
        }
        out[j - s - 1] = c;
    }
    out
}

/// Lazily computed `V_c`, as bignums and as 64-bit limbs.
struct SpliceLevels {
    num: BigUint,
    arity: BigUint,
    l: usize,
    den: BigUint,
    big: Vec<BigUint>,
    limbs: Vec<Vec<u64>>,
}

impl SpliceLevels {
    fn new(p: &ConstructionParams) -> Self {
        let two_l = BigUint::one() << p.l();
        let arity = &two_l - 1u32;
        SpliceLevels {
            num: p.d() * (two_l - 2u32),
            den: arity.clone(),
            arity,
            l: p.l(),
            big: Vec::new(),
            limbs: Vec::new(),
        }
    }

    fn fill(&mut self, c: usize) {
        while self.big.len() <= c {
            let i = self.big.len();
            let v = (&self.num << (self.l * i)) / &self.den;
            self.den *= &self.arity;
            self.limbs.push(v.to_u64_digits());
            self.big.push(v);
        }
    }

    fn limbs(&mut self, c: usize) -> &[u64] {
        self.fill(c);
        &self.limbs[c]
    }

    fn big(&mut self, c: usize) -> &BigUint {
        self.fill(c);
        &self.big[c]
    }
}

/// `acc += v` with the lowest `e` bits of `v` cleared.
fn add_masked(acc: &mut Vec<u64>, v: &[u64], e: usize) {
    let start = e / 64;
    if start >= v.len() {
        return;
    }
    if acc.len() < v.len() + 1 {
        acc.resize(v.len() + 1, 0);
    }
    let mut carry = false;
    for i in start..v.len() {
        let w = if i == start { v[i] & (!0u64 << (e % 64)) } else { v[i] };
        let (x, c1) = acc[i].overflowing_add(w);
        let (x, c2) = x.overflowing_add(carry as u64);
        acc[i] = x;
        carry = c1 || c2;
    }
    propagate(acc, v.len(), carry);
}

/// `acc += v >> e`.
fn add_shr(acc: &mut Vec<u64>, v: &[u64], e: usize) {
    let (skip, bit) = (e / 64, e % 64);
    if skip >= v.len() {
        return;
    }
    let n = v.len() - skip;
    if acc.len() < n + 1 {
        acc.resize(n + 1, 0);
    }
    let mut carry = false;
    for i in 0..n {
        let mut w = v[i + skip] >> bit;
        if bit > 0 && i + skip + 1 < v.len() {
            w |= v[i + skip + 1] << (64 - bit);
        }
        let (x, c1) = acc[i].overflowing_add(w);
        let (x, c2) = x.overflowing_add(carry as u64);
        acc[i] = x;
        carry = c1 || c2;
    }
    propagate(acc, n, carry);
}

fn propagate(acc: &mut Vec<u64>, mut i: usize, mut carry: bool) {
    while carry {
        if i == acc.len() {
            acc.push(0);
        }
        let (x, c) = acc[i].overflowing_add(1);
        acc[i] = x;
        carry = c;
        i += 1;
    }
}

/// `acc >= 2^b`.
fn at_least_pow2(acc: &[u64], b: usize) -> bool {
    let idx = b / 64;
    idx < acc.len() && ((acc[idx] >> (b % 64)) != 0 || acc[idx + 1..].iter().any(|&w| w != 0))
}

fn limbs_to_big(acc: &[u64]) -> BigUint {
    let bytes: Vec<u8> = acc.iter().flat_map(|w| w.to_le_bytes()).collect();
    BigUint::from_bytes_le(&bytes)
}

/// `c(t,j)`: the largest `c <= t` with `q_{t-c} + ... + q_{t-1} <= k - j`.
pub fn accumulated_splices(qs: &[usize], t: usize, room: usize) -> usize {
    let mut sum = 0usize;
    let mut c = 0usize;
    while c < t {
        sum += qs[t - 1 - c];
        if sum > room {
            break;
        }
        c += 1;
    }
    c
}

/// First entry where a vector disagrees with the closed form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Mismatch {
    pub step: usize,
    pub j: usize,
    #[serde(with = "crate::serde_big::decimal")]
    pub expected: BigUint,
    #[serde(with = "crate::serde_big::decimal")]
    pub actual: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClosedFormReport {
    pub entries_checked: u64,
    pub mismatch: Option<Mismatch>,
}

impl ClosedFormReport {
    pub fn ok(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// `floor(d' 2^(-(k+1-j)) alpha^c)` for all `c` up to `max_c`, evaluated
/// with shared powers.
struct ClosedForm<'a> {
    p: &'a ConstructionParams,
    /// `d (2^l - 2) 2^(lc)`
    num: Vec<BigUint>,
    /// `(2^l - 1)^(c+1)`
    den: Vec<BigUint>,
}

impl<'a> ClosedForm<'a> {
    fn new(p: &'a ConstructionParams) -> Self {
        let two_l = BigUint::one() << p.l();
        ClosedForm {
            p,
            num: vec![p.d() * (&two_l - 2u32)],
            den: vec![two_l - 1u32],
        }
    }

    fn entry(&mut self, j: usize, c: usize) -> BigUint {
        while self.num.len() <= c {
            let n = self.num.last().unwrap() << self.p.l();
            let d = self.den.last().unwrap() * &self.den[0];
            self.num.push(n);
            self.den.push(d);
        }
        &self.num[c] / (&self.den[c] << (self.p.k() + 1 - j))
    }
}

/// Checks every entry of every step against the closed form
/// `x(t)_j = floor(d' 2^(-(k+1-j)) alpha^c(t,j))` (and zero for `j <= s`).
pub fn verify_closed_form(trace: &RecursionTrace) -> ClosedFormReport {
    let p = &trace.params;
    let (k, s) = (p.k(), p.s());
    let qs = trace.qs();
    let mut cf = ClosedForm::new(p);
    let mut checked = 0u64;
    for (t, step) in trace.steps.iter().enumerate() {
        // vectors recorded after the q-history ends share it
        let t_eff = t.min(qs.len());
        for (j, actual) in step.x.entries().iter().enumerate() {
            let expected = if j <= s {
                BigUint::zero()
            } else {
                cf.entry(j, accumulated_splices(&qs, t_eff, k - j))
            };
            checked += 1;
            if expected != *actual {
                return ClosedFormReport {
                    entries_checked: checked,
                    mismatch: Some(Mismatch {
                        step: t,
                        j,
                        expected,
                        actual: actual.clone(),
                    }),
                };
            }
        }
    }
    ClosedFormReport {
        entries_checked: checked,
        mismatch: None,
    }
}

/// Outcome of running the recursion to its fixed point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizationReport {
    /// Steps until `x(t+1) = x(t)`.
    pub steps: usize,
    pub fixed_point: KdVector,
    /// `q` at the fixed point.
    pub q: usize,
    pub q_equals_l: bool,
    /// Entries of the fixed point agree with `floor(d' 2^(-(k+1-j)) alpha^floor((k-j)/q))`.
    pub fixed_point_formula_holds: bool,
    /// Every step satisfied `2^l |C*_r| < d`.
    pub star_bound_held: bool,
    /// First step whose vector had weight at least one.
    pub first_weight_one: Option<usize>,
}

/// Runs without the early stop until a fixed point, then checks the
/// limiting closed form and whether the final `q` equals `l`.
pub fn verify_stabilization(p: &ConstructionParams, max_steps: usize) -> Result<StabilizationReport> {
    let (k, s) = (p.k(), p.s());
    let mut x = initial_vector(p);
    let mut star_ok = true;
    let mut first_weight_one = None;
    for t in 0..=max_steps {
        if first_weight_one.is_none() && x.weight_scaled().is_at_least_one(k) {
            first_weight_one = Some(t);
        }
        let r = select_r(&x, p)?;
        star_ok &= star_fits(&x, r, p)?;
        let next = next_vector(&x, r, p)?;
        if next == x {
            let q = r - s;
            let mut cf = ClosedForm::new(p);
            let formula = x.entries().iter().enumerate().all(|(j, e)| {
                if j <= s {
                    e.is_zero()
                } else {
                    cf.entry(j, (k - j) / q) == *e
                }
            });
            return Ok(StabilizationReport {
                steps: t,
                fixed_point: x,
                q,
                q_equals_l: q == p.l(),
                fixed_point_formula_holds: formula,
                star_bound_held: star_ok,
                first_weight_one,
            });
        }
        x = next;
    }
    Err(Error::BudgetExhausted { used: max_steps as u64 })
}

/// Default cap on recursion steps.
pub const DEFAULT_MAX_STEPS: usize = 1 << 20;

/// Result of the search for the smallest successful `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinD {
    pub d_min: BigUint,
    /// Trace at `d_min` (successful).
    pub at_min: RecursionTrace,
    /// Trace at `d_min - 1` (failing); absent when `d_min = 1`.
    pub below_min: Option<RecursionTrace>,
    pub probes: usize,
}

/// Smallest `d` for which [`run`] reaches weight one, by binary search
/// (success is monotone in `d` on every tested `k`).
pub fn find_min_d(k: usize, max_steps: usize) -> Result<MinD> {
    let base = derive_params(k, None)?;
    let mut probes = 0usize;
    let mut succeeds = |d: &BigUint| -> Result<bool> {
        probes += 1;
        Ok(run_status(&base.with_d(d.clone())?, max_steps).is_success())
    };
    // find a successful upper end
    let mut hi = base.d().clone();
    while !succeeds(&hi)? {
        if hi.bits() > 4 * k as u64 + 64 {
            return Err(Error::Inconclusive(format!("no successful d found for k = {k}")));
        }
        hi <<= 1;
    }
    // invariant: lo fails (or is 0), hi succeeds
    let mut lo = BigUint::zero();
    while &hi - &lo > BigUint::one() {
        let mid: BigUint = (&lo + &hi) >> 1;
        if succeeds(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let at_min = run(&base.with_d(hi.clone())?, max_steps);
    let below_min = if lo.is_zero() {
        None
    } else {
        Some(run(&base.with_d(lo)?, max_steps))
    };
    Ok(MinD {
        d_min: hi,
        at_min,
        below_min,
        probes,
    })
}

/// `d e k / 2^(k+1)` as an interval, plus a non-rigorous decimal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Ratio {
    pub lower: String,
    pub upper: String,
    pub approx: String,
}

pub fn ratio_to_threshold(k: usize, d: &BigUint) -> Ratio {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    let e = bounds::e_enclosure(40);
    let scale = BigRational::new(BigInt::from(d.clone()) * BigInt::from(k), BigInt::one() << (k + 1));
    let lo = &scale * &e.lower;
    let hi = &scale * &e.upper;
    let approx = decimal_approx(&((&lo + &hi) / BigRational::from_integer(2.into())), 9);
    Ratio {
        lower: decimal_approx(&lo, 12),
        upper: decimal_approx(&hi, 12),
        approx,
    }
}

/// Truncated decimal expansion of a non-negative rational.
pub fn decimal_approx(q: &num_rational::BigRational, digits: usize) -> String {
    use num_bigint::BigInt;
    let scaled = (q * num_rational::BigRational::from_integer(num_traits::pow(BigInt::from(10), digits)))
        .floor()
        .to_integer();
    let s = scaled.to_string();
    let s = format!("{s:0>width$}", width = digits + 1);
    let (int, frac) = s.split_at(s.len() - digits);
    format!("{int}.{frac}")
}

/// Canonical JSON export of a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceJson {
    pub k: usize,
    #[serde(with = "crate::serde_big::decimal")]
    pub d: BigUint,
    /// Exact rational `numerator/denominator`.
    pub d_prime: String,
    pub l: usize,
    pub s: usize,
    pub alpha: String,
    pub steps: Vec<StepJson>,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepJson {
    pub t: usize,
    #[serde(with = "crate::serde_big::decimal_vec")]
    pub x: Vec<BigUint>,
    pub r: Option<usize>,
    pub q: Option<usize>,
}

impl RecursionTrace {
    pub fn to_json(&self) -> TraceJson {
        let p = &self.params;
        TraceJson {
            k: p.k(),
            d: p.d().clone(),
            d_prime: p.op.d_prime().to_string(),
            l: p.l(),
            s: p.s(),
            alpha: p.op.alpha().to_string(),
            steps: self
                .steps
                .iter()
                .enumerate()
                .map(|(t, st)| StepJson {
                    t,
                    x: st.x.entries().to_vec(),
                    r: st.r,
                    q: st.q(p.s()),
                })
                .collect(),
            status: self.status,
        }
    }

    /// Rebuilds a trace from JSON, re-deriving parameters from `k` and `d`.
    pub fn from_json(j: &TraceJson) -> Result<Self> {
        let params = derive_params(j.k, Some(j.d.clone()))?;
        if params.l() != j.l || params.s() != j.s {
            return Err(Error::InvalidParams("l or s disagree with k".into()));
        }
        let steps = j
            .steps
            .iter()
            .map(|st| {
                Ok(Step {
                    x: KdVector::new(j.k, j.d.clone(), st.x.clone())?,
                    r: st.r,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RecursionTrace {
            params,
            steps,
            status: j.status,
        })
    }
}

/// `k + sum of q`, an upper bound on the depth of the trace's plan.
pub fn depth_bound(trace: &RecursionTrace) -> u64 {
    trace.params.k() as u64 + trace.qs().iter().map(|&q| q as u64).sum::<u64>()
}

/// `d` as `u64` when it fits.
pub fn small_d(p: &ConstructionParams) -> Option<u64> {
    p.d().to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params() {
        let p = derive_params(256, Some(BigUint::from(1000u32))).unwrap();
        assert_eq!((p.l(), p.s()), (4, 8));
        assert_eq!(p.op().alpha().to_string(), "16/15");
        let p = derive_params(100, Some(BigUint::from(1000u32))).unwrap();
        assert_eq!((p.l(), p.s()), (3, 6));
        assert_eq!(p.op().alpha().to_string(), "8/7");
        assert_eq!(derive_params(15, None), Err(Error::KTooSmall(15)));
        assert_eq!(derive_params(16, None).unwrap().d(), &BigUint::from(207813u32));
    }

    #[test]
    fn initial_vector_shape() {
        let p = derive_params(16, None).unwrap();
        let x = initial_vector(&p);
        for j in 0..=p.s() {
            assert!(x.entry(j).is_zero());
        }
        assert_eq!(x.entry(16), &p.op().d_prime_shifted(1));
        for j in p.s() + 1..=16 {
            assert_eq!(x.entry(j), &p.op().closed_form_entry(j, 0).unwrap());
        }
    }

    #[test]
    fn k16_default_d_is_one_step() {
        let p = derive_params(16, None).unwrap();
        let t = run(&p, 100);
        assert_eq!(t.status, Status::ReachedWeightOne(0));
        assert_eq!(t.steps.len(), 1);
        assert!(verify_closed_form(&t).ok());
    }

    #[test]
    fn tiny_d_fails_immediately() {
        let p = derive_params(64, Some(BigUint::one())).unwrap();
        let t = run(&p, 100);
        assert_eq!(t.status, Status::ThresholdUnreachable(0));
        assert_eq!(
            select_r(&KdVector::zero(64, BigUint::one()), &p),
            Err(Error::ThresholdUnreachable)
        );
    }

    #[test]
    fn splice_history() {
        // q history 3, 2, 2 at t = 3: room 4 fits the last two
        assert_eq!(accumulated_splices(&[3, 2, 2], 3, 4), 2);
        assert_eq!(accumulated_splices(&[3, 2, 2], 3, 1), 0);
        assert_eq!(accumulated_splices(&[3, 2, 2], 3, 100), 3);
        assert_eq!(accumulated_splices(&[], 0, 5), 0);
    }

    #[test]
    fn status_only_run_agrees() {
        for k in [16usize, 17, 24, 33, 40] {
            let base = derive_params(k, None).unwrap();
            let top = base.d().clone();
            for i in 0..60u32 {
                let d = (&top * BigUint::from(20 + i)) / BigUint::from(100u32) + BigUint::from(i);
                let p = base.with_d(d).unwrap();
                assert_eq!(run_status(&p, 500), run(&p, 500).status, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn decimal_formatting() {
        use num_rational::BigRational;
        let q = BigRational::new(1.into(), 8.into());
        assert_eq!(decimal_approx(&q, 3), "0.125");
        let q = BigRational::new(17.into(), 4.into());
        assert_eq!(decimal_approx(&q, 2), "4.25");
    }
}

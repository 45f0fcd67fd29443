//! Exact (k,d)-vectors and the operators used to invert tree-composition steps.
//!
//! A (k,d)-vector caps the number of leaves at each distance `0..=k` below a
//! vertex. All arithmetic is exact: weights are kept as big integers scaled by
//! `2^k`, and the damped cap `d' = d(1 - 1/(2^l - 1))` is a big rational whose
//! floors are taken by integer division.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `(k+1)`-tuple of leaf-count caps with `|x| <= d`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KdVector {
    k: usize,
    d: BigUint,
    entries: Vec<BigUint>,
}

/// `weight(x) * 2^k`, always an exact non-negative integer.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScaledWeight(pub BigUint);

impl ScaledWeight {
    /// `2^k`, the scaled weight of a weight-one vector.
    pub fn one(k: usize) -> Self {
        ScaledWeight(BigUint::one() << k)
    }

    pub fn is_at_least_one(&self, k: usize) -> bool {
        self.0 >= BigUint::one() << k
    }

    pub fn is_exactly_one(&self, k: usize) -> bool {
        self.0 == BigUint::one() << k
    }
}

impl KdVector {
    pub fn new(k: usize, d: BigUint, entries: Vec<BigUint>) -> Result<Self> {
        if entries.len() != k + 1 {
            return Err(Error::InvalidParams(format!(
                "vector has {} entries, expected k+1 = {}",
                entries.len(),
                k + 1
            )));
        }
        let v = KdVector { k, d, entries };
        if v.sum() > v.d {
            return Err(Error::InvalidParams(format!("|x| = {} exceeds d = {}", v.sum(), v.d)));
        }
        Ok(v)
    }

    pub fn from_u64s(k: usize, d: u64, entries: &[u64]) -> Result<Self> {
        Self::new(k, BigUint::from(d), entries.iter().map(|&e| BigUint::from(e)).collect())
    }

    /// The all-zero vector `z`.
    pub fn zero(k: usize, d: BigUint) -> Self {
        KdVector {
            k,
            d,
            entries: vec![BigUint::zero(); k + 1],
        }
    }

    pub(crate) fn from_parts_unchecked(k: usize, d: BigUint, entries: Vec<BigUint>) -> Self {
        debug_assert_eq!(entries.len(), k + 1);
        let v = KdVector { k, d, entries };
        debug_assert!(v.is_valid(), "operator produced an invalid vector");
        v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> &BigUint {
        &self.d
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn entry(&self, j: usize) -> &BigUint {
        &self.entries[j]
    }

    pub fn into_entries(self) -> Vec<BigUint> {
        self.entries
    }

    /// `|x|`, the sum of all entries.
    pub fn sum(&self) -> BigUint {
        self.entries.iter().sum()
    }

    pub fn is_valid(&self) -> bool {
        self.entries.len() == self.k + 1 && self.sum() <= self.d
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// Componentwise `self <= other`.
    pub fn is_dominated_by(&self, other: &KdVector) -> bool {
        self.entries.len() == other.entries.len() && self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b)
    }

    /// Same entries, different occurrence cap. Fails if `|x|` exceeds the new cap.
    pub fn with_d(&self, d: BigUint) -> Result<Self> {
        Self::new(self.k, d, self.entries.clone())
    }

    /// Largest `j` with a nonzero entry.
    pub fn max_support(&self) -> Option<usize> {
        self.entries.iter().rposition(|e| !e.is_zero())
    }

    pub fn weight_scaled(&self) -> ScaledWeight {
        self.prefix_weight_unchecked(self.k)
    }

    pub fn prefix_weight_scaled(&self, r: usize) -> Result<ScaledWeight> {
        if r > self.k {
            return Err(Error::IndexOutOfRange { index: r, max: self.k });
        }
        Ok(self.prefix_weight_unchecked(r))
    }

    fn prefix_weight_unchecked(&self, r: usize) -> ScaledWeight {
        let mut acc = BigUint::zero();
        for (j, x) in self.entries[..=r].iter().enumerate() {
            if !x.is_zero() {
                acc += x << (self.k - j);
            }
        }
        ScaledWeight(acc)
    }

    /// The coordinatewise-dominated vector of weight exactly one.
    ///
    /// Greedy over `j = 0..=k`, keeping `min(x_j, remaining / 2^(k-j))` units.
    pub fn trim_to_weight_one(&self) -> Result<KdVector> {
        if !self.weight_scaled().is_at_least_one(self.k) {
            return Err(Error::WeightDeficient);
        }
        let mut remaining = BigUint::one() << self.k;
        let mut out = Vec::with_capacity(self.k + 1);
        for (j, x) in self.entries.iter().enumerate() {
            let unit_shift = self.k - j;
            let fit = &remaining >> unit_shift;
            let take = if *x < fit { x.clone() } else { fit };
            remaining -= &take << unit_shift;
            out.push(take);
        }
        debug_assert!(remaining.is_zero());
        Ok(KdVector::from_parts_unchecked(self.k, self.d.clone(), out))
    }
}

impl fmt::Debug for KdVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KdVector(k={}, d={}, ", self.k, self.d)?;
        f.debug_list()
            .entries(self.entries.iter().map(|e| e.to_string()))
            .finish()?;
        write!(f, ")")
    }
}

impl fmt::Display for KdVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Parameters of the operators `E`, `C_r` and `C*_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpParams {
    k: usize,
    d: BigUint,
    l: usize,
    s: usize,
    d_prime: BigRational,
    alpha: BigRational,
    /// `floor(d')`; `floor(d'/2^m)` is this shifted right by `m`.
    d_prime_floor: BigUint,
    /// `2^l - 1`
    splice_arity: BigUint,
}

impl OpParams {
    pub fn new(k: usize, d: BigUint, l: usize, s: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidParams(format!("l = {l} must be at least 2")));
        }
        if l > k {
            return Err(Error::InvalidParams(format!("l = {l} exceeds k = {k}")));
        }
        if s == 0 {
            return Err(Error::InvalidParams("s must be positive".into()));
        }
        if d.is_zero() {
            return Err(Error::InvalidParams("d must be positive".into()));
        }
        let two_l = BigUint::one() << l;
        let splice_arity = &two_l - 1u32;
        let d_prime_num = &d * (&two_l - 2u32);
        let d_prime_floor = &d_prime_num / &splice_arity;
        let d_prime = BigRational::new(d_prime_num.into(), splice_arity.clone().into());
        let alpha = BigRational::new(two_l.into(), splice_arity.clone().into());
        Ok(OpParams {
            k,
            d,
            l,
            s,
            d_prime,
            alpha,
            d_prime_floor,
            splice_arity,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn d(&self) -> &BigUint {
        &self.d
    }
    pub fn l(&self) -> usize {
        self.l
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn d_prime(&self) -> &BigRational {
        &self.d_prime
    }
    pub fn alpha(&self) -> &BigRational {
        &self.alpha
    }

    /// `floor(d' / 2^m)`.
    pub fn d_prime_shifted(&self, m: usize) -> BigUint {
        &self.d_prime_floor >> m
    }

    fn check(&self, x: &KdVector) {
        debug_assert_eq!(x.k, self.k, "vector and parameters disagree on k");
        debug_assert_eq!(x.d, self.d, "vector and parameters disagree on d");
    }

    /// `E(x) = (floor(x_1/2), ..., floor(x_k/2), floor(d'/2))`.
    pub fn op_e(&self, x: &KdVector) -> KdVector {
        self.op_e_pow(x, 1)
    }

    /// `E^m(x)` in one pass: entries that survive are shifted left by `m` and
    /// halved `m` times; fresh entries at position `j` are `floor(d'/2^(k+1-j))`.
    pub fn op_e_pow(&self, x: &KdVector, m: usize) -> KdVector {
        self.check(x);
        let k = self.k;
        let entries = (0..=k)
            .map(|j| {
                if j + m <= k {
                    &x.entries[j + m] >> m
                } else {
                    self.d_prime_shifted(k + 1 - j)
                }
            })
            .collect();
        KdVector::from_parts_unchecked(k, self.d.clone(), entries)
    }

    fn check_r(&self, r: usize) -> Result<()> {
        if r < self.l || r > self.k {
            return Err(Error::IndexOutOfRange { index: r, max: self.k });
        }
        Ok(())
    }

    /// `C_r(x)`: `r+1-l` zeros, then `floor(x_j/(2^l-1))` for `j = r+1..=k`,
    /// then `floor(d'/2^(l-j))` for `j = 0..l`.
    pub fn op_c(&self, x: &KdVector, r: usize) -> Result<KdVector> {
        self.check_r(r)?;
        self.check(x);
        let mut entries = Vec::with_capacity(self.k + 1);
        entries.resize(r + 1 - self.l, BigUint::zero());
        entries.extend(x.entries[r + 1..].iter().map(|e| e / &self.splice_arity));
        entries.extend((0..self.l).map(|j| self.d_prime_shifted(self.l - j)));
        Ok(KdVector::from_parts_unchecked(self.k, self.d.clone(), entries))
    }

    /// `C*_r(x)`: `x_l, ..., x_r` followed by `k-r+l` zeros.
    pub fn op_c_star(&self, x: &KdVector, r: usize) -> Result<KdVector> {
        self.check_r(r)?;
        self.check(x);
        let mut entries: Vec<BigUint> = x.entries[self.l..=r].to_vec();
        entries.resize(self.k + 1, BigUint::zero());
        Ok(KdVector::from_parts_unchecked(self.k, self.d.clone(), entries))
    }

    /// `floor((d' / 2^(k+1-j)) * alpha^c)` in exact arithmetic, for `s < j <= k`.
    pub fn closed_form_entry(&self, j: usize, c: usize) -> Result<BigUint> {
        if j <= self.s || j > self.k {
            return Err(Error::IndexOutOfRange { index: j, max: self.k });
        }
        // d' * alpha^c = d (2^l - 2) 2^(lc) / (2^l - 1)^(c+1)
        let two_l = BigUint::one() << self.l;
        let num = (&self.d * (&two_l - 2u32)) << (self.l * c);
        let den = num_traits::pow(self.splice_arity.clone(), c + 1) << (self.k + 1 - j);
        Ok(num.div_floor(&den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(k: usize, d: u64, e: &[u64]) -> KdVector {
        KdVector::from_u64s(k, d, e).unwrap()
    }

    fn p(k: usize, d: u64, l: usize) -> OpParams {
        OpParams::new(k, BigUint::from(d), l, 2 * l).unwrap()
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn weights() {
        let mut e = [0u64; 8];
        e[0] = 1;
        assert_eq!(v(7, 18, &e).weight_scaled().0, big(128));
        let mut e = [0u64; 8];
        e[7] = 1;
        assert_eq!(v(7, 18, &e).weight_scaled().0, big(1));
        assert_eq!(v(3, 3, &[0, 1, 0, 2]).weight_scaled().0, big(6));
    }

    #[test]
    fn prefix_weights() {
        let x = v(3, 3, &[0, 1, 0, 2]);
        assert_eq!(x.prefix_weight_scaled(1).unwrap().0, big(4));
        assert_eq!(x.prefix_weight_scaled(3).unwrap(), x.weight_scaled());
        assert_eq!(v(3, 2, &[0, 0, 0, 2]).prefix_weight_scaled(2).unwrap().0, big(0));
        assert!(matches!(
            x.prefix_weight_scaled(4),
            Err(Error::IndexOutOfRange { index: 4, max: 3 })
        ));
    }

    #[test]
    fn rejects_oversized_vectors() {
        assert!(KdVector::from_u64s(3, 2, &[1, 1, 1, 0]).is_err());
        assert!(KdVector::from_u64s(3, 5, &[1, 1, 1]).is_err());
    }

    #[test]
    fn op_e_examples() {
        let p = p(7, 18, 2);
        assert_eq!(p.d_prime_shifted(0), big(12));
        let z = KdVector::zero(7, big(18));
        assert_eq!(p.op_e(&z), v(7, 18, &[0, 0, 0, 0, 0, 0, 0, 6]));
        let x = v(7, 18, &[0, 0, 0, 3, 5, 0, 0, 6]);
        assert_eq!(p.op_e(&x), v(7, 18, &[0, 0, 1, 2, 0, 0, 3, 6]));
    }

    #[test]
    fn op_e_pow_matches_iteration() {
        let p = p(7, 18, 2);
        let x = v(7, 18, &[0, 1, 0, 3, 5, 0, 0, 6]);
        let mut it = x.clone();
        for m in 0..=9 {
            assert_eq!(p.op_e_pow(&x, m), it, "m = {m}");
            it = p.op_e(&it);
        }
    }

    #[test]
    fn op_c_examples() {
        let p = p(7, 18, 2);
        let x = v(7, 18, &[0, 0, 0, 0, 0, 4, 6, 8]);
        assert_eq!(p.op_c(&x, 4).unwrap(), v(7, 18, &[0, 0, 0, 1, 2, 2, 3, 6]));
        assert_eq!(p.op_c(&x, 7).unwrap(), v(7, 18, &[0, 0, 0, 0, 0, 0, 3, 6]));
        assert!(p.op_c(&x, 1).is_err());
        assert!(p.op_c(&x, 8).is_err());
    }

    #[test]
    fn op_c_star_examples() {
        let p = p(7, 18, 2);
        let x = v(7, 21, &[0, 0, 1, 0, 2, 4, 6, 8]);
        let p21 = OpParams::new(7, big(21), 2, 4).unwrap();
        assert_eq!(p21.op_c_star(&x, 4).unwrap(), v(7, 21, &[1, 0, 2, 0, 0, 0, 0, 0]));
        let y = v(7, 18, &[0, 0, 5, 1, 2, 0, 0, 0]);
        assert_eq!(p.op_c_star(&y, 2).unwrap(), v(7, 18, &[5, 0, 0, 0, 0, 0, 0, 0]));
    }

    #[test]
    fn trim_examples() {
        let x = v(3, 4, &[0, 1, 1, 2]);
        assert_eq!(x.trim_to_weight_one().unwrap(), x);
        assert_eq!(
            v(3, 2, &[1, 1, 0, 0]).trim_to_weight_one().unwrap(),
            v(3, 2, &[1, 0, 0, 0])
        );
        assert_eq!(v(3, 4, &[0, 1, 0, 3]).trim_to_weight_one(), Err(Error::WeightDeficient));
    }

    #[test]
    fn closed_form_examples() {
        let p = p(7, 18, 2);
        assert_eq!(p.closed_form_entry(7, 0).unwrap(), big(6));
        assert!(p.closed_form_entry(4, 0).is_err());
        assert!(p.closed_form_entry(8, 0).is_err());
        // alpha = 4/3, d' = 12: floor(12/2^3 * 16/9) = floor(8/3) = 2
        assert_eq!(p.closed_form_entry(5, 2).unwrap(), big(2));
    }

    #[test]
    fn params_validation() {
        assert!(OpParams::new(7, big(18), 1, 2).is_err());
        assert!(OpParams::new(7, big(0), 2, 4).is_err());
        let p = p(7, 18, 3);
        assert_eq!(p.alpha(), &BigRational::new(8.into(), 7.into()));
        assert!(p.d_prime() < &BigRational::from_integer(18.into()));
    }
}

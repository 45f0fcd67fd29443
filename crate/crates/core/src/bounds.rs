//! Lower bounds and threshold values with rigorously rounded constants.
//!
//! Every floor of an irrational quantity is extracted from a two-sided
//! enclosure that is refined until both ends have the same floor. Every
//! certificate is decided on a one-sided lower bound, so a `true` answer is
//! never an artifact of rounding.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed rational interval known to contain a real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigorousReal {
    pub lower: BigRational,
    pub upper: BigRational,
    /// Refinement level the enclosure was computed at.
    pub precision: u32,
}

impl RigorousReal {
    pub fn width(&self) -> BigRational {
        &self.upper - &self.lower
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        &self.lower <= q && q <= &self.upper
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lower + &self.upper) / BigRational::from_integer(BigInt::from(2))
    }

    /// The common floor of both ends, if they agree.
    pub fn floor(&self) -> Option<BigInt> {
        let lo = self.lower.floor().to_integer();
        let hi = self.upper.floor().to_integer();
        (lo == hi).then_some(lo)
    }
}

/// Enclosure of `e` from the first `n+1` Taylor terms; the tail is below
/// `2/(n+1)!`.
pub fn e_enclosure(n: u32) -> RigorousReal {
    let n = n.max(1);
    // sum_{i<=n} n!/i!
    let mut num = BigUint::one();
    let mut fact = BigUint::one();
    for i in 1..=n {
        num = num * i + 1u32;
        fact *= i;
    }
    let lower = BigRational::new(num.clone().into(), fact.clone().into());
    let next_fact = &fact * (n + 1);
    let upper = BigRational::new((num * (n + 1) + 2u32).into(), next_fact.into());
    RigorousReal {
        lower,
        upper,
        precision: n,
    }
}

fn rat(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

fn floor_nonneg(q: &BigRational) -> BigUint {
    q.floor().to_integer().to_biguint().expect("non-negative")
}

/// Taylor terms needed before the enclosure of `e` is narrower than `2^-bits`.
fn terms_for_bits(bits: u64) -> u32 {
    let mut n = 2u32;
    let mut log_fact = 0f64;
    for i in 2..=u32::MAX {
        log_fact += (i as f64).log2();
        if log_fact > bits as f64 + 4.0 {
            n = i;
            break;
        }
    }
    n
}

/// `floor(q / e)` for a non-negative rational `q`.
pub fn floor_div_e_rational(q: &BigRational) -> BigUint {
    if q.is_zero() {
        return BigUint::zero();
    }
    assert!(q.is_positive(), "floor_div_e_rational needs q >= 0");
    let bits = q.numer().bits().saturating_sub(q.denom().bits()) + 16;
    let mut n = terms_for_bits(bits);
    loop {
        let e = e_enclosure(n);
        let hi = floor_nonneg(&(q / &e.lower));
        let lo = floor_nonneg(&(q / &e.upper));
        if hi == lo {
            return lo;
        }
        n *= 2;
    }
}

/// `floor(n / e)`.
pub fn floor_div_e(n: &BigUint) -> BigUint {
    floor_div_e_rational(&rat(n.clone()))
}

/// `floor(2^k / e) - 1`: the neighborhood threshold from the symmetric local lemma.
pub fn lll_l(k: usize) -> Result<BigUint> {
    if k < 3 {
        return Err(Error::Domain(format!("need k >= 3, got {k}")));
    }
    Ok(floor_div_e(&(BigUint::one() << k)) - 1u32)
}

/// `floor(2^k / (e k))`.
pub fn kst_f(k: usize) -> Result<BigUint> {
    if k < 3 {
        return Err(Error::Domain(format!("need k >= 3, got {k}")));
    }
    Ok(floor_div_e_rational(&BigRational::new(
        BigInt::one() << k,
        BigInt::from(k),
    )))
}

/// `floor(2^(k+1) / (e k)) - 1`: the occurrence bound below which every
/// formula is satisfiable.
pub fn bks_f(k: usize) -> Result<BigUint> {
    if k < 3 {
        return Err(Error::Domain(format!("need k >= 3, got {k}")));
    }
    let v = floor_div_e_rational(&BigRational::new(BigInt::one() << (k + 1), BigInt::from(k)));
    // for k >= 3 the floor is at least 1
    Ok(v - 1u32)
}

/// Enclosure of `sqrt(k)` with `bits` fractional bits.
fn sqrt_enclosure(k: usize, bits: u32) -> (BigRational, BigRational) {
    let scaled = BigUint::from(k) << (2 * bits);
    let s = scaled.sqrt();
    let den = BigInt::one() << bits;
    if &s * &s == scaled {
        let q = BigRational::new(s.into(), den);
        return (q.clone(), q);
    }
    (
        BigRational::new(s.clone().into(), den.clone()),
        BigRational::new((s + 1u32).into(), den),
    )
}

/// `floor(2^(k+1)/(e k) + 100 * 2^(k+1) / k^(3/2))`, the occurrence cap the
/// large-k construction starts from.
pub fn construction_d(k: usize) -> Result<BigUint> {
    if k == 0 {
        return Err(Error::Domain("need k >= 1".into()));
    }
    let top = rat(BigInt::one() << (k + 1));
    let kk = rat(BigInt::from(k));
    let mut bits = (k as u32) + 32;
    let mut n = terms_for_bits(bits as u64);
    loop {
        let e = e_enclosure(n);
        let (s_lo, s_hi) = sqrt_enclosure(k, bits);
        let hundred = rat(BigInt::from(100));
        let lo = &top / (&e.upper * &kk) + &hundred * &top / (&kk * &s_hi);
        let hi = &top / (&e.lower * &kk) + &hundred * &top / (&kk * &s_lo);
        let (flo, fhi) = (floor_nonneg(&lo), floor_nonneg(&hi));
        if flo == fhi {
            return Ok(flo);
        }
        bits *= 2;
        n *= 2;
    }
}

/// All threshold values for one `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundsReport {
    pub k: usize,
    #[serde(with = "crate::serde_big::decimal")]
    pub lll_l: BigUint,
    #[serde(with = "crate::serde_big::decimal")]
    pub kst_f: BigUint,
    #[serde(with = "crate::serde_big::decimal")]
    pub bks_f: BigUint,
    #[serde(with = "crate::serde_big::decimal")]
    pub construction_d: BigUint,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f2_exact: Option<u64>,
}

pub fn bounds_report(k: usize) -> Result<BoundsReport> {
    Ok(BoundsReport {
        k,
        lll_l: lll_l(k)?,
        kst_f: kst_f(k)?,
        bks_f: bks_f(k)?,
        construction_d: construction_d(k)?,
        f2_exact: None,
    })
}

/// Fixed-point value `v / 2^bits` bounds of
/// `x^(1/k) * ((1-x)^ceil(d/2) + (1-x)^floor(d/2))`.
struct Fixed {
    bits: u64,
}

impl Fixed {
    /// `floor(q * 2^bits)` or its ceiling.
    fn scale(&self, q: &BigRational, up: bool) -> BigUint {
        let num = q.numer().to_biguint().expect("non-negative") << self.bits;
        let den = q.denom().to_biguint().expect("positive");
        let (quo, rem) = num.div_rem(&den);
        if up && !rem.is_zero() {
            quo + 1u32
        } else {
            quo
        }
    }

    fn mul(&self, a: &BigUint, b: &BigUint, up: bool) -> BigUint {
        let p = a * b;
        let q = &p >> self.bits;
        if up && (&q << self.bits) != p {
            q + 1u32
        } else {
            q
        }
    }

    fn pow(&self, base: &BigUint, mut e: u64, up: bool) -> BigUint {
        let mut acc = BigUint::one() << self.bits;
        let mut b = base.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b, up);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b, up);
            }
        }
        acc
    }

    /// Bound on `q^(1/k)` scaled by `2^bits`.
    fn root(&self, q: &BigRational, k: u32, up: bool) -> BigUint {
        let num = q.numer().to_biguint().expect("non-negative") << (self.bits * k as u64);
        let den = q.denom().to_biguint().expect("positive");
        let (quo, rem) = num.div_rem(&den);
        let r = quo.nth_root(k);
        if up && !(rem.is_zero() && num_traits::pow(r.clone(), k as usize) == quo) {
            r + 1u32
        } else {
            r
        }
    }

    fn lhs(&self, k: u32, d: u64, x: &BigRational, up: bool) -> BigUint {
        let y = rat(1) - x;
        let yb = self.scale(&y, up);
        let hi = self.pow(&yb, d.div_ceil(2), up);
        let lo = self.pow(&yb, d / 2, up);
        let root = self.root(x, k, up);
        self.mul(&root, &(hi + lo), up)
    }
}

fn check_cert_domain(k: usize, x: &BigRational) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("need k >= 1".into()));
    }
    if !(x.is_positive() && x < &rat(1)) {
        return Err(Error::Domain(format!("x = {x} is not in (0,1)")));
    }
    Ok(())
}

/// Rigorous enclosure of `x^(1/k) * ((1-x)^ceil(d/2) + (1-x)^floor(d/2))` at
/// `bits` fractional bits.
pub fn bks_lhs_enclosure(k: usize, d: u64, x: &BigRational, bits: u64) -> Result<RigorousReal> {
    check_cert_domain(k, x)?;
    let k32 = u32::try_from(k).map_err(|_| Error::Domain("k too large".into()))?;
    let f = Fixed { bits };
    let den = BigInt::one() << bits;
    let lo = f.lhs(k32, d, x, false);
    let hi = f.lhs(k32, d, x, true);
    Ok(RigorousReal {
        lower: BigRational::new(lo.into(), den.clone()),
        upper: BigRational::new(hi.into(), den),
        precision: bits as u32,
    })
}

const MAX_CERT_BITS: u64 = 1 << 14;

/// True only when a rigorous lower bound of the left-hand side is at least 1.
/// `false` means "not certified".
pub fn bks_certificate_check(k: usize, d: u64, x: &BigRational) -> Result<bool> {
    check_cert_domain(k, x)?;
    let mut bits = 64u64;
    while bits <= MAX_CERT_BITS {
        let enc = bks_lhs_enclosure(k, d, x, bits)?;
        if enc.lower >= rat(1) {
            return Ok(true);
        }
        if enc.upper < rat(1) {
            return Ok(false);
        }
        bits *= 2;
    }
    Ok(false)
}

/// `e / 2^k` rounded to a rational with about `k + 64` significant bits.
pub fn e_over_pow2(k: usize) -> BigRational {
    let e = e_enclosure(terms_for_bits(k as u64 + 64));
    e.midpoint() / rat(BigInt::one() << k)
}

/// A certified lower bound on the occurrence threshold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub k: usize,
    pub d: u64,
    /// The `x` that passed, as `numerator/denominator`.
    pub x: String,
    /// Whether `x` is the approximation of `e/2^k` or came from the grid.
    pub from_grid: bool,
}

/// Certifies `d = bks_f(k)` with `x ~ e/2^k`, falling back to the grid
/// `i/1025`, `i = 1..=1024`.
pub fn certify_f_lower(k: usize) -> Result<Certificate> {
    if k < 5 {
        return Err(Error::Domain(format!("certificates need k >= 5, got {k}")));
    }
    let d = bks_f(k)?
        .to_u64()
        .ok_or_else(|| Error::Domain("d does not fit in 64 bits".into()))?;
    let x = e_over_pow2(k);
    if bks_certificate_check(k, d, &x)? {
        return Ok(Certificate {
            k,
            d,
            x: x.to_string(),
            from_grid: false,
        });
    }
    for i in 1..=1024i64 {
        let x = BigRational::new(BigInt::from(i), BigInt::from(1025));
        if bks_certificate_check(k, d, &x)? {
            return Ok(Certificate {
                k,
                d,
                x: x.to_string(),
                from_grid: true,
            });
        }
    }
    Err(Error::CertificateNotFound(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_enclosure_contains_e() {
        let e = e_enclosure(20);
        let lo = e.lower.to_f64().unwrap();
        let hi = e.upper.to_f64().unwrap();
        assert!(lo <= std::f64::consts::E && std::f64::consts::E <= hi);
        assert!(e.width() < BigRational::new(1.into(), BigInt::from(10u64.pow(15))));
    }

    #[test]
    fn floors() {
        assert_eq!(floor_div_e(&BigUint::from(128u32)), BigUint::from(47u32));
        assert_eq!(floor_div_e(&BigUint::from(256u32)), BigUint::from(94u32));
        assert_eq!(floor_div_e(&BigUint::zero()), BigUint::zero());
        assert_eq!(floor_div_e(&BigUint::from(2u32)), BigUint::zero());
        assert_eq!(floor_div_e(&BigUint::from(3u32)), BigUint::one());
    }

    #[test]
    fn small_table() {
        let r = bounds_report(7).unwrap();
        assert_eq!(r.lll_l, BigUint::from(46u32));
        assert_eq!(r.kst_f, BigUint::from(6u32));
        assert_eq!(r.bks_f, BigUint::from(12u32));
        assert_eq!(bks_f(5).unwrap(), BigUint::from(3u32));
        assert!(lll_l(2).is_err());
    }

    #[test]
    fn construction_d_k16() {
        // 2^17/(16e) = 3013.67..., 100 * 2^17 / 64 = 204800
        assert_eq!(construction_d(16).unwrap(), BigUint::from(207813u32));
    }

    #[test]
    fn certificates() {
        assert!(bks_certificate_check(7, 12, &e_over_pow2(7)).unwrap());
        assert!(bks_certificate_check(5, 3, &e_over_pow2(5)).unwrap());
        assert!(!bks_certificate_check(7, 1 << 9, &e_over_pow2(7)).unwrap());
        assert!(bks_certificate_check(7, 12, &rat(1)).is_err());
        let c = certify_f_lower(10).unwrap();
        assert_eq!(c.d, 74);
        assert!(!c.from_grid);
    }

    #[test]
    fn enclosure_is_ordered() {
        let x = e_over_pow2(7);
        let a = bks_lhs_enclosure(7, 12, &x, 64).unwrap();
        let b = bks_lhs_enclosure(7, 12, &x, 700).unwrap();
        // both contain the true value, so they overlap
        assert!(a.lower <= b.upper && b.lower <= a.upper);
        assert!(b.lower <= b.upper);
    }
}

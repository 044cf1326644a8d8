//! Exact scalars: unbounded rationals extended with the two infinities.
//!
//! Times, periods and slopes are always finite and use [`Rational`]; function
//! values may be infinite and use [`ExtendedRational`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(s.to_string());
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
    let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
    if !d.is_positive() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

/// Largest integer not above `r`.
pub fn floor_int(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

/// Smallest integer not below `r`.
pub fn ceil_int(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtendedRational {
    MinusInf,
    Finite(Rational),
    PlusInf,
}

pub use ExtendedRational::{MinusInf, PlusInf};

impl ExtendedRational {
    pub fn zero() -> Self {
        ExtendedRational::Finite(Rational::zero())
    }

    pub fn from_int(n: i64) -> Self {
        ExtendedRational::Finite(int(n))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        ExtendedRational::Finite(rat(n, d))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedRational::Finite(_))
    }

    pub fn is_plus_inf(&self) -> bool {
        matches!(self, PlusInf)
    }

    pub fn is_minus_inf(&self) -> bool {
        matches!(self, MinusInf)
    }

    pub fn is_infinite(&self) -> bool {
        !self.is_finite()
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtendedRational::Finite(r) => Some(r),
            _ => None,
        }
    }

    /// Finite part; panics on an infinity. Use only where finiteness was checked.
    pub fn expect_finite(&self) -> &Rational {
        self.finite().expect("finite value required")
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        use ExtendedRational::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
            (PlusInf, MinusInf) | (MinusInf, PlusInf) => Err(Error::InfinityClash),
            (PlusInf, _) | (_, PlusInf) => Ok(PlusInf),
            _ => Ok(MinusInf),
        }
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other)
    }

    /// Adds a finite amount; infinities absorb it.
    pub fn add_rat(&self, r: &Rational) -> Self {
        match self {
            ExtendedRational::Finite(a) => ExtendedRational::Finite(a + r),
            inf => inf.clone(),
        }
    }

    /// Multiplies by a finite factor. `inf * 0` is rejected.
    pub fn checked_mul_rat(&self, r: &Rational) -> Result<Self> {
        match self {
            ExtendedRational::Finite(a) => Ok(ExtendedRational::Finite(a * r)),
            inf if r.is_zero() => Err(Error::InvalidArgument(format!("{inf} * 0"))),
            PlusInf if r.is_positive() => Ok(PlusInf),
            PlusInf => Ok(MinusInf),
            _ if r.is_positive() => Ok(MinusInf),
            _ => Ok(PlusInf),
        }
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        match other {
            ExtendedRational::Finite(b) if b.is_zero() => {
                Err(Error::InvalidArgument("division by zero".into()))
            }
            ExtendedRational::Finite(b) => self.checked_mul_rat(&b.recip()),
            _ => match self {
                ExtendedRational::Finite(_) => Ok(ExtendedRational::zero()),
                _ => Err(Error::InvalidArgument("infinity divided by infinity".into())),
            },
        }
    }

    pub fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

impl From<Rational> for ExtendedRational {
    fn from(r: Rational) -> Self {
        ExtendedRational::Finite(r)
    }
}

impl From<&Rational> for ExtendedRational {
    fn from(r: &Rational) -> Self {
        ExtendedRational::Finite(r.clone())
    }
}

impl From<i64> for ExtendedRational {
    fn from(n: i64) -> Self {
        ExtendedRational::from_int(n)
    }
}

impl std::ops::Neg for &ExtendedRational {
    type Output = ExtendedRational;
    fn neg(self) -> ExtendedRational {
        match self {
            ExtendedRational::Finite(a) => ExtendedRational::Finite(-a),
            PlusInf => MinusInf,
            MinusInf => PlusInf,
        }
    }
}

impl std::ops::Neg for ExtendedRational {
    type Output = ExtendedRational;
    fn neg(self) -> ExtendedRational {
        -&self
    }
}

/// Panics on `+inf + -inf`; call [`ExtendedRational::checked_add`] where that can occur.
impl std::ops::Add for &ExtendedRational {
    type Output = ExtendedRational;
    fn add(self, rhs: &ExtendedRational) -> ExtendedRational {
        self.checked_add(rhs).expect("+inf + -inf")
    }
}

impl std::ops::Add for ExtendedRational {
    type Output = ExtendedRational;
    fn add(self, rhs: ExtendedRational) -> ExtendedRational {
        &self + &rhs
    }
}

impl std::ops::Sub for &ExtendedRational {
    type Output = ExtendedRational;
    fn sub(self, rhs: &ExtendedRational) -> ExtendedRational {
        self.checked_sub(rhs).expect("+inf - +inf")
    }
}

impl PartialEq<Rational> for ExtendedRational {
    fn eq(&self, other: &Rational) -> bool {
        self.finite() == Some(other)
    }
}

impl PartialOrd<Rational> for ExtendedRational {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        Some(match self {
            MinusInf => Ordering::Less,
            PlusInf => Ordering::Greater,
            ExtendedRational::Finite(a) => a.cmp(other),
        })
    }
}

impl fmt::Display for ExtendedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedRational::Finite(r) => f.write_str(&format_rational(r)),
            PlusInf => f.write_str("+inf"),
            MinusInf => f.write_str("-inf"),
        }
    }
}

impl FromStr for ExtendedRational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+inf" | "inf" => Ok(PlusInf),
            "-inf" => Ok(MinusInf),
            other => parse_rational(other).map(ExtendedRational::Finite),
        }
    }
}

/// Smallest positive rational that is an integer multiple of both `a` and `b`.
pub fn rat_lcm(a: &Rational, b: &Rational) -> Result<Rational> {
    if !a.is_positive() || !b.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "lcm needs positive operands, got {} and {}",
            format_rational(a),
            format_rational(b)
        )));
    }
    let (p, q) = (a.numer(), a.denom());
    let (r, s) = (b.numer(), b.denom());
    let num = (p * s).lcm(&(r * q));
    Ok(Rational::new(num, q * s))
}

pub fn ext_rat_lcm(a: &ExtendedRational, b: &ExtendedRational) -> Result<Rational> {
    match (a.finite(), b.finite()) {
        (Some(a), Some(b)) => rat_lcm(a, b),
        _ => Err(Error::InvalidArgument("lcm of an infinite value".into())),
    }
}

const PRIME_TABLE_LEN: usize = 1000;

fn prime_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // the 1000th prime is 7919
        let limit = 7920usize;
        let mut sieve = vec![true; limit];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i < limit {
            if sieve[i] {
                let mut j = i * i;
                while j < limit {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        let primes: Vec<u64> = (0..limit).filter(|&k| sieve[k]).map(|k| k as u64).collect();
        debug_assert_eq!(primes.len(), PRIME_TABLE_LEN);
        primes
    })
}

/// Prime factors of `n` with multiplicity, in nondecreasing order.
pub fn factorize(n: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot factorize 0".into()));
    }
    let mut rest = n;
    let mut out = Vec::new();
    for &p in prime_table() {
        if p * p > rest {
            break;
        }
        while rest % p == 0 {
            out.push(p);
            rest /= p;
        }
    }
    // beyond the table, plain odd trial division
    let mut p = prime_table()[PRIME_TABLE_LEN - 1] + 2;
    while p.saturating_mul(p) <= rest {
        while rest % p == 0 {
            out.push(p);
            rest /= p;
        }
        p += 2;
    }
    if rest > 1 {
        out.push(rest);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> ExtendedRational {
        s.parse().unwrap()
    }

    #[test]
    fn normalizes_on_construction() {
        assert_eq!(e("2/4"), e("1/2"));
        assert_eq!(e("-6/3").to_string(), "-2");
        assert!(e("0/5") == ExtendedRational::zero());
    }

    #[test]
    fn infinities_absorb_finite_values() {
        assert_eq!(e("+inf").checked_add(&e("3")).unwrap(), PlusInf);
        assert_eq!(e("-inf").checked_add(&e("-7/2")).unwrap(), MinusInf);
        assert_eq!(e("+inf").checked_add(&e("+inf")).unwrap(), PlusInf);
        assert_eq!(e("+inf").checked_add(&e("-inf")), Err(Error::InfinityClash));
        assert_eq!(e("-inf").checked_sub(&e("-inf")), Err(Error::InfinityClash));
    }

    #[test]
    fn ordering_places_infinities_at_the_ends() {
        let mut v = vec![e("+inf"), e("1/3"), e("-inf"), e("-5"), e("0")];
        v.sort();
        let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert_eq!(s, ["-inf", "-5", "0", "1/3", "+inf"]);
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "7", "-7", "22/7", "-1/1000000000000000000000", "+inf", "-inf"] {
            assert_eq!(e(s).to_string(), s);
        }
        assert!("1/0".parse::<ExtendedRational>().is_err());
        assert!("abc".parse::<ExtendedRational>().is_err());
        assert!("1/-2".parse::<ExtendedRational>().is_err());
    }

    #[test]
    fn lcm_examples() {
        assert_eq!(rat_lcm(&int(1), &int(2)).unwrap(), int(2));
        assert_eq!(rat_lcm(&int(3), &int(3)).unwrap(), int(3));
        assert_eq!(rat_lcm(&rat(1, 2), &rat(1, 3)).unwrap(), int(1));
        assert!(rat_lcm(&int(0), &int(3)).is_err());
        assert!(rat_lcm(&int(-1), &int(3)).is_err());
    }

    #[test]
    fn lcm_matches_multiple_scan() {
        // smallest k * a that is also a multiple of b, by scanning k
        for (a, b) in [(rat(1, 2), rat(1, 3)), (rat(3, 4), rat(5, 6)), (rat(7, 3), int(2))] {
            let mut k = 1i64;
            let scanned = loop {
                let m = &a * int(k);
                if (&m / &b).is_integer() {
                    break m;
                }
                k += 1;
            };
            assert_eq!(rat_lcm(&a, &b).unwrap(), scanned);
        }
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(6).unwrap(), vec![2, 3]);
        assert_eq!(factorize(1).unwrap(), Vec::<u64>::new());
        assert_eq!(factorize(8).unwrap(), vec![2, 2, 2]);
        assert!(factorize(0).is_err());
        assert_eq!(factorize(7919 * 7919).unwrap(), vec![7919, 7919]);
        assert_eq!(factorize(104_729 * 2).unwrap(), vec![2, 104_729]);
        assert_eq!(prime_table().len(), PRIME_TABLE_LEN);
    }
}

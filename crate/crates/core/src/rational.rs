//! Exact rationals and unions of rational intervals.
//!
//! Gate decisions compare `2k/m` against interval endpoints, so everything on
//! that path stays in exact arithmetic. Endpoints enter the program as
//! `i64` numerator/denominator pairs (the JSON wire form) and may grow into
//! big integers once `1/t` offsets are applied.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("rational with zero denominator".into()));
        }
        Ok(Rat(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_integer(v: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(v)))
    }

    /// `1/t` for `t >= 1`.
    pub fn recip(t: u64) -> Self {
        Rat(BigRational::new(BigInt::one(), BigInt::from(t)))
    }

    /// `k/m` for the sample-mean comparisons.
    pub fn ratio(k: u64, m: u64) -> Self {
        Rat(BigRational::new(BigInt::from(k), BigInt::from(m)))
    }

    /// Largest rational with denominator `den` that does not exceed `x`.
    pub fn floor_f64(x: f64, den: u64) -> Result<Self> {
        if !x.is_finite() || den == 0 {
            return Err(Error::Domain(format!("cannot rationalise {x} over {den}")));
        }
        let scaled = (x * den as f64).floor();
        if scaled.abs() > 9.0e15 {
            return Err(Error::Domain(format!("{x} too large to rationalise")));
        }
        Ok(Rat(BigRational::new(
            BigInt::from(scaled as i64),
            BigInt::from(den),
        )))
    }

    /// Parses `p/q`, a decimal such as `0.05`, or an integer.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty rational".into()));
        }
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
            let q: i64 = q
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
            return Rat::new(p, q);
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Parse(format!("bad rational {s:?}")));
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(Error::Parse(format!("bad rational {s:?}")));
        }
        if int_part.len() + frac_part.len() > 36 {
            return Err(Error::Parse(format!("too many digits in {s:?}")));
        }
        let digits = format!("{int_part}{frac_part}");
        let num: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits
                .parse()
                .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?
        };
        let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
        let v = BigRational::new(num, den);
        Ok(Rat(if neg { -v } else { v }))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_unit(&self) -> bool {
        !self.0.is_negative() && self.0 <= BigRational::one()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Numerator and denominator as `i64`, when they fit.
    pub fn to_pair(&self) -> Option<(i64, i64)> {
        Some((self.0.numer().to_i64()?, self.0.denom().to_i64()?))
    }

    pub fn add(&self, other: &Rat) -> Rat {
        Rat(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Rat) -> Rat {
        Rat(&self.0 - &other.0)
    }

    pub fn mul_int(&self, k: u64) -> Rat {
        Rat(&self.0 * BigRational::from_integer(BigInt::from(k)))
    }

    pub fn clamp_unit(self) -> Rat {
        if self.0.is_negative() {
            Rat::zero()
        } else if self.0 > BigRational::one() {
            Rat::one()
        } else {
            self
        }
    }

    fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (n, d) = self
            .to_pair()
            .ok_or_else(|| serde::ser::Error::custom(format!("rational {self} exceeds i64")))?;
        [n, d].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [n, den] = <[i64; 2]>::deserialize(d)?;
        if den <= 0 {
            return Err(serde::de::Error::custom(
                "rational denominator must be positive",
            ));
        }
        Rat::new(n, den).map_err(serde::de::Error::custom)
    }
}

/// One interval with independently open or closed ends.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rat,
    pub lo_closed: bool,
    pub hi: Rat,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: Rat, hi: Rat) -> Self {
        Interval {
            lo,
            lo_closed: true,
            hi,
            hi_closed: true,
        }
    }

    pub fn open(lo: Rat, hi: Rat) -> Self {
        Interval {
            lo,
            lo_closed: false,
            hi,
            hi_closed: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            Ordering::Greater => true,
            Ordering::Equal => !(self.lo_closed && self.hi_closed),
            Ordering::Less => false,
        }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let above = if self.lo_closed {
            *x >= self.lo
        } else {
            *x > self.lo
        };
        let below = if self.hi_closed {
            *x <= self.hi
        } else {
            *x < self.hi
        };
        above && below
    }

    /// Range of `k ∈ [0, m]` with `2k/m` inside the interval.
    fn doubled_mean_counts(&self, m: u64) -> Option<(u64, u64)> {
        // 2k/m >= lo  <=>  k >= lo*m/2
        let lo_scaled = Rat(&self.lo.0 * BigRational::new(BigInt::from(m), BigInt::from(2)));
        let hi_scaled = Rat(&self.hi.0 * BigRational::new(BigInt::from(m), BigInt::from(2)));
        let k_lo = if self.lo_closed {
            lo_scaled.ceil_int()
        } else {
            lo_scaled.floor_int() + 1
        };
        let k_hi = if self.hi_closed {
            hi_scaled.floor_int()
        } else {
            hi_scaled.ceil_int() - 1
        };
        let k_lo = k_lo.max(BigInt::zero());
        let k_hi = k_hi.min(BigInt::from(m));
        if k_lo > k_hi {
            return None;
        }
        Some((k_lo.to_u64()?, k_hi.to_u64()?))
    }
}

/// A finite union of intervals, kept sorted with overlapping pieces merged.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    pieces: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { pieces: Vec::new() }
    }

    pub fn unit() -> Self {
        IntervalSet::from_intervals(vec![Interval::closed(Rat::zero(), Rat::one())])
    }

    pub fn closed(lo: Rat, hi: Rat) -> Self {
        IntervalSet::from_intervals(vec![Interval::closed(lo, hi)])
    }

    pub fn from_intervals(pieces: Vec<Interval>) -> Self {
        let mut pieces: Vec<Interval> = pieces.into_iter().filter(|p| !p.is_empty()).collect();
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Interval> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if let Some(last) = merged.last_mut() {
                let touches = match last.hi.cmp(&p.lo) {
                    Ordering::Greater => true,
                    Ordering::Equal => last.hi_closed || p.lo_closed,
                    Ordering::Less => false,
                };
                if touches {
                    match p.hi.cmp(&last.hi) {
                        Ordering::Greater => {
                            last.hi = p.hi;
                            last.hi_closed = p.hi_closed;
                        }
                        Ordering::Equal => last.hi_closed |= p.hi_closed,
                        Ordering::Less => {}
                    }
                    continue;
                }
            }
            merged.push(p);
        }
        IntervalSet { pieces: merged }
    }

    pub fn pieces(&self) -> &[Interval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, x: &Rat) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    /// Complement relative to the closed window `[lo, hi]`.
    pub fn complement_within(&self, lo: &Rat, hi: &Rat) -> IntervalSet {
        let mut out = Vec::new();
        let mut cursor = lo.clone();
        let mut cursor_closed = true;
        for p in &self.pieces {
            out.push(Interval {
                lo: cursor.clone(),
                lo_closed: cursor_closed,
                hi: p.lo.clone(),
                hi_closed: !p.lo_closed,
            });
            cursor = p.hi.clone();
            cursor_closed = !p.hi_closed;
        }
        out.push(Interval {
            lo: cursor,
            lo_closed: cursor_closed,
            hi: hi.clone(),
            hi_closed: true,
        });
        let window = Interval::closed(lo.clone(), hi.clone());
        let clipped = out
            .into_iter()
            .map(|mut p| {
                if p.lo < window.lo {
                    p.lo = window.lo.clone();
                    p.lo_closed = true;
                }
                if p.hi > window.hi {
                    p.hi = window.hi.clone();
                    p.hi_closed = true;
                }
                p
            })
            .collect();
        IntervalSet::from_intervals(clipped)
    }

    /// Disjoint, sorted ranges of counts `k ∈ [0, m]` with `2k/m` in the set.
    pub fn doubled_mean_counts(&self, m: u64) -> Vec<(u64, u64)> {
        let mut ranges: Vec<(u64, u64)> = self
            .pieces
            .iter()
            .filter_map(|p| p.doubled_mean_counts(m))
            .collect();
        ranges.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(ranges.len());
        for (a, b) in ranges {
            match merged.last_mut() {
                Some(last) if a <= last.1.saturating_add(1) => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        merged
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "∅");
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(
                f,
                "{}{}, {}{}",
                if p.lo_closed { '[' } else { '(' },
                p.lo,
                p.hi,
                if p.hi_closed { ']' } else { ')' }
            )?;
        }
        Ok(())
    }
}

//! Exact arithmetic in ℤ[√2] and the ideal-counting function 𝒩(n).
//!
//! 𝒩(n) counts ideals of norm n. Since ℤ[√2] has narrow class number one it
//! equals the divisor sum of the Kronecker character mod 8, which is what the
//! sieve computes. A norm-form brute force is kept as an independent oracle.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;
use thiserror::Error;

/// √2 rounded to the nearest double.
pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// log(1+√2), the regulator.
pub const LOG_EPS: f64 = 0.881_373_587_019_543;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadFieldError {
    #[error("integer overflow in ℤ[√2] arithmetic")]
    Overflow,
    #[error("ideal table covers n ≤ {limit}, requested {requested}")]
    OutOfRange { limit: u64, requested: u64 },
    #[error("cannot allocate ideal table of {0} entries")]
    Allocation(u64),
}

/// An element x + y√2 of ℤ[√2].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct QuadInt {
    pub x: i128,
    pub y: i128,
}

impl QuadInt {
    pub const ONE: QuadInt = QuadInt { x: 1, y: 0 };
    pub const ZERO: QuadInt = QuadInt { x: 0, y: 0 };
    /// The fundamental unit ε = 1 + √2.
    pub const EPS: QuadInt = QuadInt { x: 1, y: 1 };
    /// ε⁻¹ = −1 + √2.
    pub const EPS_INV: QuadInt = QuadInt { x: -1, y: 1 };

    pub const fn new(x: i128, y: i128) -> Self {
        QuadInt { x, y }
    }

    pub fn conj(self) -> Self {
        QuadInt { x: self.x, y: -self.y }
    }

    /// x² − 2y². Panics on overflow (|x|, |y| ≤ 2⁶¹ is always safe).
    pub fn norm(self) -> i128 {
        self.checked_norm().expect("overflow in QuadInt::norm")
    }

    pub fn checked_norm(self) -> Option<i128> {
        let xx = self.x.checked_mul(self.x)?;
        let yy = self.y.checked_mul(self.y)?.checked_mul(2)?;
        xx.checked_sub(yy)
    }

    pub fn checked_mul(self, o: QuadInt) -> Option<QuadInt> {
        let x = self
            .x
            .checked_mul(o.x)?
            .checked_add(self.y.checked_mul(o.y)?.checked_mul(2)?)?;
        let y = self.x.checked_mul(o.y)?.checked_add(o.x.checked_mul(self.y)?)?;
        Some(QuadInt { x, y })
    }

    pub fn checked_add(self, o: QuadInt) -> Option<QuadInt> {
        Some(QuadInt {
            x: self.x.checked_add(o.x)?,
            y: self.y.checked_add(o.y)?,
        })
    }

    pub fn checked_sub(self, o: QuadInt) -> Option<QuadInt> {
        Some(QuadInt {
            x: self.x.checked_sub(o.x)?,
            y: self.y.checked_sub(o.y)?,
        })
    }

    pub fn scale(self, k: i128) -> QuadInt {
        QuadInt::new(self.x * k, self.y * k)
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// Exact sign of the real embedding x + y·1.41421…
    pub fn signum(self) -> i32 {
        let sx = self.x.signum() as i32;
        let sy = self.y.signum() as i32;
        if sx == sy || sy == 0 {
            return sx;
        }
        if sx == 0 {
            return sy;
        }
        // opposite signs: compare x² with 2y²
        let xx = (self.x as f64).abs();
        let yy = (self.y as f64).abs() * SQRT2;
        let ord = if (xx - yy).abs() > 1e-9 * xx.max(yy) {
            xx.partial_cmp(&yy).unwrap()
        } else {
            let a = self.x.unsigned_abs().checked_mul(self.x.unsigned_abs());
            let b = self
                .y
                .unsigned_abs()
                .checked_mul(self.y.unsigned_abs())
                .and_then(|v| v.checked_mul(2));
            match (a, b) {
                (Some(a), Some(b)) => a.cmp(&b),
                _ => xx.partial_cmp(&yy).unwrap(),
            }
        };
        match ord {
            Ordering::Greater => sx,
            Ordering::Less => sy,
            Ordering::Equal => 0,
        }
    }

    pub fn abs(self) -> QuadInt {
        if self.signum() < 0 {
            -self
        } else {
            self
        }
    }

    /// Exact comparison of real embeddings.
    pub fn cmp_real(self, o: QuadInt) -> Ordering {
        let d = self.checked_sub(o).expect("overflow in QuadInt::cmp_real");
        d.signum().cmp(&0)
    }

    pub fn to_f64(self) -> f64 {
        self.x as f64 + self.y as f64 * SQRT2
    }

    /// Real value of the Galois conjugate x − y√2.
    pub fn conj_f64(self) -> f64 {
        self.x as f64 - self.y as f64 * SQRT2
    }
}

impl Mul for QuadInt {
    type Output = QuadInt;
    fn mul(self, o: QuadInt) -> QuadInt {
        self.checked_mul(o).expect("overflow in QuadInt multiplication")
    }
}

impl Add for QuadInt {
    type Output = QuadInt;
    fn add(self, o: QuadInt) -> QuadInt {
        self.checked_add(o).expect("overflow in QuadInt addition")
    }
}

impl Sub for QuadInt {
    type Output = QuadInt;
    fn sub(self, o: QuadInt) -> QuadInt {
        self.checked_sub(o).expect("overflow in QuadInt subtraction")
    }
}

impl Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        QuadInt::new(-self.x, -self.y)
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.y < 0 {
            write!(f, "{}-{}√2", self.x, -self.y)
        } else {
            write!(f, "{}+{}√2", self.x, self.y)
        }
    }
}

pub fn qi_mul(a: QuadInt, b: QuadInt) -> Result<QuadInt, QuadFieldError> {
    a.checked_mul(b).ok_or(QuadFieldError::Overflow)
}

pub fn qi_norm(a: QuadInt) -> Result<i128, QuadFieldError> {
    a.checked_norm().ok_or(QuadFieldError::Overflow)
}

/// ε^k for any integer k, by binary powering.
pub fn unit_power(k: i64) -> Result<QuadInt, QuadFieldError> {
    let base = if k >= 0 { QuadInt::EPS } else { QuadInt::EPS_INV };
    let mut e = k.unsigned_abs();
    let mut acc = QuadInt::ONE;
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = qi_mul(acc, b)?;
        }
        e >>= 1;
        if e > 0 {
            b = qi_mul(b, b)?;
        }
    }
    Ok(acc)
}

/// Kronecker character (2/·) = (8/·): 0 on even d, +1 for d ≡ ±1, −1 for d ≡ ±3 (mod 8).
pub fn chi8(d: u64) -> i32 {
    match d % 8 {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    }
}

/// 𝒩(n) = Σ_{d|n} χ₈(d), evaluated from the factorisation of n.
pub fn ideal_count(n: u64) -> u64 {
    assert!(n >= 1, "ideal_count needs n ≥ 1");
    let mut m = n;
    while m % 2 == 0 {
        m /= 2;
    }
    let mut count = 1u64;
    let mut q = 3u64;
    while q * q <= m {
        if m % q == 0 {
            let mut k = 0u64;
            while m % q == 0 {
                m /= q;
                k += 1;
            }
            count *= prime_power_count(q, k);
            if count == 0 {
                return 0;
            }
        }
        q += 2;
    }
    if m > 1 {
        count *= prime_power_count(m, 1);
    }
    count
}

fn prime_power_count(q: u64, k: u64) -> u64 {
    if chi8(q) == 1 {
        k + 1
    } else if k % 2 == 0 {
        1
    } else {
        0
    }
}

/// Table of 𝒩(n) for 1 ≤ n ≤ limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealCountTable {
    limit: u64,
    /// counts[n-1] = 𝒩(n)
    counts: Vec<u16>,
}

impl IdealCountTable {
    pub fn from_counts(counts: Vec<u16>) -> Self {
        IdealCountTable {
            limit: counts.len() as u64,
            counts,
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// 𝒩(n); n must lie in 1..=limit.
    #[inline]
    pub fn get(&self, n: u64) -> u16 {
        self.counts[(n - 1) as usize]
    }

    pub fn try_get(&self, n: u64) -> Result<u16, QuadFieldError> {
        if n == 0 || n > self.limit {
            return Err(QuadFieldError::OutOfRange {
                limit: self.limit,
                requested: n,
            });
        }
        Ok(self.get(n))
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    pub fn ensure_covers(&self, n: u64) -> Result<(), QuadFieldError> {
        if n > self.limit {
            Err(QuadFieldError::OutOfRange {
                limit: self.limit,
                requested: n,
            })
        } else {
            Ok(())
        }
    }
}

const SEGMENT: u64 = 1 << 17;

/// Sieve 𝒩(n) for n ≤ limit by adding χ₈(d) to every multiple of d.
///
/// Small divisors are applied segment by segment (cache resident, parallel over
/// disjoint segments); divisors above the segment length are applied with a
/// direct stride afterwards. Counts are accumulated modulo 2¹⁶, and the final
/// values are the non-negative divisor sums.
pub fn ideal_count_sieve(limit: u64) -> Result<IdealCountTable, QuadFieldError> {
    assert!(limit >= 1, "sieve limit must be positive");
    let len = usize::try_from(limit).map_err(|_| QuadFieldError::Allocation(limit))?;
    let mut counts: Vec<u16> = Vec::new();
    counts
        .try_reserve_exact(len)
        .map_err(|_| QuadFieldError::Allocation(limit))?;
    counts.resize(len, 0);

    let small = SEGMENT.min(limit);
    counts
        .par_chunks_mut(SEGMENT as usize)
        .enumerate()
        .for_each(|(seg, chunk)| {
            let lo = seg as u64 * SEGMENT + 1;
            let hi = lo + chunk.len() as u64 - 1;
            let mut d = 1u64;
            while d <= small.min(hi) {
                let c = chi8(d) as i16 as u16;
                let mut n = lo.div_ceil(d) * d;
                while n <= hi {
                    let slot = &mut chunk[(n - lo) as usize];
                    *slot = slot.wrapping_add(c);
                    n += d;
                }
                d += 2;
            }
        });
    let mut d = small + 1;
    if d % 2 == 0 {
        d += 1;
    }
    while d <= limit {
        let c = chi8(d) as i16 as u16;
        let mut n = d;
        while n <= limit {
            let slot = &mut counts[(n - 1) as usize];
            *slot = slot.wrapping_add(c);
            n += d;
        }
        d += 2;
    }
    Ok(IdealCountTable { limit, counts })
}

/// Is √n ≤ g < ε²√n for a totally positive g with N(g) = n?
///
/// For such g, g/√n ∈ [1, ε²) is equivalent to g ≥ ḡ and g < ε⁴ḡ.
fn in_generator_window(g: QuadInt) -> bool {
    let gc = g.conj();
    if g.signum() <= 0 || gc.signum() <= 0 {
        return false;
    }
    let eps4 = QuadInt::new(17, 12);
    g.cmp_real(gc) != Ordering::Less && g.cmp_real(eps4 * gc) == Ordering::Less
}

/// The canonical generators of all ideals of norm n: the unique g with
/// N(g) = +n and √n ≤ g < ε²√n in each ideal.
pub fn canonical_generators(n: u64) -> Vec<QuadInt> {
    let n = n as i128;
    let mut out = Vec::new();
    // g ≥ √n and ḡ = n/g > √n/ε² give 0 ≤ y < 2√n and √n ≤ x < 3√n.
    let ymax = (2.0 * (n as f64).sqrt()).ceil() as i128 + 1;
    for y in 0..=ymax {
        let xx = n + 2 * y * y;
        let x = isqrt(xx);
        if x * x != xx {
            continue;
        }
        for g in [QuadInt::new(x, y), QuadInt::new(x, -y)] {
            if in_generator_window(g) && !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out.sort();
    out
}

/// Number of ideals of norm n by exhaustive search over canonical generators.
pub fn ideal_count_bruteforce(n: u64) -> u64 {
    canonical_generators(n).len() as u64
}

/// Integer square root, floor(√n) for n ≥ 0.
pub fn isqrt(n: i128) -> i128 {
    if n < 0 {
        return -1;
    }
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplication_examples() {
        assert_eq!(QuadInt::new(1, 1) * QuadInt::new(1, 1), QuadInt::new(3, 2));
        assert_eq!(QuadInt::ONE * QuadInt::new(5, -7), QuadInt::new(5, -7));
        assert_eq!(QuadInt::new(3, 2) * QuadInt::new(3, -2), QuadInt::ONE);
    }

    #[test]
    fn norms() {
        assert_eq!(QuadInt::new(1, 1).norm(), -1);
        assert_eq!(QuadInt::new(3, 2).norm(), 1);
        assert_eq!(QuadInt::new(4, 2).norm(), 8);
        let big = QuadInt::new(1 << 61, 1 << 61);
        assert_eq!(big.norm(), -(1i128 << 122));
    }

    #[test]
    fn overflow_is_reported() {
        let big = QuadInt::new(i128::MAX / 2, 1);
        assert_eq!(qi_mul(big, big), Err(QuadFieldError::Overflow));
    }

    #[test]
    fn unit_powers() {
        assert_eq!(unit_power(0).unwrap(), QuadInt::ONE);
        assert_eq!(unit_power(2).unwrap(), QuadInt::new(3, 2));
        assert_eq!(unit_power(-1).unwrap(), QuadInt::new(-1, 1));
        assert_eq!(unit_power(7).unwrap() * unit_power(-7).unwrap(), QuadInt::ONE);
    }

    #[test]
    fn exact_sign() {
        assert_eq!(QuadInt::new(-1, 1).signum(), 1);
        assert_eq!(QuadInt::new(1, -1).signum(), -1);
        assert_eq!(QuadInt::new(3, -2).signum(), 1);
        assert_eq!(QuadInt::new(-3, 2).signum(), -1);
        assert_eq!(QuadInt::ZERO.signum(), 0);
        // ε^-40 is positive and tiny: x and y of opposite sign, nearly cancelling
        let tiny = unit_power(-40).unwrap();
        assert_eq!(tiny.signum(), 1);
        assert_eq!((-tiny).signum(), -1);
    }

    #[test]
    fn character_values() {
        assert_eq!(chi8(7), 1);
        assert_eq!(chi8(3), -1);
        assert_eq!(chi8(4), 0);
        assert_eq!(chi8(1), 1);
        assert_eq!(chi8(5), -1);
    }

    #[test]
    fn ideal_count_examples() {
        assert_eq!(ideal_count(1), 1);
        assert_eq!(ideal_count(7), 2);
        assert_eq!(ideal_count(3), 0);
        assert_eq!(ideal_count(9), 1);
        assert_eq!(ideal_count(49), 3);
        assert_eq!(ideal_count(2), 1);
    }

    #[test]
    fn sieve_examples() {
        let t = ideal_count_sieve(8).unwrap();
        assert_eq!(t.counts(), &[1, 1, 0, 1, 0, 0, 2, 1]);
        assert_eq!(ideal_count_sieve(1).unwrap().counts(), &[1]);
        assert_eq!(ideal_count_sieve(2).unwrap().counts(), &[1, 1]);
    }

    #[test]
    fn sieve_crosses_segments() {
        let limit = 3 * SEGMENT + 17;
        let t = ideal_count_sieve(limit).unwrap();
        for n in (1..=limit).step_by(997).chain([SEGMENT, SEGMENT + 1, limit]) {
            assert_eq!(t.get(n) as u64, ideal_count(n), "n = {n}");
        }
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(ideal_count_bruteforce(2), 1);
        assert_eq!(ideal_count_bruteforce(7), 2);
        assert_eq!(ideal_count_bruteforce(5), 0);
        assert_eq!(canonical_generators(7), vec![QuadInt::new(3, 1), QuadInt::new(5, 3)]);
        assert_eq!(canonical_generators(1), vec![QuadInt::ONE]);
    }

    #[test]
    fn table_range_errors() {
        let t = ideal_count_sieve(10).unwrap();
        assert!(t.try_get(11).is_err());
        assert!(t.try_get(0).is_err());
        assert_eq!(t.try_get(7), Ok(2));
    }
}

//! Small exact-rational arithmetic for quantities that must not pick up
//! floating-point error (cycle fractions, expected measurement counts).

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

/// Exact fraction with i64 numerator/denominator, always reduced,
/// denominator always positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.abs()
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Rational {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn from_int(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational::new(
            self.num
                .checked_mul(rhs.den)
                .and_then(|a| a.checked_add(rhs.num.checked_mul(self.den).unwrap()))
                .expect("rational overflow"),
            self.den.checked_mul(rhs.den).expect("rational overflow"),
        )
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        self + Rational::new(-rhs.num, rhs.den)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        // cross-reduce before multiplying to keep intermediates small
        let g1 = gcd(self.num, rhs.den).max(1);
        let g2 = gcd(rhs.num, self.den).max(1);
        Rational::new(
            (self.num / g1)
                .checked_mul(rhs.num / g2)
                .expect("rational overflow"),
            (self.den / g2)
                .checked_mul(rhs.den / g1)
                .expect("rational overflow"),
        )
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = (self.num as i128) * (other.den as i128);
        let rhs = (other.num as i128) * (self.den as i128);
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// SplitMix64 step; used to derive independent per-replica seeds from a
/// master seed. `replica_seed(s, r)` is the documented split function:
/// replica `r` runs on `splitmix64(s + (r+1) * 0x9E3779B97F4A7C15)`.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

pub fn replica_seed(seed: u64, replica: u32) -> u64 {
    splitmix64(seed.wrapping_add((replica as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15)))
}

/// FNV-1a over bytes; used for config/lattice fingerprints in manifests and
/// checkpoint headers.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Compensated (Kahan) accumulator for long-running log-weight sums.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_basics() {
        let a = Rational::new(2, 6);
        assert_eq!(a, Rational::new(1, 3));
        assert_eq!((a + Rational::new(1, 3)).to_f64(), 2.0 / 3.0);
        assert_eq!(Rational::new(8, 3).to_string(), "8/3");
        assert_eq!(Rational::new(-1, -2), Rational::new(1, 2));
        assert!(Rational::new(1, 3) < Rational::new(1, 2));
    }

    #[test]
    fn replica_seeds_distinct() {
        let s = 42;
        let seeds: Vec<u64> = (0..16).map(|r| replica_seed(s, r)).collect();
        for i in 0..16 {
            for j in 0..i {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }

    #[test]
    fn kahan_tracks_small_increments() {
        let mut k = KahanSum::new();
        for _ in 0..1_000_000 {
            k.add(1e-10);
        }
        assert!((k.value() - 1e-4).abs() < 1e-18);
    }
}

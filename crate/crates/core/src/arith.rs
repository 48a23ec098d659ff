//! Modular arithmetic and unit phases `e_q(z) = exp(2 pi i z / q)`.
//!
//! Every phase argument is reduced modulo `q` in integer arithmetic before it
//! reaches floating point. Products are widened to 128 bits so moduli up to
//! `2^62` are safe.

use std::f64::consts::TAU;
use std::ops::{Add, AddAssign};

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An integer reduced modulo `modulus`, always in `[0, modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    pub fn new(z: i128, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Domain("modulus must be positive".into()));
        }
        Ok(Self { value: reduce(z, modulus), modulus })
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.modulus
    }

    pub fn phase(self) -> UnitPhase {
        UnitPhase(residue_phase(self.value, self.modulus))
    }
}

/// A point on the unit circle, `e(z) = exp(2 pi i z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitPhase(Complex64);

impl UnitPhase {
    /// `e(t)` for a real turn count `t`.
    pub fn from_turns(t: f64) -> Self {
        Self(turns_phase(t - t.floor()))
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn to_complex(self) -> Complex64 {
        self.0
    }
}

impl From<UnitPhase> for Complex64 {
    fn from(p: UnitPhase) -> Self {
        p.0
    }
}

/// Reduces a signed integer into `[0, q)`.
#[inline]
pub fn reduce(z: i128, q: u64) -> u64 {
    z.rem_euclid(q as i128) as u64
}

#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + b as u128) % q as u128) as u64
}

/// Square-and-multiply for a non-negative exponent; `base` must already be reduced.
pub fn pow_mod_u(mut base: u64, mut exp: u64, q: u64) -> u64 {
    if q == 1 {
        return 0;
    }
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Inverse of `n` modulo `q`, if it exists.
pub fn mod_inverse(n: u64, q: u64) -> Option<u64> {
    if q == 1 {
        return Some(0);
    }
    let e = (n as i128).extended_gcd(&(q as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(reduce(e.x, q))
}

/// `e_q(z)`. The reduction `z mod q` happens before any float conversion.
pub fn eq_phase(z: i128, q: u64) -> Result<UnitPhase> {
    if q == 0 {
        return Err(Error::Domain("e_q requires q >= 1".into()));
    }
    Ok(UnitPhase(residue_phase(reduce(z, q), q)))
}

/// `n^nu mod q` for any nonzero (or zero) integer exponent. Negative
/// exponents go through the modular inverse of `n`.
pub fn pow_mod(n: i128, nu: i64, q: u64) -> Result<Residue> {
    if q == 0 {
        return Err(Error::Domain("modulus must be positive".into()));
    }
    let base = reduce(n, q);
    let value = if nu >= 0 {
        pow_mod_u(base, nu as u64, q)
    } else {
        let inv = mod_inverse(base, q).ok_or(Error::NotInvertible { n: base, q })?;
        pow_mod_u(inv, nu.unsigned_abs(), q)
    };
    Ok(Residue { value, modulus: q })
}

/// Number of positive divisors, by trial division.
pub fn divisor_count(l: u64) -> Result<u64> {
    if l == 0 {
        return Err(Error::Domain("divisor count of 0".into()));
    }
    let mut rest = l;
    let mut count = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        count *= e + 1;
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        count *= 2;
    }
    Ok(count)
}

/// `exp(2 pi i r / q)` for an already reduced residue.
#[inline]
pub fn residue_phase(r: u64, q: u64) -> Complex64 {
    // Fold into (-q/2, q/2] so the angle handed to sin/cos stays small.
    let centered = if r > q / 2 { r as f64 - q as f64 } else { r as f64 };
    turns_phase(centered / q as f64)
}

#[inline]
fn turns_phase(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Precomputed `e_q(r)` for all residues when `q` is small enough, direct
/// evaluation otherwise.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    q: u64,
    table: Option<Vec<Complex64>>,
}

impl PhaseTable {
    pub const MAX_TABULATED: u64 = 1 << 22;

    pub fn new(q: u64) -> Self {
        let table = (q <= Self::MAX_TABULATED)
            .then(|| (0..q).map(|r| residue_phase(r, q)).collect());
        Self { q, table }
    }

    #[inline]
    pub fn get(&self, r: u64) -> Complex64 {
        match &self.table {
            Some(t) => t[r as usize],
            None => residue_phase(r, self.q),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

#[inline]
fn two_sum(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, z: Complex64) {
        two_sum(&mut self.sum.re, &mut self.comp.re, z.re);
        two_sum(&mut self.sum.im, &mut self.comp.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

impl AddAssign<Complex64> for CompensatedSum {
    fn add_assign(&mut self, z: Complex64) {
        self.push(z);
    }
}

impl Add for CompensatedSum {
    type Output = CompensatedSum;

    fn add(mut self, other: CompensatedSum) -> CompensatedSum {
        self.push(other.sum);
        self.push(other.comp);
        self
    }
}

impl std::iter::Sum<Complex64> for CompensatedSum {
    fn sum<I: Iterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for z in iter {
            acc.push(z);
        }
        acc
    }
}

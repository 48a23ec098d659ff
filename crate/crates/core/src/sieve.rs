//! Largest/smallest prime factor tables and streaming enumeration of the
//! smooth set `S(x, y) = { n <= x : P(n) <= y }`.
//!
//! Both tables come out of one pass: every prime `p <= sqrt(hi)` multiplies
//! `p` into an accumulator for each prime power it divides. Whatever is left
//! over (`n / acc`) is either 1 or a single prime above `sqrt(hi)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of integers handled per segment.
pub const DEFAULT_SEGMENT: usize = 1 << 22;

/// Largest table `FactorSieve::build` will allocate by default.
pub const DEFAULT_MAX_ENTRIES: u64 = 1 << 25;

/// Rounds a real bound down to the integer range it describes (`n <= x`).
pub fn floor_bound(x: f64) -> u64 {
    if x.is_nan() || x < 1.0 {
        0
    } else {
        x.floor() as u64
    }
}

pub fn isqrt(n: u64) -> u64 {
    n.isqrt()
}

/// All primes `<= n`, ascending.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i.saturating_mul(i);
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Primes in `(lo, hi]`, via a segmented sieve.
pub fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    if hi <= lo || hi < 2 {
        return Vec::new();
    }
    let start = (lo + 1).max(2);
    let base = primes_up_to(isqrt(hi));
    let mut out = Vec::new();
    let mut seg_lo = start;
    while seg_lo <= hi {
        let seg_hi = hi.min(seg_lo + DEFAULT_SEGMENT as u64 - 1);
        let len = (seg_hi - seg_lo + 1) as usize;
        let mut composite = vec![false; len];
        for &p in &base {
            if p * p > seg_hi {
                break;
            }
            let mut m = (p * p).max(seg_lo.div_ceil(p) * p);
            while m <= seg_hi {
                composite[(m - seg_lo) as usize] = true;
                m += p;
            }
        }
        out.extend(
            composite
                .iter()
                .enumerate()
                .filter(|(_, &c)| !c)
                .map(|(i, _)| seg_lo + i as u64),
        );
        seg_lo = seg_hi + 1;
    }
    out
}

/// Per-integer largest (`P(n)`) and smallest (`p(n)`) prime factors over
/// `[lo, hi]`, with the convention `P(1) = p(1) = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSieve {
    lo: u64,
    hi: u64,
    lpf: Vec<u64>,
    spf: Vec<u64>,
}

impl FactorSieve {
    pub fn build(lo: u64, hi: u64) -> Result<Self> {
        Self::build_with_limit(lo, hi, DEFAULT_MAX_ENTRIES)
    }

    pub fn build_with_limit(lo: u64, hi: u64, max_entries: u64) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::Domain(format!("invalid segment [{lo}, {hi}]")));
        }
        let len = hi - lo + 1;
        if len > max_entries {
            return Err(Error::Resource(format!(
                "segment of {len} entries exceeds the limit of {max_entries}"
            )));
        }
        let primes = primes_up_to(isqrt(hi));
        let len = len as usize;
        let mut lpf = vec![0u64; len];
        let mut spf = vec![0u64; len];
        const BLOCK: usize = 1 << 16;
        lpf.par_chunks_mut(BLOCK)
            .zip(spf.par_chunks_mut(BLOCK))
            .enumerate()
            .for_each(|(b, (lpf, spf))| {
                let start = lo + (b * BLOCK) as u64;
                fill_factor_block(start, lpf, spf, &primes);
            });
        Ok(Self { lo, hi, lpf, spf })
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn contains(&self, n: u64) -> bool {
        (self.lo..=self.hi).contains(&n)
    }

    /// Largest prime factor `P(n)`. Panics if `n` is outside the segment.
    pub fn lpf(&self, n: u64) -> u64 {
        self.lpf[self.index(n)]
    }

    /// Smallest prime factor `p(n)`. Panics if `n` is outside the segment.
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[self.index(n)]
    }

    pub fn lpf_table(&self) -> &[u64] {
        &self.lpf
    }

    pub fn spf_table(&self) -> &[u64] {
        &self.spf
    }

    fn index(&self, n: u64) -> usize {
        assert!(self.contains(n), "{n} outside [{}, {}]", self.lo, self.hi);
        (n - self.lo) as usize
    }

    /// Prime factors of `n` with multiplicity, ascending. Needs a table that
    /// starts at 1 so the cofactor chain stays inside it.
    pub fn factorize(&self, n: u64) -> Vec<u64> {
        assert!(self.lo == 1, "factorize needs a table starting at 1");
        let mut out = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf(m);
            out.push(p);
            m /= p;
        }
        out
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n > 1 && self.spf(n) == n
    }

    /// Moebius function on `[1, hi]`, index 0 unused.
    pub fn mobius_table(&self) -> Vec<i8> {
        assert!(self.lo == 1, "mobius table needs a table starting at 1");
        let mut mu = vec![0i8; self.hi as usize + 1];
        mu[1] = 1;
        for n in 2..=self.hi {
            let p = self.spf(n);
            let m = n / p;
            mu[n as usize] = if m % p == 0 { 0 } else { -mu[m as usize] };
        }
        mu
    }

    /// von Mangoldt function on `[1, hi]`, index 0 unused.
    pub fn von_mangoldt_table(&self) -> Vec<f64> {
        assert!(self.lo == 1, "von Mangoldt table needs a table starting at 1");
        let mut lambda = vec![0.0; self.hi as usize + 1];
        for n in 2..=self.hi {
            let p = self.spf(n);
            if self.lpf(n) == p {
                lambda[n as usize] = (p as f64).ln();
            }
        }
        lambda
    }
}

fn fill_factor_block(start: u64, lpf: &mut [u64], spf: &mut [u64], primes: &[u64]) {
    let len = lpf.len() as u64;
    let end = start + len - 1;
    let mut acc = vec![1u64; lpf.len()];
    for &p in primes {
        if p > end {
            break;
        }
        let mut m = start.div_ceil(p) * p;
        while m <= end {
            let i = (m - start) as usize;
            acc[i] *= p;
            if spf[i] == 0 {
                spf[i] = p;
            }
            lpf[i] = p;
            m += p;
        }
        let mut pk = p.saturating_mul(p);
        while pk <= end {
            let mut m = start.div_ceil(pk) * pk;
            while m <= end {
                acc[(m - start) as usize] *= p;
                m += pk;
            }
            pk = pk.saturating_mul(p);
        }
    }
    for i in 0..lpf.len() {
        let n = start + i as u64;
        let cof = n / acc[i];
        if cof > 1 {
            lpf[i] = cof;
            if spf[i] == 0 {
                spf[i] = cof;
            }
        } else if n == 1 {
            lpf[i] = 1;
            spf[i] = 1;
        }
    }
}

/// The y-smooth integers up to x, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothSet {
    pub x: f64,
    pub y: f64,
    pub members: Vec<u64>,
}

impl SmoothSet {
    pub fn psi(&self) -> u64 {
        self.members.len() as u64
    }
}

/// Streams `S(x, y)` one segment at a time; never holds more than one
/// segment per worker.
#[derive(Debug, Clone)]
pub struct SmoothScan {
    x: u64,
    y: u64,
    primes: Vec<u64>,
    segment: usize,
}

impl SmoothScan {
    pub fn new(x: f64, y: f64) -> Self {
        Self::with_segment(x, y, DEFAULT_SEGMENT)
    }

    pub fn with_segment(x: f64, y: f64, segment: usize) -> Self {
        let x = floor_bound(x);
        let y = floor_bound(y);
        let limit = y.min(isqrt(x));
        Self { x, y, primes: primes_up_to(limit), segment: segment.max(1) }
    }

    /// `floor(x)`.
    pub fn x(&self) -> u64 {
        self.x
    }

    /// `floor(y)`.
    pub fn y(&self) -> u64 {
        self.y
    }

    /// Segment bounds `[lo, hi]` covering `[1, floor(x)]`.
    pub fn segments(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut lo = 1u64;
        while lo <= self.x {
            let hi = self.x.min(lo + self.segment as u64 - 1);
            out.push((lo, hi));
            lo = hi + 1;
        }
        out
    }

    /// Appends the smooth members of `[lo, hi]` to `out`.
    pub fn smooth_in(&self, lo: u64, hi: u64, out: &mut Vec<u64>) {
        if self.y == 0 {
            return;
        }
        let acc = self.accumulate(lo, hi, |_, _| {});
        out.extend(
            acc.iter()
                .enumerate()
                .map(|(i, &a)| (lo + i as u64, a))
                .filter(|&(n, a)| n as u128 <= a as u128 * self.y as u128)
                .map(|(n, _)| n),
        );
    }

    /// Like `smooth_in`, also returning the completely multiplicative weight
    /// `f(n) = prod f(p)^e` built from `prime_weight`.
    pub fn smooth_weighted_in<W>(
        &self,
        lo: u64,
        hi: u64,
        prime_weight: &W,
        out: &mut Vec<(u64, num_complex::Complex64)>,
    ) where
        W: Fn(u64) -> num_complex::Complex64 + ?Sized,
    {
        use num_complex::Complex64;
        if self.y == 0 {
            return;
        }
        let len = (hi - lo + 1) as usize;
        let mut w = vec![Complex64::new(1.0, 0.0); len];
        let small: Vec<Complex64> = self.primes.iter().map(|&p| prime_weight(p)).collect();
        let acc = self.accumulate(lo, hi, |i, k| w[i] *= small[k]);
        for (i, &a) in acc.iter().enumerate() {
            let n = lo + i as u64;
            let cof = n / a;
            if cof <= self.y {
                let weight = if cof > 1 { w[i] * prime_weight(cof) } else { w[i] };
                out.push((n, weight));
            }
        }
    }

    /// Multiplies every sieving prime into `acc[n]` once per prime power
    /// dividing `n`; `hit(i, k)` fires with the prime's index for each factor.
    fn accumulate(&self, lo: u64, hi: u64, mut hit: impl FnMut(usize, usize)) -> Vec<u64> {
        let mut acc = vec![1u64; (hi - lo + 1) as usize];
        for (k, &p) in self.primes.iter().enumerate() {
            if p > hi {
                break;
            }
            let mut pk = p;
            loop {
                let mut m = lo.div_ceil(pk) * pk;
                while m <= hi {
                    let i = (m - lo) as usize;
                    acc[i] *= p;
                    hit(i, k);
                    m += pk;
                }
                match pk.checked_mul(p) {
                    Some(next) if next <= hi => pk = next,
                    _ => break,
                }
            }
        }
        acc
    }

    /// Maps every segment's members through `map` in parallel, returning the
    /// results in segment order.
    pub fn map_segments<T, F>(&self, map: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[u64]) -> T + Sync,
    {
        self.segments()
            .into_par_iter()
            .map_init(Vec::new, |buf, (lo, hi)| {
                buf.clear();
                self.smooth_in(lo, hi, buf);
                map(buf)
            })
            .collect()
    }
}

/// Materialized `S(x, y)`.
pub fn smooth_members(x: f64, y: f64) -> SmoothSet {
    let scan = SmoothScan::new(x, y);
    let members = scan.map_segments(|s| s.to_vec()).concat();
    SmoothSet { x, y, members }
}

/// `Psi(x, y)` without materializing the set.
pub fn psi(x: f64, y: f64) -> u64 {
    SmoothScan::new(x, y).map_segments(|s| s.len() as u64).into_iter().sum()
}

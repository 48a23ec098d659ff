//! Exact evaluation of exponential sums over smooth integers and their
//! relatives: twisted sums, prime-convolution sums, bilinear forms, complete
//! monomial sums and moment congruence counts.
//!
//! Every sum streams the smooth set segment by segment; segments are reduced
//! in parallel and combined in segment order, so results do not depend on the
//! thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, gcd, mul_mod, pow_mod_u, CompensatedSum, PhaseTable};
use crate::error::{Error, Result};
use crate::sieve::{self, floor_bound, SmoothScan};

/// The argument list `(x, y, q, a, nu, theta)` shared by every smooth sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumParams {
    pub x: f64,
    pub y: f64,
    q: u64,
    a: i64,
    nu: i64,
    theta: Option<f64>,
}

impl SumParams {
    /// Rejects `q = 0` and `gcd(a, q) != 1`.
    pub fn new(x: f64, y: f64, q: u64, a: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Domain("q must be positive".into()));
        }
        let g = gcd(a.unsigned_abs(), q);
        if g != 1 {
            return Err(Error::NotCoprime { a, q, g });
        }
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Domain("x and y must be finite".into()));
        }
        Ok(Self { x, y, q, a, nu: 1, theta: None })
    }

    pub fn with_nu(mut self, nu: i64) -> Result<Self> {
        if nu == 0 {
            return Err(Error::Domain("nu must be nonzero".into()));
        }
        self.nu = nu;
        Ok(self)
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn nu(&self) -> i64 {
        self.nu
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    /// `a mod q` in `[0, q)`.
    pub fn a_reduced(&self) -> u64 {
        arith::reduce(self.a as i128, self.q)
    }

    /// The same sum with `a` replaced by `-a`.
    pub fn negated(&self) -> Self {
        Self { a: -self.a, theta: self.theta.map(|t| -t), ..*self }
    }
}

/// A complex sum together with the number of its unit-modulus terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumValue {
    pub value: Complex64,
    pub terms: u64,
}

impl SumValue {
    pub fn abs(&self) -> f64 {
        self.value.norm()
    }
}

fn combine(parts: Vec<(CompensatedSum, u64)>) -> SumValue {
    let mut total = CompensatedSum::new();
    let mut terms = 0;
    for (s, t) in parts {
        total = total + s;
        terms += t;
    }
    SumValue { value: total.value(), terms }
}

/// Evaluates `n -> e_q(a n^nu)` through residues, with the `nu < 0`
/// restriction to `gcd(n, q) = 1` built in.
#[derive(Debug, Clone)]
pub struct MonomialPhase {
    q: u64,
    a: u64,
    nu: i64,
    table: PhaseTable,
}

impl MonomialPhase {
    pub fn new(q: u64, a: i64, nu: i64) -> Self {
        Self { q, a: arith::reduce(a as i128, q), nu, table: PhaseTable::new(q) }
    }

    /// `a n^nu mod q`, or `None` when `nu < 0` and `n` is not a unit.
    #[inline]
    pub fn residue(&self, n: u64) -> Option<u64> {
        let base = n % self.q;
        let power = match self.nu {
            1 => base,
            nu if nu > 0 => pow_mod_u(base, nu as u64, self.q),
            nu => pow_mod_u(arith::mod_inverse(base, self.q)?, nu.unsigned_abs(), self.q),
        };
        Some(mul_mod(self.a, power, self.q))
    }

    #[inline]
    pub fn phase(&self, n: u64) -> Option<Complex64> {
        self.residue(n).map(|r| self.table.get(r))
    }
}

/// `S_{a,q}(x, y)`: sum of `e_q(a n)` over `n` in `S(x, y)`.
pub fn sum_linear(p: &SumParams) -> SumValue {
    let q = p.q;
    let a = p.a_reduced();
    let table = PhaseTable::new(q);
    let scan = SmoothScan::new(p.x, p.y);
    combine(scan.map_segments(|members| {
        let mut acc = CompensatedSum::new();
        for &n in members {
            acc.push(table.get(mul_mod(a, n % q, q)));
        }
        (acc, members.len() as u64)
    }))
}

/// `S_{nu,a,q}(x, y)`: sum of `e_q(a n^nu)` over `n` in `S(x, y)`; for
/// `nu < 0` only `n` coprime to `q` contribute.
pub fn sum_power(p: &SumParams) -> SumValue {
    let phase = MonomialPhase::new(p.q, p.a, p.nu);
    let scan = SmoothScan::new(p.x, p.y);
    combine(scan.map_segments(|members| {
        let mut acc = CompensatedSum::new();
        let mut terms = 0;
        for &n in members {
            if let Some(z) = phase.phase(n) {
                acc.push(z);
                terms += 1;
            }
        }
        (acc, terms)
    }))
}

/// Fractional part of `theta * n`, carrying the rounding error of the
/// product so large `n` keep their phase.
#[inline]
pub fn frac_product(theta: f64, n: u64) -> f64 {
    let nf = n as f64;
    let prod = theta * nf;
    let err = theta.mul_add(nf, -prod);
    let f = (prod - prod.floor()) + err;
    f - f.floor()
}

/// `T_theta(x, y)`: sum of `e(theta n)` over `n` in `S(x, y)`.
pub fn sum_theta(p: &SumParams) -> Result<SumValue> {
    let theta = p
        .theta
        .ok_or_else(|| Error::Domain("sum_theta needs theta".into()))?;
    let scan = SmoothScan::new(p.x, p.y);
    Ok(combine(scan.map_segments(|members| {
        let mut acc = CompensatedSum::new();
        for &n in members {
            acc.push(arith::UnitPhase::from_turns(frac_product(theta, n)).to_complex());
        }
        (acc, members.len() as u64)
    })))
}

/// Sum of `f(n) e_q(a n^nu)` over `S(x, y)` for a completely multiplicative
/// `f`, given by its values on primes.
pub fn sum_twisted<F>(p: &SumParams, prime_value: F) -> SumValue
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let phase = MonomialPhase::new(p.q, p.a, p.nu);
    let scan = SmoothScan::new(p.x, p.y);
    let parts = scan
        .segments()
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut members = Vec::new();
            scan.smooth_weighted_in(lo, hi, &prime_value, &mut members);
            let mut acc = CompensatedSum::new();
            let mut terms = 0;
            for (n, w) in members {
                if let Some(z) = phase.phase(n) {
                    acc.push(w * z);
                    terms += 1;
                }
            }
            (acc, terms)
        })
        .collect();
    combine(parts)
}

/// How the primes of a convolution tuple are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimeOrder {
    /// `y < p_1 < ... < p_j`: distinct primes.
    Strict,
    /// `y < p_1 <= ... <= p_j`: repetition allowed.
    NonDecreasing,
}

/// Calls `visit(product)` for every tuple of `j` primes from `primes`
/// (ascending) in the given order whose product is at most `limit`.
pub fn for_each_prime_tuple(
    primes: &[u64],
    j: u32,
    limit: u64,
    order: PrimeOrder,
    visit: &mut dyn FnMut(u64),
) {
    fn rec(
        primes: &[u64],
        start: usize,
        left: u32,
        product: u64,
        limit: u64,
        order: PrimeOrder,
        visit: &mut dyn FnMut(u64),
    ) {
        if left == 0 {
            visit(product);
            return;
        }
        for i in start..primes.len() {
            let p = primes[i];
            // The remaining `left` primes are all >= p.
            let min_rest = (0..left).try_fold(product, |acc, _| acc.checked_mul(p));
            match min_rest {
                Some(v) if v <= limit => {}
                _ => break,
            }
            let next = match order {
                PrimeOrder::Strict => i + 1,
                PrimeOrder::NonDecreasing => i,
            };
            rec(primes, next, left - 1, product * p, limit, order, visit);
        }
    }
    if j == 0 {
        return;
    }
    rec(primes, 0, j, 1, limit, order, visit);
}

/// `sum_{y < p_1 < ... < p_j} sum_{m <= x / p_1...p_j} e_q(a (m p_1...p_j)^nu)`,
/// or the `<=` ordered variant.
pub fn sum_prime_convolution(
    j: u32,
    x: f64,
    y: f64,
    q: u64,
    a: i64,
    nu: i64,
    order: PrimeOrder,
) -> Result<SumValue> {
    if j == 0 {
        return Err(Error::Domain("j must be at least 1".into()));
    }
    SumParams::new(x, y, q, a)?.with_nu(nu)?;
    let xi = floor_bound(x);
    let yi = floor_bound(y);
    let primes = sieve::primes_between(yi, xi);
    let mut products = Vec::new();
    for_each_prime_tuple(&primes, j, xi, order, &mut |prod| products.push(prod));
    let phase = MonomialPhase::new(q, a, nu);
    let parts = products
        .par_iter()
        .map(|&prod| {
            let mut acc = CompensatedSum::new();
            let mut terms = 0;
            for m in 1..=xi / prod {
                if let Some(z) = phase.phase(m * prod) {
                    acc.push(z);
                    terms += 1;
                }
            }
            (acc, terms)
        })
        .collect();
    Ok(combine(parts))
}

/// A weight sequence supported on `[start, start + values.len())`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub start: u64,
    pub values: Vec<Complex64>,
}

impl Weights {
    pub fn new(start: u64, values: Vec<Complex64>) -> Self {
        Self { start, values }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.start + i as u64, v))
    }
}

/// `sum_{mn <= x} alpha_m beta_n e_q(a (mn)^nu)`.
pub fn sum_bilinear(
    alpha: &Weights,
    beta: &Weights,
    x: f64,
    q: u64,
    a: i64,
    nu: i64,
) -> Result<SumValue> {
    SumParams::new(x, 2.0, q, a)?.with_nu(nu)?;
    let xi = floor_bound(x);
    for (n, w) in alpha.iter().chain(beta.iter()) {
        if w.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("weight at {n} exceeds 1 in modulus")));
        }
        if nu < 0 && w != Complex64::new(0.0, 0.0) && gcd(n, q) != 1 {
            return Err(Error::Domain(format!("weight at {n} sits on a non-unit mod {q}")));
        }
    }
    let phase = MonomialPhase::new(q, a, nu);
    let mut acc = CompensatedSum::new();
    let mut terms = 0;
    for (m, am) in alpha.iter() {
        if m == 0 {
            continue;
        }
        for (n, bn) in beta.iter() {
            if n == 0 || m.saturating_mul(n) > xi {
                continue;
            }
            if let Some(z) = phase.phase(m * n) {
                acc.push(am * bn * z);
                terms += 1;
            }
        }
    }
    Ok(SumValue { value: acc.value(), terms })
}

fn is_prime_trial(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `sum_{n=1}^{q-1} e_q(a n^nu)` for prime `q`.
pub fn complete_monomial_sum(q: u64, a: i64, nu: i64) -> Result<SumValue> {
    if !is_prime_trial(q) {
        return Err(Error::Domain(format!("{q} is not prime")));
    }
    if nu == 0 {
        return Err(Error::Domain("nu must be nonzero".into()));
    }
    let g = gcd(a.unsigned_abs(), q);
    if g != 1 {
        return Err(Error::NotCoprime { a, q, g });
    }
    let phase = MonomialPhase::new(q, a, nu);
    let acc: CompensatedSum = (1..q).filter_map(|n| phase.phase(n)).collect::<Vec<_>>().into_iter().sum();
    Ok(SumValue { value: acc.value(), terms: q - 1 })
}

/// Largest residue histogram `moment_count` will allocate.
pub const MOMENT_MAX_MODULUS: u64 = 1 << 24;

/// Number of solutions of `m_1^nu + ... + m_k^nu = m_{k+1}^nu + ... + m_{2k}^nu
/// (mod q)` with every `m_i` in `[M, 2M]`. For `nu < 0` only units mod `q`
/// take part.
pub fn moment_count(k: u32, nu: i64, q: u64, m: u64) -> Result<u128> {
    if k == 0 || q == 0 || m == 0 {
        return Err(Error::Domain("k, q and M must be positive".into()));
    }
    if nu == 0 {
        return Err(Error::Domain("nu must be nonzero".into()));
    }
    if q > MOMENT_MAX_MODULUS {
        return Err(Error::Resource(format!("histogram of {q} residues is too large")));
    }
    let box_len = (m + 1) as f64;
    if 2.0 * k as f64 * box_len.log2() >= 126.0 {
        return Err(Error::Resource("moment count overflows 128 bits".into()));
    }
    let phase = MonomialPhase::new(q, 1, nu);
    let mut single = vec![0u128; q as usize];
    for v in m..=2 * m {
        if let Some(r) = phase.residue(v) {
            single[r as usize] += 1;
        }
    }
    let sparse: Vec<(usize, u128)> =
        single.iter().enumerate().filter(|(_, &c)| c > 0).map(|(r, &c)| (r, c)).collect();
    let qs = q as usize;
    let mut hist = single.clone();
    for _ in 1..k {
        let mut next = vec![0u128; qs];
        for (r, &c) in hist.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &(s, d) in &sparse {
                let t = if r + s >= qs { r + s - qs } else { r + s };
                next[t] += c * d;
            }
        }
        hist = next;
    }
    Ok(hist.iter().map(|&c| c * c).sum())
}

//! Exact combinatorial decompositions: the `w`-split factorization of smooth
//! integers, the Buchstab expansion, Vaughan and Heath-Brown identities for
//! the von Mangoldt function, and the bilinear regrouping of prime
//! convolutions.
//!
//! Everything here is a checkable identity at finite scale. Checks report the
//! smallest failing `n` instead of a bare boolean.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::CompensatedSum;
use crate::error::{Error, Result};
use crate::sieve::{self, floor_bound, FactorSieve, SmoothScan};
use crate::sums::{for_each_prime_tuple, PrimeOrder};

/// `n = k m` with `w <= k < w P(k)` and `P(k) <= p(m)`, where `p(1)` counts
/// as infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WSplit {
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub w: f64,
}

/// The split conditions on a candidate divisor `k` of `k m`.
pub fn is_admissible_split(k: u64, m: u64, w: f64, sieve: &FactorSieve) -> bool {
    if k < 2 {
        return false;
    }
    let big = sieve.lpf(k);
    let lower_ok = k as f64 >= w && ((k / big) as f64) < w;
    let order_ok = m == 1 || big <= sieve.spf(m);
    lower_ok && order_ok
}

/// Splits `n` at the shortest prefix of its ascending prime factorization
/// whose product reaches `w`.
pub fn w_split(n: u64, w: f64, sieve: &FactorSieve) -> Result<WSplit> {
    if !(w > 1.0) {
        return Err(Error::Domain(format!("w = {w} must exceed 1")));
    }
    if (n as f64) < w {
        return Err(Error::NoSplit { n, w });
    }
    let mut k = 1u64;
    for p in sieve.factorize(n) {
        k *= p;
        if k as f64 >= w {
            return Ok(WSplit { n, k, m: n / k, w });
        }
    }
    Err(Error::NoSplit { n, w })
}

/// Positive divisors of `n`, from its factorization.
pub fn divisors(n: u64, sieve: &FactorSieve) -> Vec<u64> {
    let mut out = vec![1u64];
    let factors = sieve.factorize(n);
    let mut i = 0;
    while i < factors.len() {
        let p = factors[i];
        let mut e = 0;
        while i < factors.len() && factors[i] == p {
            e += 1;
            i += 1;
        }
        let base = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for t in 0..base {
                out.push(out[t] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Every divisor `k` of `n` satisfying the split conditions.
pub fn admissible_divisors(n: u64, w: f64, sieve: &FactorSieve) -> Vec<u64> {
    divisors(n, sieve)
        .into_iter()
        .filter(|&k| is_admissible_split(k, n / k, w, sieve))
        .collect()
}

/// Both sides of the partition behind the `w`-split: the direct sum of `f`
/// over `S(x, y) ∩ [w, x]`, and the double sum over `k` with
/// `w <= k < w P(k)`, `P(k) <= y`, and `m` in `S(x / k, y)` with `p(m) >= P(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSums {
    pub direct: Complex64,
    pub split: Complex64,
    pub direct_terms: u64,
    pub split_terms: u64,
}

pub fn split_partition_sums<F>(x: f64, y: f64, w: f64, f: F) -> Result<PartitionSums>
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if !(w > 1.0) {
        return Err(Error::Domain(format!("w = {w} must exceed 1")));
    }
    let xi = floor_bound(x);
    let yi = floor_bound(y);
    if xi < 1 {
        return Err(Error::Domain("x must be at least 1".into()));
    }
    let sieve = FactorSieve::build(1, xi)?;
    let smooth = |n: u64| sieve.lpf(n) <= yi;

    let mut direct = CompensatedSum::new();
    let mut direct_terms = 0;
    for n in 1..=xi {
        if n as f64 >= w && smooth(n) {
            direct.push(f(n));
            direct_terms += 1;
        }
    }

    let k_lo = w.ceil().max(2.0) as u64;
    let k_hi = xi.min(floor_bound(w * y));
    let parts: Vec<(CompensatedSum, u64)> = (k_lo..=k_hi.max(k_lo - 1))
        .into_par_iter()
        .filter(|&k| smooth(k) && (((k / sieve.lpf(k)) as f64) < w))
        .map(|k| {
            let big = sieve.lpf(k);
            let mut acc = CompensatedSum::new();
            let mut terms = 0;
            for m in 1..=xi / k {
                if m == 1 || (smooth(m) && sieve.spf(m) >= big) {
                    acc.push(f(k * m));
                    terms += 1;
                }
            }
            (acc, terms)
        })
        .collect();
    let mut split = CompensatedSum::new();
    let mut split_terms = 0;
    for (s, t) in parts {
        split = split + s;
        split_terms += t;
    }
    Ok(PartitionSums { direct: direct.value(), split: split.value(), direct_terms, split_terms })
}

/// `sum_{n <= x} f(n) + sum_j (-1)^j corrections[j - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuchstabExpansion {
    pub r: u32,
    pub order: PrimeOrder,
    pub main: Complex64,
    pub corrections: Vec<Complex64>,
}

impl BuchstabExpansion {
    pub fn recombine(&self) -> Complex64 {
        let mut acc = CompensatedSum::new();
        acc.push(self.main);
        for (i, &c) in self.corrections.iter().enumerate() {
            acc.push(if i % 2 == 0 { -c } else { c });
        }
        acc.value()
    }
}

/// Sum of `f` over `S(x, y)`, directly.
pub fn smooth_sum<F>(f: F, x: f64, y: f64) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let scan = SmoothScan::new(x, y);
    let parts = scan.map_segments(|members| members.iter().map(|&n| f(n)).sum::<CompensatedSum>());
    parts.into_iter().fold(CompensatedSum::new(), |a, b| a + b).value()
}

/// Whether no `r + 1` primes from `primes` (ascending, all `> y`) fit under
/// `x`, so the expansion stops at depth `r`. Implied by `y^(r+1) > x`.
fn terminates(primes: &[u64], r: u32, x: u64, order: PrimeOrder) -> bool {
    let need = r as usize + 1;
    let mut product = 1u64;
    for i in 0..need {
        let p = match order {
            PrimeOrder::Strict => primes.get(i),
            PrimeOrder::NonDecreasing => primes.first(),
        };
        let Some(&p) = p else { return true };
        product = match product.checked_mul(p) {
            Some(v) if v <= x => v,
            _ => return true,
        };
    }
    false
}

/// Smallest depth `r` that `buchstab_expand` accepts.
pub fn buchstab_depth(x: f64, y: f64, order: PrimeOrder) -> u32 {
    let xi = floor_bound(x);
    let primes = sieve::primes_between(floor_bound(y), xi);
    (1..).find(|&r| terminates(&primes, r, xi, order)).unwrap()
}

/// Expands the smooth sum of `f` into the full sum minus the terms carrying
/// primes above `y`, one prime at a time. With `PrimeOrder::Strict` the
/// recombination equals the smooth sum exactly once no `n <= x` has `r + 1`
/// distinct prime factors above `y`; anything shallower is refused.
pub fn buchstab_expand<F>(f: F, x: f64, y: f64, r: u32, order: PrimeOrder) -> Result<BuchstabExpansion>
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if r == 0 {
        return Err(Error::Domain("r must be positive".into()));
    }
    let xi = floor_bound(x);
    let yi = floor_bound(y);
    let primes = sieve::primes_between(yi, xi);
    if !terminates(&primes, r, xi, order) {
        return Err(Error::IncompleteExpansion { r, x, y });
    }
    let main = (1..=xi)
        .into_par_iter()
        .fold(CompensatedSum::new, |mut acc, n| {
            acc.push(f(n));
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(CompensatedSum::new(), |a, b| a + b)
        .value();
    let corrections = (1..=r)
        .map(|j| {
            let mut products = Vec::new();
            for_each_prime_tuple(&primes, j, xi, order, &mut |p| products.push(p));
            products
                .par_iter()
                .map(|&prod| (1..=xi / prod).map(|m| f(m * prod)).sum::<CompensatedSum>())
                .collect::<Vec<_>>()
                .into_iter()
                .fold(CompensatedSum::new(), |a, b| a + b)
                .value()
        })
        .collect();
    Ok(BuchstabExpansion { r, order, main, corrections })
}

/// Outcome of a pointwise identity check over a range of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub checked: u64,
    pub max_abs_error: f64,
    pub first_failure: Option<u64>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Relative tolerance used by the identity checks.
pub const IDENTITY_TOL: f64 = 1e-9;

fn compare(range: impl Iterator<Item = u64>, lhs: &[f64], rhs: &[f64], scale: &[f64]) -> IdentityReport {
    let mut report = IdentityReport { checked: 0, max_abs_error: 0.0, first_failure: None };
    for n in range {
        let i = n as usize;
        let err = (lhs[i] - rhs[i]).abs();
        report.checked += 1;
        report.max_abs_error = report.max_abs_error.max(err);
        if err > IDENTITY_TOL * (1.0 + scale[i]) && report.first_failure.is_none() {
            report.first_failure = Some(n);
        }
    }
    report
}

/// Dirichlet convolution of two arithmetic functions on `[1, n_max]`
/// (index 0 ignored).
pub fn dirichlet(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n_max = a.len().min(b.len()) - 1;
    let mut out = vec![0.0; n_max + 1];
    for d in 1..=n_max {
        if a[d] == 0.0 {
            continue;
        }
        let mut m = 1;
        while d * m <= n_max {
            out[d * m] += a[d] * b[m];
            m += 1;
        }
    }
    out
}

fn arithmetic_tables(n_max: u64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let sieve = FactorSieve::build(1, n_max.max(1))?;
    let mu: Vec<f64> = sieve.mobius_table().into_iter().map(f64::from).collect();
    let lambda = sieve.von_mangoldt_table();
    let log: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { (n as f64).ln() }).collect();
    let one: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { 1.0 }).collect();
    Ok((mu, lambda, log, one))
}

/// The three pieces of Vaughan's identity for `n <= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct VaughanParts {
    /// `sum_{b | n, b <= u} mu(b) log(n / b)`
    pub type_one: Vec<f64>,
    /// `sum_{bc | n, b <= u, c <= v} mu(b) Lambda(c)`
    pub type_one_restricted: Vec<f64>,
    /// `sum_{bc | n, b > u, c > v} mu(b) Lambda(c)`
    pub type_two: Vec<f64>,
    pub lambda: Vec<f64>,
}

pub fn vaughan_parts(n_max: u64, u: f64, v: f64) -> Result<VaughanParts> {
    if !(u >= 1.0 && v >= 1.0) {
        return Err(Error::Domain("u and v must be at least 1".into()));
    }
    let (mu, lambda, log, one) = arithmetic_tables(n_max)?;
    let cut = |f: &[f64], keep: &dyn Fn(f64) -> bool| -> Vec<f64> {
        f.iter().enumerate().map(|(n, &val)| if keep(n as f64) { val } else { 0.0 }).collect()
    };
    let mu_small = cut(&mu, &|n| n <= u);
    let mu_large = cut(&mu, &|n| n > u);
    let lambda_small = cut(&lambda, &|n| n <= v);
    let lambda_large = cut(&lambda, &|n| n > v);
    Ok(VaughanParts {
        type_one: dirichlet(&mu_small, &log),
        type_one_restricted: dirichlet(&dirichlet(&mu_small, &lambda_small), &one),
        type_two: dirichlet(&dirichlet(&mu_large, &lambda_large), &one),
        lambda,
    })
}

/// Checks `Lambda(n) = type_one - type_one_restricted + type_two` for every
/// `n` in `(v, n_max]`.
pub fn vaughan_lambda_check(n_max: u64, u: f64, v: f64) -> Result<IdentityReport> {
    let parts = vaughan_parts(n_max, u, v)?;
    let rhs: Vec<f64> = (0..=n_max as usize)
        .map(|n| parts.type_one[n] - parts.type_one_restricted[n] + parts.type_two[n])
        .collect();
    let scale: Vec<f64> = (0..=n_max as usize)
        .map(|n| parts.type_one[n].abs() + parts.type_one_restricted[n].abs() + parts.type_two[n].abs())
        .collect();
    let start = floor_bound(v) + 1;
    Ok(compare(start..=n_max, &parts.lambda, &rhs, &scale))
}

/// Right-hand side of the Heath-Brown identity with `J` factors of the
/// Moebius function truncated at `z`, on `[1, n_max]`.
pub fn heath_brown_rhs(n_max: u64, j_max: u32, z: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if j_max == 0 {
        return Err(Error::Domain("J must be positive".into()));
    }
    let reach = z.powi(j_max as i32);
    if reach < n_max as f64 {
        return Err(Error::IdentityRange { reach, n_max });
    }
    let (mu, lambda, log, one) = arithmetic_tables(n_max)?;
    let mu_z: Vec<f64> = mu.iter().enumerate().map(|(n, &m)| if n as f64 <= z { m } else { 0.0 }).collect();
    // term_j = (mu_z * 1)^{*(j-1)} * (mu_z * log)
    let base = dirichlet(&mu_z, &log);
    let step = dirichlet(&mu_z, &one);
    let mut term = base;
    let mut rhs = vec![0.0; n_max as usize + 1];
    let mut scale = vec![0.0; n_max as usize + 1];
    let mut binom = 1.0;
    for j in 1..=j_max {
        binom = binom * (j_max - j + 1) as f64 / j as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        for n in 1..=n_max as usize {
            rhs[n] += sign * binom * term[n];
            scale[n] += (binom * term[n]).abs();
        }
        if j < j_max {
            term = dirichlet(&step, &term);
        }
    }
    Ok((lambda, rhs, scale))
}

/// Checks `Lambda(n) = sum_{j=1}^{J} (-1)^{j-1} C(J, j)
/// (mu_z^{*j} * log * 1^{*(j-1)})(n)` for all `n <= n_max`.
pub fn heath_brown_lambda_check(n_max: u64, j_max: u32, z: f64) -> Result<IdentityReport> {
    let (lambda, rhs, scale) = heath_brown_rhs(n_max, j_max, z)?;
    Ok(compare(1..=n_max, &lambda, &rhs, &scale))
}

/// Weights regrouping `(p_1, m)` into `l` and `(p_2, ..., p_j)` into `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearRegroup {
    pub j: u32,
    pub x: u64,
    pub y: u64,
    /// `beta[l]`: number of primes `p > y` dividing `l`.
    pub beta: Vec<u64>,
    /// `gamma[n]`: number of ordered `(j-1)`-tuples of primes `> y` with product `n`.
    pub gamma: Vec<u64>,
    /// Terms of the regrouped sum whose prime tuple repeats a prime.
    pub diagonal_terms: u64,
    /// Terms whose primes are pairwise distinct.
    pub distinct_terms: u64,
}

fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

pub fn bilinear_regroup(j: u32, x: f64, y: f64) -> Result<BilinearRegroup> {
    if j < 2 {
        return Err(Error::Domain("bilinear regrouping needs j >= 2".into()));
    }
    let xi = floor_bound(x);
    let yi = floor_bound(y);
    let sieve = FactorSieve::build(1, xi.max(1))?;
    let mut beta = vec![0u64; xi as usize + 1];
    let mut gamma = vec![0u64; xi as usize + 1];
    for n in 2..=xi {
        let factors = sieve.factorize(n);
        let mut distinct = factors.clone();
        distinct.dedup();
        beta[n as usize] = distinct.iter().filter(|&&p| p > yi).count() as u64;
        if factors.len() == (j - 1) as usize && factors[0] > yi {
            let mut count = factorial(j - 1);
            let mut i = 0;
            while i < factors.len() {
                let run = factors[i..].iter().take_while(|&&p| p == factors[i]).count();
                count /= factorial(run as u32);
                i += run;
            }
            gamma[n as usize] = count;
        }
    }
    let mut total = 0u64;
    for n in 1..=xi {
        let g = gamma[n as usize];
        if g == 0 {
            continue;
        }
        for l in 1..=xi / n {
            total += beta[l as usize] * g;
        }
    }
    let primes = sieve::primes_between(yi, xi);
    let mut strict = 0u64;
    for_each_prime_tuple(&primes, j, xi, PrimeOrder::Strict, &mut |p| strict += xi / p);
    let distinct_terms = strict * factorial(j);
    Ok(BilinearRegroup {
        j,
        x: xi,
        y: yi,
        beta,
        gamma,
        diagonal_terms: total - distinct_terms,
        distinct_terms,
    })
}

impl BilinearRegroup {
    /// `sum_n sum_{l <= x / n} beta_l gamma_n f(l n)`.
    pub fn regrouped_sum<F>(&self, f: F) -> Complex64
    where
        F: Fn(u64) -> Complex64 + Sync,
    {
        let xi = self.x;
        (1..=xi)
            .into_par_iter()
            .filter(|&n| self.gamma[n as usize] > 0)
            .map(|n| {
                let g = self.gamma[n as usize] as f64;
                let mut acc = CompensatedSum::new();
                for l in 1..=xi / n {
                    let b = self.beta[l as usize];
                    if b > 0 {
                        acc.push(f(l * n) * (b as f64 * g));
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(CompensatedSum::new(), |a, b| a + b)
            .value()
    }

    /// `|diagonal| / (x / sqrt(y))`, the size of the repeated-prime defect
    /// relative to its expected order.
    pub fn diagonal_ratio(&self) -> f64 {
        self.diagonal_terms as f64 / (self.x as f64 / (self.y.max(1) as f64).sqrt())
    }
}

/// Sum over ordered tuples of `j` pairwise distinct primes `> y` (any order)
/// and `m <= x / (p_1...p_j)` of `f(m p_1...p_j)`: `j!` times the strictly
/// ordered convolution.
pub fn relaxed_distinct_sum<F>(j: u32, x: f64, y: f64, f: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    tuple_sum(j, x, y, PrimeOrder::Strict, &|_| factorial(j), f)
}

/// The repeated-prime part of the relaxed sum: tuples of `j` primes `> y`
/// with at least one repetition, each multiset weighted by its number of
/// orderings.
pub fn diagonal_sum<F>(j: u32, x: f64, y: f64, f: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    tuple_sum(j, x, y, PrimeOrder::NonDecreasing, &|factors: &[u64]| {
        let mut count = factorial(j);
        let mut repeated = false;
        let mut i = 0;
        while i < factors.len() {
            let run = factors[i..].iter().take_while(|&&p| p == factors[i]).count();
            repeated |= run > 1;
            count /= factorial(run as u32);
            i += run;
        }
        if repeated {
            count
        } else {
            0
        }
    }, f)
}

fn tuple_sum<F>(j: u32, x: f64, y: f64, order: PrimeOrder, weight: &dyn Fn(&[u64]) -> u64, f: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let xi = floor_bound(x);
    let yi = floor_bound(y);
    let primes = sieve::primes_between(yi, xi);
    let mut tuples: Vec<(u64, u64)> = Vec::new();
    let mut stack = Vec::new();
    fn rec(
        primes: &[u64],
        start: usize,
        left: u32,
        product: u64,
        limit: u64,
        order: PrimeOrder,
        stack: &mut Vec<u64>,
        weight: &dyn Fn(&[u64]) -> u64,
        out: &mut Vec<(u64, u64)>,
    ) {
        if left == 0 {
            let w = weight(stack);
            if w > 0 {
                out.push((product, w));
            }
            return;
        }
        for i in start..primes.len() {
            let p = primes[i];
            match (0..left).try_fold(product, |acc, _| acc.checked_mul(p)) {
                Some(v) if v <= limit => {}
                _ => break,
            }
            stack.push(p);
            let next = if order == PrimeOrder::Strict { i + 1 } else { i };
            rec(primes, next, left - 1, product * p, limit, order, stack, weight, out);
            stack.pop();
        }
    }
    rec(&primes, 0, j, 1, xi, order, &mut stack, weight, &mut tuples);
    tuples
        .par_iter()
        .map(|&(prod, w)| {
            let mut acc = CompensatedSum::new();
            for m in 1..=xi / prod {
                acc.push(f(m * prod) * w as f64);
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(CompensatedSum::new(), |a, b| a + b)
        .value()
}

//! Identity suites behind `verify`. Each suite reports pass/fail and, on
//! failure, the smallest counterexample it can locate.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;

use friable_core::arith::eq_phase;
use friable_core::decomp;
use friable_core::optimizer;
use friable_core::sieve::{self, FactorSieve};
use friable_core::sums::{self, PrimeOrder};

use crate::grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Buchstab,
    Wsplit,
    Vaughan,
    HeathBrown,
    Bilinear,
    Weil,
    Optimizer,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Buchstab, Suite::Wsplit, Suite::Vaughan, Suite::HeathBrown, Suite::Bilinear, Suite::Weil, Suite::Optimizer];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Buchstab => "buchstab",
            Suite::Wsplit => "wsplit",
            Suite::Vaughan => "vaughan",
            Suite::HeathBrown => "heath-brown",
            Suite::Bilinear => "bilinear",
            Suite::Weil => "weil",
            Suite::Optimizer => "optimizer",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub x: f64,
    pub y: f64,
    pub r: Option<u32>,
    pub seed: u64,
    /// Corrupts one term of the Buchstab expansion, to exercise failure paths.
    pub sabotage: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { x: 1e4, y: 25.0, r: None, seed: 1, sabotage: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub suite: Suite,
    pub passed: bool,
    pub checks: u64,
    pub detail: String,
}

impl Outcome {
    fn pass(suite: Suite, checks: u64, detail: String) -> Self {
        Outcome { suite, passed: true, checks, detail }
    }

    fn fail(suite: Suite, checks: u64, detail: String) -> Self {
        Outcome { suite, passed: false, checks, detail }
    }
}

pub fn run(suite: Suite, cfg: &VerifyConfig) -> Outcome {
    let result = match suite {
        Suite::Buchstab => buchstab(cfg),
        Suite::Wsplit => wsplit(cfg),
        Suite::Vaughan => vaughan(cfg),
        Suite::HeathBrown => heath_brown(),
        Suite::Bilinear => bilinear(cfg),
        Suite::Weil => weil(),
        Suite::Optimizer => optimizer_oracle(cfg),
    };
    result.unwrap_or_else(|e| Outcome::fail(suite, 0, format!("error: {e}")))
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-9 * a.norm().max(b.norm()).max(1.0)
}

fn phase(a: i64, q: u64) -> impl Fn(u64) -> Complex64 + Sync {
    move |n| eq_phase(a as i128 * n as i128, q).expect("q > 0").to_complex()
}

fn smallest_r(x: f64, y: f64) -> u32 {
    decomp::buchstab_depth(x, y, PrimeOrder::Strict)
}

/// Largest power of two up to `x / 2`: smooth for every `y >= 2`.
fn sabotage_point(x: f64) -> u64 {
    let half = (x / 2.0).max(1.0) as u64;
    1u64 << (63 - half.leading_zeros())
}

fn buchstab_holds(x: f64, y: f64, r: u32, a: i64, q: u64, flip: Option<u64>) -> friable_core::Result<bool> {
    let f = phase(a, q);
    let g = |n: u64| if Some(n) == flip { -f(n) } else { f(n) };
    let e = decomp::buchstab_expand(g, x, y, r, PrimeOrder::Strict)?;
    Ok(close(e.recombine(), decomp::smooth_sum(&f, x, y)))
}

fn buchstab(cfg: &VerifyConfig) -> friable_core::Result<Outcome> {
    let (x, y) = (cfg.x, cfg.y);
    let r = cfg.r.unwrap_or_else(|| smallest_r(x, y));
    let flip = cfg.sabotage.then(|| sabotage_point(x));
    let mut rng = SplitMix64::seed_from_u64(cfg.seed);
    let mut checks = 0;
    for _ in 0..10 {
        let q = rng.random_range(2..1000u64);
        let a = loop {
            let a = rng.random_range(1..q) as i64;
            if grid::coprime(a, q) {
                break a;
            }
        };
        checks += 1;
        if !buchstab_holds(x, y, r, a, q, flip)? {
            // Failures persist once the bad term is inside the range, so
            // bisect for the smallest failing x.
            let (mut lo, mut hi) = (0u64, sieve::floor_bound(x));
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if buchstab_holds(mid as f64, y, r, a, q, flip)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Outcome::fail(
                Suite::Buchstab,
                checks,
                format!("counterexample x={hi} y={y} r={r} q={q} a={a}"),
            ));
        }
    }
    Ok(Outcome::pass(Suite::Buchstab, checks, format!("x={x} y={y} r={r}, 10 random (a, q)")))
}

fn wsplit(cfg: &VerifyConfig) -> friable_core::Result<Outcome> {
    let n_max = sieve::floor_bound(cfg.x);
    let s = FactorSieve::build(1, n_max.max(2))?;
    let mut checks = 0;
    for w in [3.0, 10.0, 50.0] {
        for n in (w as u64)..=n_max {
            checks += 1;
            let ks = decomp::admissible_divisors(n, w, &s);
            if ks.len() != 1 {
                return Ok(Outcome::fail(
                    Suite::Wsplit,
                    checks,
                    format!("counterexample n={n} w={w} admissible={ks:?}"),
                ));
            }
        }
    }
    for w in [10.0, 100.0] {
        checks += 1;
        let p = decomp::split_partition_sums(cfg.x, cfg.y, w, phase(1, 1009))?;
        if !close(p.direct, p.split) {
            return Ok(Outcome::fail(
                Suite::Wsplit,
                checks,
                format!("partition mismatch x={} y={} w={w}: {} vs {}", cfg.x, cfg.y, p.direct, p.split),
            ));
        }
    }
    Ok(Outcome::pass(Suite::Wsplit, checks, format!("n <= {n_max}, w in {{3, 10, 50}}; partition w in {{10, 100}}")))
}

fn vaughan(cfg: &VerifyConfig) -> friable_core::Result<Outcome> {
    let n_max = sieve::floor_bound(cfg.x.min(1e4));
    let rep = decomp::vaughan_lambda_check(n_max, 10.0, 20.0)?;
    Ok(match rep.first_failure {
        None => Outcome::pass(Suite::Vaughan, rep.checked, format!("n in (20, {n_max}], u=10 v=20")),
        Some(n) => Outcome::fail(Suite::Vaughan, rep.checked, format!("counterexample n={n}")),
    })
}

fn heath_brown() -> friable_core::Result<Outcome> {
    let rep = decomp::heath_brown_lambda_check(5000, 3, 18.0)?;
    Ok(match rep.first_failure {
        None => Outcome::pass(Suite::HeathBrown, rep.checked, "n <= 5000, J=3 z=18".into()),
        Some(n) => Outcome::fail(Suite::HeathBrown, rep.checked, format!("counterexample n={n}")),
    })
}

fn bilinear(cfg: &VerifyConfig) -> friable_core::Result<Outcome> {
    let (x, y) = (cfg.x, 10.0);
    let f = phase(3, 1009);
    let mut checks = 0;
    for j in [2u32, 3] {
        checks += 1;
        let g = decomp::bilinear_regroup(j, x, y)?;
        let lhs = g.regrouped_sum(&f);
        let rhs = decomp::relaxed_distinct_sum(j, x, y, &f) + decomp::diagonal_sum(j, x, y, &f);
        let ones = |_: u64| Complex64::new(1.0, 0.0);
        let diag = decomp::diagonal_sum(j, x, y, ones).re;
        if !close(lhs, rhs) || diag != g.diagonal_terms as f64 {
            return Ok(Outcome::fail(Suite::Bilinear, checks, format!("counterexample j={j} x={x} y={y}")));
        }
    }
    Ok(Outcome::pass(Suite::Bilinear, checks, format!("j in {{2, 3}}, x={x} y={y}")))
}

fn weil() -> friable_core::Result<Outcome> {
    let mut checks = 0;
    for q in sieve::primes_up_to(199) {
        for nu in 2..=6i64 {
            for a in 1..=(q - 1).min(20) as i64 {
                checks += 1;
                let s = sums::complete_monomial_sum(q, a, nu)?;
                let full = (s.value + Complex64::new(1.0, 0.0)).norm();
                if full > (nu - 1) as f64 * (q as f64).sqrt() + 1e-6 {
                    return Ok(Outcome::fail(Suite::Weil, checks, format!("counterexample q={q} nu={nu} a={a} |S|={full}")));
                }
            }
        }
    }
    Ok(Outcome::pass(Suite::Weil, checks, "primes q <= 199, nu in 2..=6, a <= 20".into()))
}

fn optimizer_oracle(cfg: &VerifyConfig) -> friable_core::Result<Outcome> {
    let mut rng = SplitMix64::seed_from_u64(cfg.seed);
    for i in 0..200u64 {
        let (alpha, beta) = (rng.random::<f64>(), rng.random::<f64>());
        let exact = optimizer::optimal_omega(alpha, beta)?;
        let oracle = optimizer::oracle_optimal_omega(alpha, beta, 1e-4)?;
        let ok = (exact.omega - oracle.omega).abs() <= 2e-4
            && (exact.kappa - oracle.kappa).abs() <= 1e-4
            && (exact.kappa - exact.omega / 2.0).abs() <= 1e-12;
        if !ok {
            return Ok(Outcome::fail(
                Suite::Optimizer,
                i + 1,
                format!("counterexample alpha={alpha} beta={beta} omega={} oracle={}", exact.omega, oracle.omega),
            ));
        }
    }
    Ok(Outcome::pass(Suite::Optimizer, 200, "200 seeded (alpha, beta), grid step 1e-4".into()))
}

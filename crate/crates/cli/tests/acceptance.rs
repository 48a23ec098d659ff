//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Reference values come from brute-force
//! oracles written here, independent of the library code paths.

use std::f64::consts::TAU;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;

use friable_core::bounds::Bound;
use friable_core::decomp;
use friable_core::optimizer::{self, regions};
use friable_core::sieve::FactorSieve;
use friable_core::sums::{self, PrimeOrder, SumParams, Weights};

type Outcome = Result<String, String>;

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn largest_prime_factor(n: u64) -> u64 {
    factor(n).last().map_or(1, |f| f.0)
}

fn is_prime(n: u64) -> bool {
    n >= 2 && factor(n) == [(n, 1)]
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn e_q(r: u64, q: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (r % q) as f64 / q as f64)
}

/// `n^nu mod q` by repeated multiplication; `None` for non-units when `nu < 0`.
fn power_residue(n: u64, nu: i64, q: u64) -> Option<u64> {
    let base = if nu < 0 { (1..q).find(|&t| (n % q) * t % q == 1)? } else { n % q };
    let mut r = 1 % q;
    for _ in 0..nu.unsigned_abs() {
        r = r * base % q;
    }
    Some(r)
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-9 * a.norm().max(b.norm()).max(1.0)
}

fn random_unit(rng: &mut SplitMix64, q: u64) -> u64 {
    if q == 1 {
        return 0;
    }
    loop {
        let a = rng.random_range(1..q);
        if gcd(a, q) == 1 {
            return a;
        }
    }
}

fn smooth_up_to(x: u64, y: u64) -> Vec<u64> {
    (1..=x).filter(|&n| largest_prime_factor(n) <= y).collect()
}

fn within(started: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let t = started.elapsed();
    if t > limit {
        return Err(format!("{what} took {t:.1?}, limit {limit:?}"));
    }
    Ok(t)
}

fn buchstab_exactness() -> Outcome {
    let started = Instant::now();
    let mut rng = SplitMix64::seed_from_u64(1);
    let mut worst = 0.0f64;
    for (x, y, r) in [(10_000u64, 25u64, 3u32), (30_000, 12, 3), (100_000, 7, 6)] {
        let smooth = smooth_up_to(x, y);
        for _ in 0..10 {
            let q = rng.random_range(2..1000u64);
            let a = random_unit(&mut rng, q);
            let want: Complex64 = smooth.iter().map(|&n| e_q(a * n % q, q)).sum();
            let e = decomp::buchstab_expand(
                |n: u64| e_q(a * (n % q) % q, q),
                x as f64,
                y as f64,
                r,
                PrimeOrder::Strict,
            )
            .map_err(|e| format!("x={x} y={y} r={r}: {e}"))?;
            let got = e.recombine();
            let rel = (got - want).norm() / want.norm().max(1.0);
            worst = worst.max(rel);
            if rel > 1e-9 {
                return Err(format!("x={x} y={y} r={r} q={q} a={a}: relative error {rel:.3e}"));
            }
        }
    }
    let t = within(started, Duration::from_secs(60), "Buchstab")?;
    Ok(format!("30 expansions, worst relative error {worst:.2e}, {t:.1?}"))
}

/// Smallest and largest prime factor tables up to `n`, by a plain
/// Eratosthenes pass.
fn prime_factor_tables(n: usize) -> (Vec<u64>, Vec<u64>) {
    let mut small = vec![0u64; n + 1];
    let mut large = vec![1u64; n + 1];
    for p in 2..=n {
        if small[p] == 0 {
            for m in (p..=n).step_by(p) {
                if small[m] == 0 {
                    small[m] = p as u64;
                }
                large[m] = p as u64;
            }
        }
    }
    (small, large)
}

fn wsplit_uniqueness() -> Outcome {
    const N: usize = 100_000;
    let (small, large) = prime_factor_tables(N);
    let spf = |m: u64| if m == 1 { u64::MAX } else { small[m as usize] };
    let sieve = FactorSieve::build(1, N as u64).map_err(|e| e.to_string())?;
    let mut checked = 0u64;
    for w in [3.0, 10.0, 50.0, 316.0] {
        for n in (w as u64)..=N as u64 {
            let mut found = Vec::new();
            let mut d = 1;
            while d * d <= n {
                if n % d == 0 {
                    for k in [d, n / d] {
                        let big = large[k as usize];
                        let kf = k as f64;
                        if k > 1 && kf >= w && kf < w * big as f64 && big <= spf(n / k) && !found.contains(&k) {
                            found.push(k);
                        }
                    }
                }
                d += 1;
            }
            if found.len() != 1 {
                return Err(format!("n={n} w={w}: admissible divisors {found:?}"));
            }
            let split = decomp::w_split(n, w, &sieve).map_err(|e| e.to_string())?;
            if split.k != found[0] || split.k * split.m != n {
                return Err(format!("n={n} w={w}: split {split:?} vs oracle k={}", found[0]));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (n, w) pairs, zero violations"))
}

fn partition_identity() -> Outcome {
    let (x, q, a) = (100_000u64, 1009u64, 3u64);
    let mut worst = 0.0f64;
    for y in [10u64, 100] {
        let smooth = smooth_up_to(x, y);
        for w in [10u64, 100] {
            let want: Complex64 = smooth.iter().filter(|&&n| n >= w).map(|&n| e_q(a * n, q)).sum();
            let p = decomp::split_partition_sums(x as f64, y as f64, w as f64, |n: u64| e_q(a * (n % q), q))
                .map_err(|e| e.to_string())?;
            for (what, v) in [("direct", p.direct), ("split", p.split)] {
                let rel = (v - want).norm() / want.norm().max(1.0);
                worst = worst.max(rel);
                if rel > 1e-9 {
                    return Err(format!("y={y} w={w}: {what} sum off by {rel:.3e}"));
                }
            }
            if p.direct_terms != p.split_terms {
                return Err(format!("y={y} w={w}: {} vs {} terms", p.direct_terms, p.split_terms));
            }
        }
    }
    Ok(format!("x=1e5, y in {{10, 100}}, w in {{10, 100}}, worst relative error {worst:.2e}"))
}

fn lambda_identities() -> Outcome {
    let started = Instant::now();
    let v = decomp::vaughan_lambda_check(10_000, 10.0, 20.0).map_err(|e| e.to_string())?;
    if !v.holds() {
        return Err(format!("Vaughan fails at n={:?}, max error {:.3e}", v.first_failure, v.max_abs_error));
    }
    let h = decomp::heath_brown_lambda_check(5000, 3, 18.0).map_err(|e| e.to_string())?;
    if !h.holds() {
        return Err(format!("Heath-Brown fails at n={:?}, max error {:.3e}", h.first_failure, h.max_abs_error));
    }
    let t = within(started, Duration::from_secs(120), "identity checks")?;
    Ok(format!(
        "Vaughan {} n, max error {:.1e}; Heath-Brown {} n, max error {:.1e}; {t:.1?}",
        v.checked, v.max_abs_error, h.checked, h.max_abs_error
    ))
}

fn weil_envelope() -> Outcome {
    let mut checked = 0u64;
    let mut worst = 0.0f64;
    for q in (2..=499u64).filter(|&q| is_prime(q)) {
        for nu in 2..=6i64 {
            for a in 1..=(q - 1).min(20) {
                let want: Complex64 = (0..q).map(|n| e_q(a * power_residue(n, nu, q).unwrap(), q)).sum();
                let s = sums::complete_monomial_sum(q, a as i64, nu).map_err(|e| e.to_string())?;
                let full = s.value + Complex64::new(1.0, 0.0);
                if !close(full, want) {
                    return Err(format!("q={q} nu={nu} a={a}: library {full} vs oracle {want}"));
                }
                let bound = (nu - 1) as f64 * (q as f64).sqrt();
                if want.norm() > bound + 1e-6 {
                    return Err(format!("q={q} nu={nu} a={a}: |S|={} > {bound}", want.norm()));
                }
                worst = worst.max(want.norm() / bound);
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} complete sums, max |S| / ((nu-1) sqrt q) = {worst:.4}"))
}

fn optimizer_equivalence() -> Outcome {
    let mut rng = SplitMix64::seed_from_u64(2024);
    let mut regimes = std::collections::BTreeSet::new();
    let (mut d_omega, mut d_kappa) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (alpha, beta): (f64, f64) = (rng.random(), rng.random());
        let exact = optimizer::optimal_omega(alpha, beta).map_err(|e| e.to_string())?;
        let oracle = optimizer::oracle_optimal_omega(alpha, beta, 1e-4).map_err(|e| e.to_string())?;
        let regime = optimizer::two_peaks_regime(alpha, beta).map_err(|e| e.to_string())?;
        regimes.insert(regime.name());
        let (dw, dk) = ((exact.omega - oracle.omega).abs(), (exact.kappa - oracle.kappa).abs());
        d_omega = d_omega.max(dw);
        d_kappa = d_kappa.max(dk);
        if dw > 2e-4 || dk > 1e-4 {
            return Err(format!("alpha={alpha} beta={beta}: omega {} vs {}, kappa {} vs {}", exact.omega, oracle.omega, exact.kappa, oracle.kappa));
        }
        let at_optimum = optimizer::kappa(exact.omega, alpha, beta);
        if (at_optimum - exact.omega / 2.0).abs() > 1e-12 || (exact.kappa - exact.omega / 2.0).abs() > 1e-12 {
            return Err(format!("alpha={alpha} beta={beta} ({}): kappa {at_optimum} != omega/2", regime.name()));
        }
    }
    if regimes.len() != 3 {
        return Err(format!("only regimes {regimes:?} were sampled"));
    }
    Ok(format!("1000 points over {regimes:?}, max |d omega| {d_omega:.1e}, max |d kappa| {d_kappa:.1e}"))
}

fn figure1_reproduction() -> Outcome {
    let q = |n: i64, d: i64| num_rational::Rational64::new(n, d);
    let v = |a: (i64, i64), b: (i64, i64)| regions::Vertex::new(q(a.0, a.1), q(b.0, b.1));
    let expected = [
        (Bound::E1, vec![v((0, 1), (0, 1)), v((1, 3), (1, 3)), v((1, 3), (2, 3)), v((1, 5), (4, 5)), v((0, 1), (2, 3))]),
        (
            Bound::E2,
            vec![
                v((0, 1), (0, 1)),
                v((1, 1), (0, 1)),
                v((1, 1), (1, 1)),
                v((1, 2), (1, 1)),
                v((1, 5), (4, 5)),
                v((1, 3), (2, 3)),
                v((1, 3), (1, 3)),
            ],
        ),
        (Bound::E3, vec![v((0, 1), (2, 3)), v((1, 2), (1, 1)), v((0, 1), (2, 1))]),
        (Bound::E4, vec![v((1, 2), (1, 1)), v((1, 1), (1, 1)), v((1, 1), (4, 3)), v((1, 3), (4, 3))]),
    ];
    let set = regions::figure1_regions();
    if set.polygons.len() != 4 {
        return Err(format!("{} polygons", set.polygons.len()));
    }
    for (label, want) in &expected {
        let got = set.polygons.get(label).ok_or(format!("{label} missing"))?;
        if got != want {
            return Err(format!("{label}: got {got:?}"));
        }
    }
    let has = |p: regions::Vertex| set.polygons.values().any(|poly| poly.contains(&p));
    if !has(v((1, 5), (4, 5))) || !has(v((1, 3), (4, 3))) {
        return Err("named vertices missing".into());
    }
    let ceiling = set
        .polygons
        .iter()
        .find(|(_, poly)| {
            (0..poly.len()).any(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                a.beta == q(4, 3) && b.beta == q(4, 3) && a.alpha != b.alpha
            })
        })
        .map(|(label, _)| *label)
        .ok_or("no edge on beta = 4/3")?;
    Ok(format!("all vertices exact; beta = 4/3 ceiling on the {ceiling} polygon, apex (1/3, 4/3)"))
}

fn oracle_equivalence() -> Outcome {
    const CASES: usize = 60;
    let mut rng = SplitMix64::seed_from_u64(8);
    for i in 0..CASES {
        let x = rng.random_range(1..=10_000u64);
        let y = rng.random_range(2..=300u64);
        let q = rng.random_range(2..=1000u64);
        let a = random_unit(&mut rng, q);
        let smooth = smooth_up_to(x, y);

        let p = SumParams::new(x as f64, y as f64, q, a as i64).map_err(|e| e.to_string())?;
        let got = sums::sum_linear(&p);
        let want: Complex64 = smooth.iter().map(|&n| e_q(a * (n % q), q)).sum();
        if !close(got.value, want) || got.terms != smooth.len() as u64 {
            return Err(format!("sum_linear case {i}: x={x} y={y} q={q} a={a}"));
        }

        let nu = [-2i64, -1, 2, 3, 4, 5][rng.random_range(0..6usize)];
        let got = sums::sum_power(&p.with_nu(nu).map_err(|e| e.to_string())?);
        let want: Complex64 =
            smooth.iter().filter_map(|&n| power_residue(n, nu, q)).map(|r| e_q(a * r, q)).sum();
        if !close(got.value, want) {
            return Err(format!("sum_power case {i}: x={x} y={y} q={q} a={a} nu={nu}"));
        }

        let weights = |rng: &mut SplitMix64, len: usize| -> Vec<Complex64> {
            (0..len).map(|_| Complex64::from_polar(rng.random::<f64>(), TAU * rng.random::<f64>())).collect()
        };
        let (ma, mb) = (rng.random_range(1..50u64), rng.random_range(1..50u64));
        let (la, lb) = (rng.random_range(1..80usize), rng.random_range(1..80usize));
        let alpha = Weights::new(ma, weights(&mut rng, la));
        let beta = Weights::new(mb, weights(&mut rng, lb));
        let got = sums::sum_bilinear(&alpha, &beta, x as f64, q, a as i64, 2).map_err(|e| e.to_string())?;
        let mut want = Complex64::new(0.0, 0.0);
        for (s, am) in alpha.values.iter().enumerate() {
            for (t, bn) in beta.values.iter().enumerate() {
                let n = (ma + s as u64) * (mb + t as u64);
                if n <= x {
                    want += am * bn * e_q(a * power_residue(n, 2, q).unwrap(), q);
                }
            }
        }
        if !close(got.value, want) {
            return Err(format!("sum_bilinear case {i}: x={x} q={q} a={a}"));
        }

        let j = rng.random_range(1..=3u32);
        let yc = rng.random_range(1..=60u64);
        let order = if i % 2 == 0 { PrimeOrder::Strict } else { PrimeOrder::NonDecreasing };
        let got = sums::sum_prime_convolution(j, x as f64, yc as f64, q, a as i64, 1, order).map_err(|e| e.to_string())?;
        let mut want = Complex64::new(0.0, 0.0);
        for n in 1..=x {
            // Ways to pick j primes above yc, as a set or multiset, whose
            // product divides n.
            let exps: Vec<u32> = factor(n).into_iter().filter(|&(p, _)| p > yc).map(|(_, e)| e).collect();
            let ways = count_choices(&exps, j, order);
            if ways > 0 {
                want += e_q(a * (n % q), q) * ways as f64;
            }
        }
        if !close(got.value, want) {
            return Err(format!("sum_prime_convolution case {i}: j={j} x={x} y={yc} q={q} a={a} {order:?}"));
        }

        let k = rng.random_range(1..=2u32);
        let m = rng.random_range(1..=if k == 1 { 200u64 } else { 12 });
        let nu_m = rng.random_range(1..=4i64);
        let got = sums::moment_count(k, nu_m, q, m).map_err(|e| e.to_string())?;
        let want = moment_oracle(k, nu_m, q, m);
        if got != want {
            return Err(format!("moment_count case {i}: k={k} nu={nu_m} q={q} M={m}: {got} vs {want}"));
        }
    }
    Ok(format!("{CASES} instances each of sum_linear, sum_power, sum_bilinear, sum_prime_convolution, moment_count"))
}

fn count_choices(exps: &[u32], j: u32, order: PrimeOrder) -> u64 {
    let Some((&e, rest)) = exps.split_first() else {
        return (j == 0) as u64;
    };
    let top = match order {
        PrimeOrder::Strict => 1,
        PrimeOrder::NonDecreasing => e,
    };
    (0..=top.min(j)).map(|t| count_choices(rest, j - t, order)).sum()
}

/// Direct enumeration of all `2k`-tuples in `[M, 2M]`.
fn moment_oracle(k: u32, nu: i64, q: u64, m: u64) -> u128 {
    let box_vals: Vec<u64> = (m..=2 * m).collect();
    let tuples = (box_vals.len() as u64).pow(2 * k);
    let mut count = 0u128;
    for mut code in 0..tuples {
        let mut lhs = 0u64;
        let mut rhs = 0u64;
        for slot in 0..2 * k {
            let v = box_vals[(code % box_vals.len() as u64) as usize];
            code /= box_vals.len() as u64;
            let r = power_residue(v, nu, q).unwrap();
            if slot < k {
                lhs = (lhs + r) % q;
            } else {
                rhs = (rhs + r) % q;
            }
        }
        count += (lhs == rhs) as u128;
    }
    count
}

fn child_peak_rss_bytes() -> u64 {
    let mut usage = std::mem::MaybeUninit::<libc::rusage>::zeroed();
    // SAFETY: getrusage fills the struct it is handed.
    let usage = unsafe {
        libc::getrusage(libc::RUSAGE_CHILDREN, usage.as_mut_ptr());
        usage.assume_init()
    };
    usage.ru_maxrss as u64 * 1024
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_friable-sums"))
}

fn performance_gate() -> Outcome {
    let started = Instant::now();
    let out = binary()
        .args(["sum", "--x", "1e8", "--y", "1e3", "--q", "1000003", "--a", "1"])
        .output()
        .map_err(|e| e.to_string())?;
    let t = started.elapsed();
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let rss = child_peak_rss_bytes();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let summary = format!("{t:.1?} on {cores} core(s), peak RSS {:.1} MiB", rss as f64 / (1u64 << 20) as f64);
    if t > Duration::from_secs(60) || rss > 1 << 30 {
        return Err(summary);
    }
    Ok(summary)
}

fn ratio_report() -> Outcome {
    let out = binary()
        .args(["scan", "--x", "1e6,1e7,1e8", "--y", "x^0.3", "--q", "x^0.6", "--next-prime", "--a", "1"])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    if lines.next() != Some("# friable-sums v1") {
        return Err("missing version line".into());
    }
    let header: Vec<&str> = lines.next().ok_or("missing header")?.split(',').collect();
    let (rows, notes): (Vec<&str>, Vec<&str>) = lines.partition(|l| !l.starts_with('#'));
    if rows.len() != 3 {
        return Err(format!("{} rows", rows.len()));
    }
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != header.len() {
            return Err(format!("row has {} cells, header {}", cells.len(), header.len()));
        }
        for (name, cell) in header.iter().zip(&cells) {
            let v: f64 = cell.parse().map_err(|_| format!("{name} = {cell:?} is not numeric"))?;
            if name.starts_with("ratio_") && !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} = {v}"));
            }
        }
    }
    let diag = notes
        .iter()
        .find(|l| l.starts_with("# diagnostic ratio_THM1"))
        .ok_or("no ratio_THM1 diagnostic")?;
    let series = diag.split_whitespace().find_map(|w| w.strip_prefix("series=")).ok_or("no series")?;
    if series.split(';').count() != 3 || !diag.contains(" trend=") {
        return Err(format!("malformed diagnostic: {diag}"));
    }
    Ok(diag.trim_start_matches("# ").to_string())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("buchstab exactness", buchstab_exactness),
        ("w-split uniqueness", wsplit_uniqueness),
        ("partition identity", partition_identity),
        ("vaughan and heath-brown identities", lambda_identities),
        ("weil envelope", weil_envelope),
        ("optimizer equivalence", optimizer_equivalence),
        ("figure 1 reproduction", figure1_reproduction),
        ("oracle equivalence for sums", oracle_equivalence),
        ("performance gate", performance_gate),
        ("ratio report", ratio_report),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Grid expressions for scan axes.
//!
//! An axis is a comma-separated list of items. Each item is a number
//! (`1e6`, `997`), a geometric run `geom:START:STOP:COUNT`, or, for the `y`
//! and `q` axes, a power of the row's `x` such as `x^0.3`.

use std::fmt;

use friable_core::arith::gcd;

#[derive(Debug, Clone, PartialEq)]
pub enum GridItem {
    Value(f64),
    PowerOfX(f64),
}

impl GridItem {
    pub fn resolve(&self, x: f64) -> f64 {
        match *self {
            GridItem::Value(v) => v,
            GridItem::PowerOfX(e) => x.powf(e),
        }
    }
}

impl fmt::Display for GridItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridItem::Value(v) => write!(f, "{v}"),
            GridItem::PowerOfX(e) => write!(f, "x^{e}"),
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("not finite: {s:?}"));
    }
    Ok(v)
}

/// Parses an axis. `relative` allows `x^e` items.
pub fn parse_axis(spec: &str, relative: bool) -> Result<Vec<GridItem>, String> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some(rest) = item.strip_prefix("geom:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected geom:START:STOP:COUNT, got {item:?}"));
            }
            let (start, stop) = (number(parts[0])?, number(parts[1])?);
            let count: usize = parts[2].parse().map_err(|_| format!("bad count in {item:?}"))?;
            if count == 0 || start <= 0.0 || stop <= 0.0 {
                return Err(format!("geometric run needs positive endpoints and count: {item:?}"));
            }
            if count == 1 {
                out.push(GridItem::Value(start));
                continue;
            }
            let ratio = (stop / start).ln() / (count - 1) as f64;
            for i in 0..count {
                out.push(GridItem::Value(snap((start.ln() + ratio * i as f64).exp())));
            }
        } else if let Some(e) = item.strip_prefix("x^") {
            if !relative {
                return Err(format!("{item:?}: powers of x are only allowed for y and q"));
            }
            out.push(GridItem::PowerOfX(number(e)?));
        } else {
            out.push(GridItem::Value(number(item)?));
        }
    }
    if out.is_empty() {
        return Err("empty grid".into());
    }
    Ok(out)
}

/// `exp(ln ...)` lands a hair off integers; pull those back.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r
    } else {
        v
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    // Deterministic Miller-Rabin for 64-bit inputs.
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn next_prime(n: u64) -> u64 {
    (n.max(2)..).find(|&m| is_prime(m)).unwrap()
}

/// Rounds a resolved modulus to an integer, optionally snapping up to the
/// next prime.
pub fn modulus(value: f64, snap_prime: bool) -> Result<u64, String> {
    if !(value >= 1.0) || value > 9.0e18 {
        return Err(format!("modulus {value} out of range"));
    }
    let q = value.round() as u64;
    Ok(if snap_prime { next_prime(q) } else { q })
}

pub fn coprime(a: i64, q: u64) -> bool {
    gcd(a.rem_euclid(q as i64) as u64, q) == 1
}

//! Bound envelopes for the smooth sums, evaluated in log space, and the
//! ratio report `|S| / (x * envelope)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sums::{self, SumParams};

pub const DEFAULT_EPS: f64 = 0.01;
pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bound {
    FtRat,
    FtReal,
    Thm1,
    Cor12,
    E1,
    E2,
    E3,
    E4,
}

impl Bound {
    pub const ALL: [Bound; 8] =
        [Bound::FtRat, Bound::FtReal, Bound::Thm1, Bound::Cor12, Bound::E1, Bound::E2, Bound::E3, Bound::E4];

    pub fn name(self) -> &'static str {
        match self {
            Bound::FtRat => "FT_rat",
            Bound::FtReal => "FT_real",
            Bound::Thm1 => "THM1",
            Bound::Cor12 => "COR12",
            Bound::E1 => "E1",
            Bound::E2 => "E2",
            Bound::E3 => "E3",
            Bound::E4 => "E4",
        }
    }

    pub fn e(i: u8) -> Result<Bound> {
        match i {
            1 => Ok(Bound::E1),
            2 => Ok(Bound::E2),
            3 => Ok(Bound::E3),
            4 => Ok(Bound::E4),
            _ => Err(Error::BoundIndex(i)),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Logarithms of the three scales. Large `ln_x` lets the envelopes be
/// evaluated at sizes far beyond `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScale {
    pub ln_x: f64,
    pub ln_y: f64,
    pub ln_q: f64,
    /// `ln` of the factor `1 + x |theta - a/q|`.
    pub ln_l: f64,
}

impl LogScale {
    pub fn new(x: f64, y: f64, q: f64) -> Self {
        LogScale { ln_x: x.ln(), ln_y: y.ln(), ln_q: q.ln(), ln_l: 0.0 }
    }

    /// `y = x^alpha`, `q = x^beta`.
    pub fn from_exponents(ln_x: f64, alpha: f64, beta: f64) -> Self {
        LogScale { ln_x, ln_y: alpha * ln_x, ln_q: beta * ln_x, ln_l: 0.0 }
    }

    pub fn with_ln_l(mut self, ln_l: f64) -> Self {
        self.ln_l = ln_l;
        self
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln` of the envelope `bound` at scale `s`.
pub fn log_envelope(bound: Bound, s: &LogScale, eps: f64, delta: f64) -> f64 {
    let (lx, ly, lq) = (s.ln_x, s.ln_y, s.ln_q);
    let tail = [-lq / 2.0, -(lx - lq) / 2.0];
    match bound {
        Bound::FtRat => log_sum_exp(&[-lx / 4.0 + ly / 2.0, -lq / 2.0, (lq + ly - lx) / 2.0]),
        Bound::FtReal => log_envelope(Bound::FtRat, s, eps, delta) + s.ln_l,
        Bound::Thm1 => {
            let head = (-lx / 5.0).min(-(lx - ly) / 4.0);
            log_sum_exp(&[head, tail[0], tail[1]])
        }
        Bound::Cor12 => log_envelope(Bound::Thm1, s, eps, delta) + s.ln_l,
        Bound::E1 => log_sum_exp(&[-(lx - ly) / 4.0, tail[0], tail[1]]),
        Bound::E2 => log_sum_exp(&[-ly / 2.0, -lx / 4.0 + lq / 8.0, tail[0], tail[1]]),
        Bound::E3 => {
            let head = (-(lx - lq) / 4.0).min(-(lx - ly) / 4.0 + lq / 8.0);
            log_sum_exp(&[head, -lq / 4.0, -(lx - ly) / 4.0])
        }
        Bound::E4 => delta * log_sum_exp(&[-lq / 4.0, (0.75 + eps) * lq - lx]),
    }
}

/// Envelope exponent as `x -> infinity` with `y = x^alpha`, `q = x^beta`:
/// the largest term exponent (times `delta` for `E4`). `ln_l` is ignored.
pub fn envelope_exponent(bound: Bound, alpha: f64, beta: f64, eps: f64, delta: f64) -> f64 {
    let tail = (-beta / 2.0).max(-(1.0 - beta) / 2.0);
    match bound {
        Bound::FtRat | Bound::FtReal => (-0.25 + alpha / 2.0).max(-beta / 2.0).max((beta + alpha - 1.0) / 2.0),
        Bound::Thm1 | Bound::Cor12 => (-0.2f64).min(-(1.0 - alpha) / 4.0).max(tail),
        Bound::E1 => (-(1.0 - alpha) / 4.0).max(tail),
        Bound::E2 => (-alpha / 2.0).max(-0.25 + beta / 8.0).max(tail),
        Bound::E3 => {
            let head = (-(1.0 - beta) / 4.0).min(-(1.0 - alpha) / 4.0 + beta / 8.0);
            head.max(-beta / 4.0).max(-(1.0 - alpha) / 4.0)
        }
        Bound::E4 => delta * (-beta / 4.0).max((0.75 + eps) * beta - 1.0),
    }
}

/// `x^{-1/4} y^{1/2} + q^{-1/2} + (qy/x)^{1/2}`.
pub fn envelope_ft(x: f64, y: f64, q: f64) -> f64 {
    log_envelope(Bound::FtRat, &LogScale::new(x, y, q), DEFAULT_EPS, DEFAULT_DELTA).exp()
}

/// `min{x^{-1/5}, (x/y)^{-1/4}} + q^{-1/2} + (x/q)^{-1/2}`.
pub fn envelope_thm1(x: f64, y: f64, q: f64) -> f64 {
    log_envelope(Bound::Thm1, &LogScale::new(x, y, q), DEFAULT_EPS, DEFAULT_DELTA).exp()
}

pub fn envelope_e(i: u8, x: f64, y: f64, q: f64, eps: f64, delta: f64) -> Result<f64> {
    let bound = Bound::e(i)?;
    check_e4_params(eps, delta)?;
    Ok(log_envelope(bound, &LogScale::new(x, y, q), eps, delta).exp())
}

fn check_e4_params(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0) || !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("need eps > 0 and delta in (0, 1], got eps = {eps}, delta = {delta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LFactor {
    pub theta: f64,
    pub a: i64,
    pub q: u64,
    pub value: f64,
}

/// `1 + x |theta - a/q|`.
pub fn l_factor(x: f64, theta: f64, a: i64, q: u64) -> LFactor {
    let value = 1.0 + x * (theta - a as f64 / q as f64).abs();
    LFactor { theta, a, q, value }
}

/// `[x^eps, max(x^{4/3 - eps}, x^{2 - eps} / y^2)]`.
pub fn nontrivial_range_cor14(x: f64, y: f64, eps: f64) -> (f64, f64) {
    let lx = x.ln();
    let upper = ((4.0 / 3.0 - eps) * lx).max((2.0 - eps) * lx - 2.0 * y.ln());
    ((eps * lx).exp(), upper.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: SumParams,
    pub exact_abs: f64,
    pub psi: u64,
    pub l_factor: f64,
    pub envelopes: BTreeMap<Bound, f64>,
    pub ratios: BTreeMap<Bound, f64>,
}

impl BoundReport {
    /// Bounds whose envelope is at least 1, i.e. no better than trivial.
    pub fn trivial(&self) -> Vec<Bound> {
        self.envelopes.iter().filter(|(_, &v)| v >= 1.0).map(|(&b, _)| b).collect()
    }
}

/// Envelopes and ratios for an already computed `|S|`.
pub fn report_for(p: &SumParams, exact_abs: f64, psi: u64, eps: f64, delta: f64) -> Result<BoundReport> {
    check_e4_params(eps, delta)?;
    let x = p.x;
    let l = match p.theta() {
        Some(theta) => l_factor(x, theta, p.a(), p.q()).value,
        None => 1.0,
    };
    let s = LogScale::new(x, p.y, p.q() as f64).with_ln_l(l.ln());
    let mut envelopes = BTreeMap::new();
    let mut ratios = BTreeMap::new();
    for b in Bound::ALL {
        let ln_env = log_envelope(b, &s, eps, delta);
        envelopes.insert(b, ln_env.exp());
        ratios.insert(b, (exact_abs.ln() - x.ln() - ln_env).exp());
    }
    Ok(BoundReport { params: *p, exact_abs, psi, l_factor: l, envelopes, ratios })
}

/// Evaluates the sum (real `theta` if set, otherwise the monomial phase) and
/// fills every envelope and ratio.
pub fn report(p: &SumParams, eps: f64, delta: f64) -> Result<BoundReport> {
    check_e4_params(eps, delta)?;
    let value = match p.theta() {
        Some(_) => sums::sum_theta(p)?,
        None if p.nu() == 1 => sums::sum_linear(p),
        None => sums::sum_power(p),
    };
    report_for(p, value.abs(), value.terms, eps, delta)
}

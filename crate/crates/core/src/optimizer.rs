//! Exponent calculus for the power-moduli bound: the two-peak function
//! `eta`, the window minimum `kappa`, the closed-form optimal window start
//! and a grid oracle for it.
//!
//! Exponents are relative to `x`: `y = x^alpha`, `q = x^beta`, `w = x^omega`,
//! `M = x^mu`.

pub mod regions;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPoint {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `alpha < beta / 2`: the window fits under the first peak.
    InsideOnePeak,
    /// `beta / 2 <= alpha < beta`: the window sits under the crossing of the peaks.
    UnderIntersection,
    /// `beta <= alpha`: the window spans from one edge to the other.
    EdgeToEdge,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::InsideOnePeak => "inside-one-peak",
            Regime::UnderIntersection => "under-intersection",
            Regime::EdgeToEdge => "edge-to-edge",
        }
    }
}

/// `min{mu/2, 1/2 - beta/4 - mu/2}` on `[0, 1/2]`,
/// `min{mu/2 - beta/4, 1/2 - mu/2}` on `(1/2, 1]`.
pub fn eta(mu: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!("mu = {mu} outside [0, 1]")));
    }
    Ok(eta_unchecked(mu, beta))
}

fn eta_unchecked(mu: f64, beta: f64) -> f64 {
    if mu <= 0.5 {
        (mu / 2.0).min(0.5 - beta / 4.0 - mu / 2.0)
    } else {
        (mu / 2.0 - beta / 4.0).min(0.5 - mu / 2.0)
    }
}

/// Minimum of `eta` over `[omega, omega + alpha]`, the window clamped to
/// `[0, 1]`. Exact: `eta` is concave on each half, so the minimum sits at an
/// endpoint or at a breakpoint.
pub fn kappa(omega: f64, alpha: f64, beta: f64) -> f64 {
    let lo = omega.clamp(0.0, 1.0);
    let hi = (omega + alpha).clamp(lo, 1.0);
    [lo, hi, 0.5, 0.5 - beta / 4.0, 0.5 + beta / 4.0]
        .into_iter()
        .filter(|&mu| mu >= lo && mu <= hi)
        .map(|mu| eta_unchecked(mu, beta))
        .fold(f64::INFINITY, f64::min)
}

pub fn two_peaks_regime(alpha: f64, beta: f64) -> Result<Regime> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("regimes are defined for beta in [0, 1], got {beta}")));
    }
    check_alpha(alpha)?;
    Ok(if alpha < beta / 2.0 {
        Regime::InsideOnePeak
    } else if alpha < beta {
        Regime::UnderIntersection
    } else {
        Regime::EdgeToEdge
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Closed-form window start and the resulting `kappa = omega / 2`.
pub fn optimal_omega(alpha: f64, beta: f64) -> Result<ExponentPoint> {
    check_alpha(alpha)?;
    if !(0.0..=2.0).contains(&beta) {
        return Err(Error::Domain(format!("beta = {beta} outside [0, 2]")));
    }
    let omega = if beta <= 1.0 {
        match two_peaks_regime(alpha, beta)? {
            Regime::InsideOnePeak => 0.5 - beta / 4.0 - alpha / 2.0,
            Regime::UnderIntersection => (1.0 - beta) / 2.0,
            Regime::EdgeToEdge => (1.0 - alpha) / 2.0,
        }
    } else if alpha < 1.0 - beta / 2.0 {
        0.5 - beta / 4.0 - alpha / 2.0
    } else {
        return Err(Error::TrivialRegime(format!(
            "alpha = {alpha} >= 1 - beta/2 for beta = {beta}: no window gives a saving"
        )));
    };
    Ok(ExponentPoint { alpha, beta, omega, kappa: omega / 2.0 })
}

/// Brute-force maximization of `kappa` over `omega` on the grid
/// `0, step, 2 step, ..., 1`. Among near-ties (within `step / 4`) the
/// smallest `omega` wins.
pub fn oracle_optimal_omega(alpha: f64, beta: f64, step: f64) -> Result<ExponentPoint> {
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::Domain(format!("grid step {step} must lie in (0, 1e-3]")));
    }
    let count = (1.0 / step).round() as usize;
    let values: Vec<f64> = (0..=count).map(|i| kappa(i as f64 * step, alpha, beta)).collect();
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let i = values.iter().position(|&v| v >= best - step / 4.0).unwrap_or(0);
    Ok(ExponentPoint { alpha, beta, omega: i as f64 * step, kappa: values[i] })
}

/// Exponent of `x^{1 - beta/4} + x^omega + x^{1 - kappa}` after dividing by `x`.
pub fn assembled_exponent(p: &ExponentPoint) -> f64 {
    (-p.beta / 4.0).max(p.omega - 1.0).max(-p.kappa)
}

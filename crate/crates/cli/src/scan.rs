//! Parameter scans: grid expansion, work budget, parallel evaluation with
//! ordered output, and the ratio trend diagnostics.

use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use thiserror::Error;

use friable_core::bounds::{self, Bound};
use friable_core::sums::SumParams;

use crate::grid::{self, GridItem};
use crate::table::{Cell, Table};

pub const DEFAULT_BUDGET: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub enum ASelection {
    Fixed(i64),
    /// `k` residues drawn uniformly from the units mod `q`, per cell.
    Random(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub xs: Vec<f64>,
    pub ys: Vec<GridItem>,
    pub qs: Vec<GridItem>,
    pub a: ASelection,
    pub nu: i64,
    pub seed: u64,
    pub snap_prime: bool,
    pub eps: f64,
    pub delta: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSpec {
    pub x: f64,
    pub y: f64,
    pub q: u64,
    pub a: i64,
    /// Grid position `(x, y, q, a)`.
    pub index: (usize, usize, usize, usize),
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan: {0}")]
    Invalid(String),
    #[error("estimated work {estimate:.3e} terms exceeds budget {budget:.3e}")]
    Budget { estimate: f64, budget: f64 },
    #[error(transparent)]
    Core(#[from] friable_core::Error),
}

/// Per-cell generator; the cell index is folded into the seed so each cell
/// draws the same residues no matter how the grid is scheduled.
pub fn cell_rng(seed: u64, cell: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed ^ cell.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn random_units(q: u64, k: usize, rng: &mut SplitMix64) -> Vec<i64> {
    if q == 1 {
        return vec![0; k];
    }
    (0..k)
        .map(|_| loop {
            let a = rng.random_range(1..q) as i64;
            if grid::coprime(a, q) {
                break a;
            }
        })
        .collect()
}

/// Expands the grid in `x, y, q, a` order. Pairs with `gcd(a, q) != 1`
/// under a fixed `a` are dropped and listed in the returned notes.
pub fn plan(spec: &ScanSpec) -> Result<(Vec<RowSpec>, Vec<String>), ScanError> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut cell = 0u64;
    for (xi, &x) in spec.xs.iter().enumerate() {
        if !(x >= 1.0) {
            return Err(ScanError::Invalid(format!("x = {x} must be at least 1")));
        }
        for (yi, yitem) in spec.ys.iter().enumerate() {
            let y = yitem.resolve(x);
            for (qi, qitem) in spec.qs.iter().enumerate() {
                let q = grid::modulus(qitem.resolve(x), spec.snap_prime).map_err(ScanError::Invalid)?;
                let residues = match spec.a {
                    ASelection::Fixed(a) => {
                        if !grid::coprime(a, q) {
                            notes.push(format!("skipped x={x} y={y} q={q} a={a}: gcd(a, q) != 1"));
                            vec![]
                        } else {
                            vec![a]
                        }
                    }
                    ASelection::Random(k) => random_units(q, k, &mut cell_rng(spec.seed, cell)),
                };
                cell += 1;
                for (ai, a) in residues.into_iter().enumerate() {
                    rows.push(RowSpec { x, y, q, a, index: (xi, yi, qi, ai) });
                }
            }
        }
    }
    Ok((rows, notes))
}

/// Summed sieve length over all rows, an upper bound for the summed `Psi`.
pub fn estimate_work(rows: &[RowSpec]) -> f64 {
    rows.iter().map(|r| r.x.floor()).sum()
}

pub fn columns() -> Vec<String> {
    let mut cols: Vec<String> = ["x", "y", "q", "a", "nu", "abs_S", "psi"].iter().map(|s| s.to_string()).collect();
    cols.extend(Bound::ALL.iter().map(|b| format!("envelope_{b}")));
    cols.extend(Bound::ALL.iter().map(|b| format!("ratio_{b}")));
    cols
}

fn row_cells(r: &RowSpec, nu: i64, report: &bounds::BoundReport) -> Vec<Cell> {
    let mut cells = vec![
        Cell::Float(r.x),
        Cell::Float(r.y),
        r.q.into(),
        r.a.into(),
        nu.into(),
        report.exact_abs.into(),
        report.psi.into(),
    ];
    cells.extend(Bound::ALL.iter().map(|b| Cell::Float(report.envelopes[b])));
    cells.extend(Bound::ALL.iter().map(|b| Cell::Float(report.ratios[b])));
    cells
}

pub fn run(spec: &ScanSpec) -> Result<Table, ScanError> {
    let (rows, mut notes) = plan(spec)?;
    let estimate = estimate_work(&rows);
    if estimate > spec.budget {
        return Err(ScanError::Budget { estimate, budget: spec.budget });
    }
    let reports: Vec<bounds::BoundReport> = rows
        .par_iter()
        .map(|r| {
            let p = SumParams::new(r.x, r.y, r.q, r.a)?.with_nu(spec.nu)?;
            bounds::report(&p, spec.eps, spec.delta)
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(columns());
    for (r, rep) in rows.iter().zip(&reports) {
        table.push(row_cells(r, spec.nu, rep));
    }
    notes.extend(trend_notes(spec, &rows, &reports));
    table.notes = notes;
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Decreasing,
    Increasing,
    Mixed,
    Flat,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        let down = values.windows(2).all(|w| w[1] <= w[0]);
        let up = values.windows(2).all(|w| w[1] >= w[0]);
        match (down, up) {
            (true, true) => Trend::Flat,
            (true, false) => Trend::Decreasing,
            (false, true) => Trend::Increasing,
            (false, false) => Trend::Mixed,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Trend::Decreasing => "nonincreasing",
            Trend::Increasing => "nondecreasing",
            Trend::Mixed => "mixed",
            Trend::Flat => "flat",
        }
    }
}

/// One note per `(y, q, a)` cell that appears at two or more `x`: the
/// `THM1` ratio along increasing `x` and its trend.
fn trend_notes(spec: &ScanSpec, rows: &[RowSpec], reports: &[bounds::BoundReport]) -> Vec<String> {
    let mut keys: Vec<(usize, usize, usize)> = rows.iter().map(|r| (r.index.1, r.index.2, r.index.3)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut notes = Vec::new();
    for key in keys {
        let mut series: Vec<(f64, f64)> = rows
            .iter()
            .zip(reports)
            .filter(|(r, _)| (r.index.1, r.index.2, r.index.3) == key)
            .map(|(r, rep)| (r.x, rep.ratios[&Bound::Thm1]))
            .collect();
        if series.len() < 2 {
            continue;
        }
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ratios: Vec<f64> = series.iter().map(|s| s.1).collect();
        let points: Vec<String> = series.iter().map(|(x, r)| format!("{x:e}:{r:.6e}")).collect();
        notes.push(format!(
            "diagnostic ratio_THM1 y={} q={} a_index={} series={} trend={}",
            spec.ys[key.0],
            spec.qs[key.1],
            key.2,
            points.join(";"),
            Trend::of(&ratios).name()
        ));
    }
    notes
}

//! Exact partition of the `(alpha, beta)` box `[0, 1] x [0, 2]` by which of
//! the four power-moduli bounds is relevant.
//!
//! Every exponent is a max/min of affine functions of `(alpha, beta)`, so the
//! partition is read off the arrangement of the lines where two affine pieces
//! agree or one vanishes. Each face of the arrangement gets a single label,
//! computed exactly at its centroid; faces with the same label are merged.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::{envelope_exponent, Bound};

type Q = Rational64;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub alpha: Q,
    pub beta: Q,
}

impl Vertex {
    pub fn new(alpha: Q, beta: Q) -> Self {
        Vertex { alpha, beta }
    }

    pub fn to_f64(self) -> (f64, f64) {
        (ratio_f64(self.alpha), ratio_f64(self.beta))
    }
}

pub fn ratio_f64(r: Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `ca * alpha + cb * beta + c0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Affine {
    ca: Q,
    cb: Q,
    c0: Q,
}

impl Affine {
    fn new(ca: Q, cb: Q, c0: Q) -> Self {
        Affine { ca, cb, c0 }
    }

    fn at(&self, v: Vertex) -> Q {
        self.ca * v.alpha + self.cb * v.beta + self.c0
    }

    fn minus(&self, o: &Affine) -> Affine {
        Affine::new(self.ca - o.ca, self.cb - o.cb, self.c0 - o.c0)
    }

    fn is_constant(&self) -> bool {
        self.ca.is_zero() && self.cb.is_zero()
    }

    /// Scale so the first nonzero coefficient is 1; equal lines compare equal.
    fn normalized(&self) -> Affine {
        let lead = if !self.ca.is_zero() { self.ca } else { self.cb };
        Affine::new(self.ca / lead, self.cb / lead, self.c0 / lead)
    }
}

enum Expr {
    Piece(Affine),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
}

impl Expr {
    fn at(&self, v: Vertex) -> Q {
        match self {
            Expr::Piece(a) => a.at(v),
            Expr::Max(es) => es.iter().map(|e| e.at(v)).max().unwrap(),
            Expr::Min(es) => es.iter().map(|e| e.at(v)).min().unwrap(),
        }
    }

    fn pieces(&self, out: &mut Vec<Affine>) {
        match self {
            Expr::Piece(a) => out.push(*a),
            Expr::Max(es) | Expr::Min(es) => es.iter().for_each(|e| e.pieces(out)),
        }
    }
}

fn piece(ca: Q, cb: Q, c0: Q) -> Expr {
    Expr::Piece(Affine::new(ca, cb, c0))
}

/// Saving exponents of `E1`..`E4` as `x -> infinity`. For `E4` only the sign
/// matters, taken with `eps -> 0`.
fn exponent_exprs() -> [(Bound, Expr); 4] {
    let z = Q::zero();
    let small_window = || piece(q(1, 4), z, q(-1, 4));
    let q_half = || piece(z, q(-1, 2), z);
    let x_over_q = || piece(z, q(1, 2), q(-1, 2));
    [
        (Bound::E1, Expr::Max(vec![small_window(), q_half(), x_over_q()])),
        (
            Bound::E2,
            Expr::Max(vec![piece(q(-1, 2), z, z), piece(z, q(1, 8), q(-1, 4)), q_half(), x_over_q()]),
        ),
        (
            Bound::E3,
            Expr::Max(vec![
                Expr::Min(vec![piece(z, q(1, 4), q(-1, 4)), piece(q(1, 4), q(1, 8), q(-1, 4))]),
                piece(z, q(-1, 4), z),
                small_window(),
            ]),
        ),
        (Bound::E4, Expr::Max(vec![piece(z, q(-1, 4), z), piece(z, q(3, 4), q(-1, 1))])),
    ]
}

/// The bound designated at `v`: among `E1`-`E3` with negative exponent the
/// smallest one (ties go to `E2`, then `E1`, then `E3`); otherwise `E4` if it
/// saves; otherwise none.
fn classify(exprs: &[(Bound, Expr); 4], v: Vertex) -> Option<Bound> {
    let value = |b: Bound| exprs.iter().find(|(k, _)| *k == b).unwrap().1.at(v);
    let mut best: Option<(Q, Bound)> = None;
    for b in [Bound::E2, Bound::E1, Bound::E3] {
        let e = value(b);
        if e < Q::zero() && best.is_none_or(|(m, _)| e < m) {
            best = Some((e, b));
        }
    }
    match best {
        Some((_, b)) => Some(b),
        None if value(Bound::E4) < Q::zero() => Some(Bound::E4),
        None => None,
    }
}

/// Float classification with the same rule, straight from the envelope
/// exponents.
pub fn classify_f64(alpha: f64, beta: f64) -> Option<Bound> {
    let e = |b| envelope_exponent(b, alpha, beta, 0.0, 1.0);
    let mut best: Option<(f64, Bound)> = None;
    for b in [Bound::E2, Bound::E1, Bound::E3] {
        let v = e(b);
        if v < 0.0 && best.is_none_or(|(m, _)| v < m) {
            best = Some((v, b));
        }
    }
    match best {
        Some((_, b)) => Some(b),
        None if e(Bound::E4) < 0.0 => Some(Bound::E4),
        None => None,
    }
}

fn cross(o: Vertex, a: Vertex, b: Vertex) -> Q {
    (a.alpha - o.alpha) * (b.beta - o.beta) - (a.beta - o.beta) * (b.alpha - o.alpha)
}

fn area2(poly: &[Vertex]) -> Q {
    let n = poly.len();
    (0..n).map(|i| poly[i].alpha * poly[(i + 1) % n].beta - poly[(i + 1) % n].alpha * poly[i].beta).sum()
}

/// Splits a convex polygon by the line `l = 0` into the parts with `l >= 0`
/// and `l <= 0`.
fn split(poly: &[Vertex], l: &Affine) -> (Vec<Vertex>, Vec<Vertex>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (la, lb) = (l.at(a), l.at(b));
        if la >= Q::zero() {
            pos.push(a);
        }
        if la <= Q::zero() {
            neg.push(a);
        }
        if (la > Q::zero() && lb < Q::zero()) || (la < Q::zero() && lb > Q::zero()) {
            let t = la / (la - lb);
            let p = Vertex::new(a.alpha + t * (b.alpha - a.alpha), a.beta + t * (b.beta - a.beta));
            pos.push(p);
            neg.push(p);
        }
    }
    (pos, neg)
}

fn centroid(poly: &[Vertex]) -> Vertex {
    let n = Q::from_integer(poly.len() as i64);
    let sa: Q = poly.iter().map(|v| v.alpha).sum();
    let sb: Q = poly.iter().map(|v| v.beta).sum();
    Vertex::new(sa / n, sb / n)
}

/// Polygons in counter-clockwise order, starting at the vertex with the
/// lowest `beta` (then lowest `alpha`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSet {
    pub polygons: BTreeMap<Bound, Vec<Vertex>>,
}

/// Faces of the arrangement inside the box, each with its label.
fn labelled_faces() -> Vec<(Vec<Vertex>, Option<Bound>)> {
    let exprs = exponent_exprs();
    let mut pieces = Vec::new();
    for (_, e) in &exprs {
        e.pieces(&mut pieces);
    }
    let mut lines = BTreeSet::new();
    for (i, a) in pieces.iter().enumerate() {
        if !a.is_constant() {
            lines.insert(a.normalized());
        }
        for b in &pieces[i + 1..] {
            let d = a.minus(b);
            if !d.is_constant() {
                lines.insert(d.normalized());
            }
        }
    }
    let z = Q::zero();
    let one = Q::from_integer(1);
    let two = Q::from_integer(2);
    let mut faces = vec![vec![
        Vertex::new(z, z),
        Vertex::new(one, z),
        Vertex::new(one, two),
        Vertex::new(z, two),
    ]];
    for l in &lines {
        let mut next = Vec::new();
        for f in faces {
            let (p, n) = split(&f, l);
            for part in [p, n] {
                if part.len() >= 3 && area2(&part) > z {
                    next.push(part);
                }
            }
        }
        faces = next;
    }
    faces
        .into_iter()
        .map(|f| {
            let label = classify(&exprs, centroid(&f));
            (f, label)
        })
        .collect()
}

fn merge(faces: &[&Vec<Vertex>]) -> Vec<Vec<Vertex>> {
    let mut edges: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();
    for f in faces {
        for i in 0..f.len() {
            let (a, b) = (f[i], f[(i + 1) % f.len()]);
            if a == b {
                continue;
            }
            if !edges.remove(&(b, a)) {
                edges.insert((a, b));
            }
        }
    }
    let mut next: BTreeMap<Vertex, Vertex> = edges.iter().cloned().collect();
    let mut loops = Vec::new();
    while let Some((&start, _)) = next.iter().next() {
        let mut cycle = vec![start];
        let mut cur = next.remove(&start).unwrap();
        while cur != start {
            cycle.push(cur);
            cur = next.remove(&cur).expect("boundary edges form closed loops");
        }
        loops.push(normalize(cycle));
    }
    loops
}

fn normalize(mut poly: Vec<Vertex>) -> Vec<Vertex> {
    loop {
        let n = poly.len();
        let k = (0..n).find(|&i| cross(poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]).is_zero());
        match k {
            Some(i) if n > 3 => {
                poly.remove(i);
            }
            _ => break,
        }
    }
    if area2(&poly) < Q::zero() {
        poly.reverse();
    }
    let start = (0..poly.len()).min_by_key(|&i| (poly[i].beta, poly[i].alpha)).unwrap();
    poly.rotate_left(start);
    poly
}

/// The Figure-style partition. Each label is expected to occupy a single
/// simple polygon; extra components would be reported under the same label.
pub fn figure1_regions() -> RegionSet {
    let faces = labelled_faces();
    let mut polygons = BTreeMap::new();
    for b in [Bound::E1, Bound::E2, Bound::E3, Bound::E4] {
        let mine: Vec<&Vec<Vertex>> = faces.iter().filter(|(_, l)| *l == Some(b)).map(|(f, _)| f).collect();
        let mut loops = merge(&mine);
        loops.sort_by_key(|l| std::cmp::Reverse(area2(l)));
        if let Some(main) = loops.into_iter().next() {
            polygons.insert(b, main);
        }
    }
    RegionSet { polygons }
}

impl RegionSet {
    /// Label of the polygon strictly containing `(alpha, beta)`.
    pub fn locate(&self, alpha: f64, beta: f64) -> Option<Bound> {
        self.polygons.iter().find(|(_, poly)| contains(poly, alpha, beta)).map(|(&b, _)| b)
    }

    /// Distance from `(alpha, beta)` to the nearest polygon edge.
    pub fn boundary_distance(&self, alpha: f64, beta: f64) -> f64 {
        let mut best = f64::INFINITY;
        for poly in self.polygons.values() {
            for i in 0..poly.len() {
                let a = poly[i].to_f64();
                let b = poly[(i + 1) % poly.len()].to_f64();
                best = best.min(segment_distance(a, b, (alpha, beta)));
            }
        }
        best
    }

    /// Compares the polygons against the float classification on a grid of
    /// the given step, skipping points within `step` of a boundary.
    pub fn grid_check(&self, step: f64) -> GridCheck {
        let na = (1.0 / step).round() as usize;
        let nb = (2.0 / step).round() as usize;
        let mut check = GridCheck { probed: 0, skipped: 0, mismatches: Vec::new() };
        for i in 0..=na {
            for j in 0..=nb {
                let (alpha, beta) = (i as f64 * step, j as f64 * step);
                if self.boundary_distance(alpha, beta) < step {
                    check.skipped += 1;
                    continue;
                }
                check.probed += 1;
                let got = self.locate(alpha, beta);
                let want = classify_f64(alpha, beta);
                if got != want {
                    check.mismatches.push((alpha, beta));
                }
            }
        }
        check
    }

    /// Whether a grid point of the given step within `step` of `v` carries
    /// each label whose polygon has `v` as a vertex.
    pub fn vertex_reproduced(&self, label: Bound, v: Vertex, step: f64) -> bool {
        let (va, vb) = v.to_f64();
        let r = (1.0 / step).round() as i64;
        let (ci, cj) = ((va / step).round() as i64, (vb / step).round() as i64);
        for di in -r.min(2)..=r.min(2) {
            for dj in -2..=2 {
                let (alpha, beta) = ((ci + di) as f64 * step, (cj + dj) as f64 * step);
                if !(0.0..=1.0).contains(&alpha) || !(0.0..=2.0).contains(&beta) {
                    continue;
                }
                if ((alpha - va).powi(2) + (beta - vb).powi(2)).sqrt() <= 2.0 * step
                    && classify_f64(alpha, beta) == Some(label)
                {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCheck {
    pub probed: usize,
    pub skipped: usize,
    pub mismatches: Vec<(f64, f64)>,
}

fn contains(poly: &[Vertex], alpha: f64, beta: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (ax, ay) = poly[i].to_f64();
        let (bx, by) = poly[(i + 1) % n].to_f64();
        if (ay > beta) != (by > beta) && alpha < ax + (beta - ay) * (bx - ax) / (by - ay) {
            inside = !inside;
        }
    }
    inside
}

fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// `"n/d"`, or `"n"` for integers.
pub fn render(r: Q) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Area of the polygon, for partition checks.
pub fn area(poly: &[Vertex]) -> Q {
    area2(poly).abs() / Q::from_integer(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(a: (i64, i64), b: (i64, i64)) -> Vertex {
        Vertex::new(q(a.0, a.1), q(b.0, b.1))
    }

    #[test]
    fn polygons_have_exact_vertices() {
        let r = figure1_regions();
        let e1 = vec![v((0, 1), (0, 1)), v((1, 3), (1, 3)), v((1, 3), (2, 3)), v((1, 5), (4, 5)), v((0, 1), (2, 3))];
        assert_eq!(r.polygons[&Bound::E1], e1);
        let e2 = vec![
            v((0, 1), (0, 1)),
            v((1, 1), (0, 1)),
            v((1, 1), (1, 1)),
            v((1, 2), (1, 1)),
            v((1, 5), (4, 5)),
            v((1, 3), (2, 3)),
            v((1, 3), (1, 3)),
        ];
        assert_eq!(r.polygons[&Bound::E2], e2);
        assert_eq!(r.polygons[&Bound::E3], vec![v((0, 1), (2, 3)), v((1, 2), (1, 1)), v((0, 1), (2, 1))]);
        let e4 = vec![v((1, 2), (1, 1)), v((1, 1), (1, 1)), v((1, 1), (4, 3)), v((1, 3), (4, 3))];
        assert_eq!(r.polygons[&Bound::E4], e4);
    }

    #[test]
    fn faces_cover_box_without_overlap() {
        let r = figure1_regions();
        let total: Q = r.polygons.values().map(|p| area(p)).sum();
        // The rest of the box is where no bound saves.
        let none: Q = labelled_faces().iter().filter(|(_, l)| l.is_none()).map(|(f, _)| area(f)).sum();
        assert_eq!(total + none, Q::from_integer(2));
    }

    #[test]
    fn grid_agrees_with_polygons() {
        let r = figure1_regions();
        let check = r.grid_check(0.01);
        assert!(check.mismatches.is_empty(), "{:?}", &check.mismatches[..check.mismatches.len().min(5)]);
        assert!(check.probed > 10_000);
    }

    #[test]
    fn vertices_seen_by_grid() {
        let r = figure1_regions();
        for (&b, poly) in &r.polygons {
            for &p in poly {
                assert!(r.vertex_reproduced(b, p, 0.005), "{b} {p:?}");
            }
        }
    }

    #[test]
    fn sample_points() {
        let r = figure1_regions();
        assert_eq!(r.locate(0.1, 0.5), Some(Bound::E1));
        assert_eq!(r.locate(2.0 / 3.0, 0.5), Some(Bound::E2));
        assert_eq!(r.locate(0.2, 1.2), Some(Bound::E3));
        assert_eq!(r.locate(0.75, 1.15), Some(Bound::E4));
        assert_eq!(r.locate(0.9, 1.8), None);
        assert_eq!(classify_f64(0.9, 1.8), None);
    }

    #[test]
    fn rendering() {
        assert_eq!(render(q(4, 5)), "4/5");
        assert_eq!(render(q(2, 1)), "2");
        assert_eq!(render(q(0, 1)), "0");
    }
}

//! Projection of plane curves into the 1-skeleton of a square grid.
//!
//! Inside every grid square the curve is pushed radially to the square's
//! boundary from a centre chosen as far from the curve as possible. Pieces
//! already lying on grid lines stay fixed, so images of neighbouring squares
//! glue along shared boundary points.

use std::f64::consts::TAU;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::polyline::Polyline;
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Candidate centres per square side.
const CENTRE_CANDIDATES: usize = 64;
/// A centre closer than this fraction of the cell size to the curve counts
/// as no centre at all.
const SATURATION_FRACTION: f64 = 1e-3;
/// Displacement samples per piece.
const PIECE_SAMPLES: usize = 64;

type P2 = [f64; 2];

/// Result of [`ff_project`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FfProjection {
    pub cell: f64,
    /// One path per input component; closed components repeat their first
    /// vertex at the end.
    pub paths: Vec<Vec<P2>>,
    pub sup_displacement: f64,
    pub length: f64,
    pub ratio: f64,
    pub cells_touched: usize,
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    a: P2,
    b: P2,
    cell: (i64, i64),
}

fn cell_of(p: P2, r: f64) -> (i64, i64) {
    ((p[0] / r).floor() as i64, (p[1] / r).floor() as i64)
}

/// Splits `a -> b` at every grid line it crosses. Split points are snapped
/// onto the line they sit on.
fn clip_segment(a: P2, b: P2, r: f64, out: &mut Vec<Piece>) {
    let mut cuts: Vec<(f64, Option<(usize, f64)>)> = vec![(0.0, None), (1.0, None)];
    for axis in 0..2 {
        let (u, v) = (a[axis] / r, b[axis] / r);
        if u == v {
            continue;
        }
        let (lo, hi) = (u.min(v), u.max(v));
        let mut k = lo.floor() + 1.0;
        while k < hi {
            cuts.push(((k - u) / (v - u), Some((axis, k * r))));
            k += 1.0;
        }
    }
    cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let point = |&(t, snap): &(f64, Option<(usize, f64)>)| -> P2 {
        if t == 0.0 {
            return a;
        }
        if t == 1.0 {
            return b;
        }
        let mut p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        if let Some((axis, x)) = snap {
            p[axis] = x;
        }
        p
    };
    for w in cuts.windows(2) {
        let (p, q) = (point(&w[0]), point(&w[1]));
        if p == q {
            continue;
        }
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        out.push(Piece { a: p, b: q, cell: cell_of(mid, r) });
    }
}

fn point_segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

fn on_boundary(p: P2, lo: P2, r: f64) -> bool {
    p[0] == lo[0] || p[0] == lo[0] + r || p[1] == lo[1] || p[1] == lo[1] + r
}

/// Radial projection from `c` onto the boundary of the square `[lo, lo + r]`.
fn radial(p: P2, c: P2, lo: P2, r: f64) -> P2 {
    if on_boundary(p, lo, r) {
        return p;
    }
    let d = [p[0] - c[0], p[1] - c[1]];
    let mut best = (f64::INFINITY, 0, 0.0);
    for axis in 0..2 {
        if d[axis] != 0.0 {
            let wall = if d[axis] > 0.0 { lo[axis] + r } else { lo[axis] };
            let t = (wall - c[axis]) / d[axis];
            if t < best.0 {
                best = (t, axis, wall);
            }
        }
    }
    let (t, axis, wall) = best;
    let mut q = [c[0] + t * d[0], c[1] + t * d[1]];
    q[axis] = wall;
    let other = 1 - axis;
    q[other] = q[other].clamp(lo[other], lo[other] + r);
    q
}

fn angle_from(u: P2, v: P2) -> f64 {
    (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1])
}

/// Centre of the square that is farthest from the pieces inside it.
fn choose_centre(pieces: &[Piece], lo: P2, r: f64, cell: (i64, i64)) -> Result<P2> {
    let h = r / CENTRE_CANDIDATES as f64;
    let mut best = (-1.0, lo);
    for i in 0..CENTRE_CANDIDATES {
        for j in 0..CENTRE_CANDIDATES {
            let c = [lo[0] + (i as f64 + 0.5) * h, lo[1] + (j as f64 + 0.5) * h];
            let d = pieces.iter().map(|p| point_segment_distance(c, p.a, p.b)).fold(f64::INFINITY, f64::min);
            if d > best.0 {
                best = (d, c);
            }
        }
    }
    if best.0 < SATURATION_FRACTION * r {
        return Err(Error::CellSaturated(cell));
    }
    Ok(best.1)
}

/// Image of one piece: projected endpoints with the square's corners swept
/// in between.
fn project_piece(piece: &Piece, c: P2, lo: P2, r: f64, out: &mut Vec<P2>) {
    let (pa, pb) = (radial(piece.a, c, lo, r), radial(piece.b, c, lo, r));
    let u = [piece.a[0] - c[0], piece.a[1] - c[1]];
    let sweep = angle_from(u, [piece.b[0] - c[0], piece.b[1] - c[1]]);
    let mut corners: Vec<(f64, P2)> = [[0.0, 0.0], [r, 0.0], [r, r], [0.0, r]]
        .iter()
        .map(|o| [lo[0] + o[0], lo[1] + o[1]])
        .filter_map(|q| {
            let psi = angle_from(u, [q[0] - c[0], q[1] - c[1]]);
            (psi * sweep > 0.0 && psi.abs() < sweep.abs() && q != pa && q != pb).then_some((psi.abs(), q))
        })
        .collect();
    corners.sort_by(|x, y| x.0.total_cmp(&y.0));
    push_dedup(out, pa);
    for (_, q) in corners {
        push_dedup(out, q);
    }
    push_dedup(out, pb);
}

fn push_dedup(out: &mut Vec<P2>, p: P2) {
    if out.last() != Some(&p) {
        out.push(p);
    }
}

/// Projects a planar curve into the 1-skeleton of the grid with square side
/// `cell` anchored at the origin and measures the largest displacement.
///
/// Fails with [`Error::CellSaturated`] when the curve passes within
/// `1e-3 * cell` of every candidate centre of some square; curves should be
/// projected with a cell size proportional to their length.
pub fn ff_project(curves: &[Polyline], cell: f64) -> Result<FfProjection> {
    if !(cell > 0.0 && cell.is_finite()) {
        return invalid("cell size must be positive");
    }
    if curves.is_empty() {
        return invalid("no curve to project");
    }
    if let Some(c) = curves.iter().find(|c| c.dim() != 2) {
        return Err(Error::DimensionMismatch { expected: 2, got: c.dim() });
    }
    let mut pieces_per_curve = Vec::with_capacity(curves.len());
    for c in curves {
        let mut pieces = Vec::new();
        for (a, b) in c.segments() {
            clip_segment([a[0], a[1]], [b[0], b[1]], cell, &mut pieces);
        }
        pieces_per_curve.push(pieces);
    }

    let mut by_cell: std::collections::BTreeMap<(i64, i64), Vec<Piece>> = Default::default();
    for p in pieces_per_curve.iter().flatten() {
        by_cell.entry(p.cell).or_default().push(*p);
    }
    let mut centres = std::collections::BTreeMap::new();
    for (&key, pieces) in &by_cell {
        let lo = [key.0 as f64 * cell, key.1 as f64 * cell];
        if pieces.iter().all(|p| on_boundary(p.a, lo, cell) && on_boundary(p.b, lo, cell) && {
            let m = [0.5 * (p.a[0] + p.b[0]), 0.5 * (p.a[1] + p.b[1])];
            on_boundary(m, lo, cell)
        }) {
            // Only grid-line pieces: everything is fixed, any centre works.
            centres.insert(key, [lo[0] + 0.5 * cell, lo[1] + 0.5 * cell]);
            continue;
        }
        centres.insert(key, choose_centre(pieces, lo, cell, key)?);
    }

    let mut paths = Vec::with_capacity(curves.len());
    let mut sup: f64 = 0.0;
    for (curve, pieces) in curves.iter().zip(&pieces_per_curve) {
        let mut path = Vec::new();
        for p in pieces {
            let lo = [p.cell.0 as f64 * cell, p.cell.1 as f64 * cell];
            let c = centres[&p.cell];
            project_piece(p, c, lo, cell, &mut path);
            for s in 0..=PIECE_SAMPLES {
                let t = s as f64 / PIECE_SAMPLES as f64;
                let x = [p.a[0] + t * (p.b[0] - p.a[0]), p.a[1] + t * (p.b[1] - p.a[1])];
                let y = radial(x, c, lo, cell);
                sup = sup.max((y[0] - x[0]).hypot(y[1] - x[1]));
            }
        }
        if curve.is_closed() {
            if let Some(&first) = path.first() {
                push_dedup(&mut path, first);
            }
        }
        paths.push(path);
    }
    let length: f64 = curves.iter().map(Polyline::length).sum();
    Ok(FfProjection { cell, paths, sup_displacement: sup, length, ratio: sup / length, cells_touched: by_cell.len() })
}

/// Whether consecutive vertices of `path` share a grid line, so that the
/// path runs inside the 1-skeleton of the grid with side `cell`.
pub fn is_grid_path(path: &[P2], cell: f64) -> bool {
    let on_line = |x: f64| (x / cell).round() * cell == x;
    path.iter().all(|p| on_line(p[0]) || on_line(p[1]))
        && path.windows(2).all(|w| (w[0][0] == w[1][0] && on_line(w[0][0])) || (w[0][1] == w[1][1] && on_line(w[0][1])))
}

/// A random star-shaped closed curve: a circle of random radius around a
/// random centre with a few random Fourier modes, as a `vertices`-gon.
pub fn random_closed_curve(r: &mut rng::Rng, vertices: usize) -> Result<Polyline> {
    let centre = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
    let radius = r.random_range(0.2..1.0);
    let modes: Vec<(f64, f64)> = (1..=4).map(|_| (r.random_range(-0.15..0.15), r.random_range(0.0..TAU))).collect();
    let pts: Vec<P2> = (0..vertices)
        .map(|i| {
            let t = TAU * i as f64 / vertices as f64;
            let rho = radius * (1.0 + modes.iter().enumerate().map(|(k, (a, ph))| a * ((k + 2) as f64 * t + ph).cos()).sum::<f64>());
            [centre[0] + rho * t.cos(), centre[1] + rho * t.sin()]
        })
        .collect();
    Polyline::planar(&pts, true)
}

/// Largest displacement-to-length ratio over `count` random closed curves
/// projected with cell size `cell_factor * length`. Each curve is shifted
/// uniformly within a cell first, so its position against the grid is
/// random.
pub fn corpus_constant(seed: u64, corpus: u64, count: usize, cell_factor: f64) -> Result<f64> {
    let mut r = rng::stream(seed, "ff_corpus", corpus);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let y = random_closed_curve(&mut r, 64)?;
        let cell = cell_factor * y.length();
        let shift = [r.random_range(0.0..cell), r.random_range(0.0..cell), 0.0];
        let y = y.map(|v| [v[0] + shift[0], v[1] + shift[1], 0.0])?;
        let p = ff_project(std::slice::from_ref(&y), cell)?;
        worst = worst.max(p.ratio);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(centre: P2, radius: f64, n: usize) -> Polyline {
        let pts: Vec<P2> = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                [centre[0] + radius * t.cos(), centre[1] + radius * t.sin()]
            })
            .collect();
        Polyline::planar(&pts, true).unwrap()
    }

    #[test]
    fn tiny_circle_goes_to_its_cell_boundary() {
        let y = circle([0.37, 0.61], 0.1 / TAU, 64);
        let p = ff_project(&[y], 1.0).unwrap();
        assert_eq!(p.cells_touched, 1);
        let path = &p.paths[0];
        assert!(is_grid_path(path, 1.0));
        assert!(path.iter().flatten().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(p.sup_displacement <= 2f64.sqrt());
        assert!(p.sup_displacement > 0.0);
    }

    #[test]
    fn grid_line_segment_is_fixed() {
        let y = Polyline::planar(&[[0.0, 0.0], [3.0, 0.0]], false).unwrap();
        let p = ff_project(&[y], 1.0).unwrap();
        assert_eq!(p.sup_displacement, 0.0);
        assert_eq!(p.paths[0].first(), Some(&[0.0, 0.0]));
        assert_eq!(p.paths[0].last(), Some(&[3.0, 0.0]));
        let y = Polyline::planar(&[[0.5, 2.0], [0.5, -1.0], [2.5, -1.0]], false).unwrap();
        assert_eq!(ff_project(&[y], 0.5).unwrap().sup_displacement, 0.0);
    }

    #[test]
    fn images_are_connected_grid_paths() {
        let mut r = rng::stream(11, "ff-test", 0);
        for _ in 0..20 {
            let y = random_closed_curve(&mut r, 64).unwrap();
            let cell = 0.3 * y.length();
            let p = ff_project(std::slice::from_ref(&y), cell).unwrap();
            assert_eq!(p.paths.len(), 1);
            let path = &p.paths[0];
            assert!(is_grid_path(path, cell));
            assert_eq!(path.first(), path.last());
            assert!(p.sup_displacement <= 2f64.sqrt() * cell);
        }
    }

    #[test]
    fn components_stay_separate() {
        let a = circle([0.5, 0.5], 0.2, 32);
        let b = circle([5.5, 0.5], 0.2, 32);
        let p = ff_project(&[a, b], 1.0).unwrap();
        assert_eq!(p.paths.len(), 2);
        assert!(p.paths.iter().all(|q| is_grid_path(q, 1.0) && q.first() == q.last()));
    }

    #[test]
    fn crossing_curve_moves_boundary_to_boundary() {
        // A chord across one cell: its image must start and end at the same
        // points as the chord.
        let y = Polyline::planar(&[[0.0, 0.3], [1.0, 0.6]], false).unwrap();
        let p = ff_project(&[y], 1.0).unwrap();
        let path = &p.paths[0];
        assert_eq!(path[0], [0.0, 0.3]);
        assert_eq!(*path.last().unwrap(), [1.0, 0.6]);
        assert!(path.len() >= 3);
        assert!(is_grid_path(path, 1.0));
    }

    #[test]
    fn saturated_cell_is_reported() {
        let mut pts = Vec::new();
        for k in 0..1001 {
            let y = 0.0005 + k as f64 * 0.000999;
            if k % 2 == 0 {
                pts.push([0.0005, y]);
                pts.push([0.9995, y]);
            } else {
                pts.push([0.9995, y]);
                pts.push([0.0005, y]);
            }
        }
        let y = Polyline::planar(&pts, false).unwrap();
        assert!(matches!(ff_project(&[y], 1.0), Err(Error::CellSaturated((0, 0)))));
    }

    #[test]
    fn empirical_constant_is_stable() {
        let a = corpus_constant(0, 0, 100, 2.0).unwrap();
        let b = corpus_constant(0, 1, 100, 2.0).unwrap();
        assert!((a / b - 1.0).abs() <= 0.1, "{a} vs {b}");
        // Never more than the cell diameter.
        assert!(a.max(b) <= 2.0 * 2f64.sqrt());
    }

    #[test]
    fn bad_inputs() {
        let y = circle([0.5, 0.5], 0.2, 16);
        assert!(ff_project(std::slice::from_ref(&y), 0.0).is_err());
        assert!(ff_project(&[], 1.0).is_err());
        let z = Polyline::closed(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]).unwrap();
        assert!(ff_project(&[z], 1.0).is_err());
    }
}

//! Linking numbers of polygonal links, the degree of the normalised
//! difference map, and the length bound `length(W) >= 2 pi dist(W, W')`
//! for curves linked with `W'`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::polyline::{cross, dot, norm, scale, sub, unit, Polyline, Vec3};
use crate::error::{Error, Result};
use crate::rng;

/// Smallest admissible distance between the two curves.
pub const MIN_SEPARATION: f64 = 1e-9;
const PROJECTION_ATTEMPTS: u64 = 32;
const REGULAR_VALUE_ATTEMPTS: u64 = 16;
/// Parameter margin below which a crossing or preimage counts as lying on a
/// vertex.
const EDGE_MARGIN: f64 = 1e-9;

/// Distance between segments `[p1, q1]` and `[p2, q2]`.
pub fn segment_distance(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    let (d1, d2, r) = (sub(q1, p1), sub(q2, p2), sub(p1, p2));
    let (a, e, f) = (dot(d1, d1), dot(d2, d2), dot(d2, r));
    let (b, c) = (dot(d1, d2), dot(d1, r));
    let denom = a * e - b * b;
    let mut s = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    norm(sub(sub(p1, p2), sub(scale(d2, t), scale(d1, s))))
}

/// `dist(W, W')` over all segment pairs.
pub fn curve_distance(w: &Polyline, wp: &Polyline) -> f64 {
    (0..w.segment_count())
        .into_par_iter()
        .map(|i| {
            let (a, b) = w.segment(i);
            wp.segments().map(|(c, d)| segment_distance(a, b, c, d)).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn check_pair(w: &Polyline, wp: &Polyline) -> Result<()> {
    if w.dim() != 3 || wp.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: w.dim().min(wp.dim()) });
    }
    if !w.is_closed() || !wp.is_closed() {
        return Err(Error::DegenerateLink("linking needs closed curves".into()));
    }
    let d = curve_distance(w, wp);
    if d <= MIN_SEPARATION {
        return Err(Error::DegenerateLink(format!("curves meet (distance {d:e})")));
    }
    Ok(())
}

/// Signed solid angle subtended by segment pair `(a, b)`, `(c, d)`, over
/// `4 pi`: the exact Gauss integral of the pair.
fn pair_gauss(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    let (r13, r14, r23, r24) = (sub(c, a), sub(d, a), sub(c, b), sub(d, b));
    let faces = [cross(r13, r14), cross(r14, r24), cross(r24, r23), cross(r23, r13)];
    if faces.iter().any(|f| norm(*f) == 0.0) {
        return 0.0;
    }
    let n = faces.map(unit);
    let asin = |x: f64| x.clamp(-1.0, 1.0).asin();
    let omega = asin(dot(n[0], n[1])) + asin(dot(n[1], n[2])) + asin(dot(n[2], n[3])) + asin(dot(n[3], n[0]));
    let orient = dot(cross(sub(d, c), sub(b, a)), r13);
    if orient > 0.0 {
        omega / (4.0 * PI)
    } else if orient < 0.0 {
        -omega / (4.0 * PI)
    } else {
        0.0
    }
}

/// Gauss double integral, summed exactly over segment pairs (not rounded).
pub fn gauss_linking_integral(w: &Polyline, wp: &Polyline) -> f64 {
    let parts: Vec<f64> = (0..w.segment_count())
        .into_par_iter()
        .map(|i| {
            let (a, b) = w.segment(i);
            wp.segments().map(|(c, d)| pair_gauss(a, b, c, d)).sum()
        })
        .collect();
    parts.iter().sum()
}

fn random_direction(r: &mut rng::Rng) -> Vec3 {
    loop {
        let v: Vec3 = [r.sample(StandardNormal), r.sample(StandardNormal), r.sample(StandardNormal)];
        if norm(v) > 1e-3 {
            return unit(v);
        }
    }
}

fn frame(v: Vec3) -> (Vec3, Vec3) {
    let helper = if v[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = unit(cross(helper, v));
    (e1, cross(v, e1))
}

/// Half the signed count of crossings between the two curves in a generic
/// projection. Projections with crossings near vertices or near-parallel
/// crossing edges are redrawn.
pub fn crossing_linking_number(w: &Polyline, wp: &Polyline) -> Result<i64> {
    check_pair(w, wp)?;
    'attempt: for attempt in 0..PROJECTION_ATTEMPTS {
        let v = random_direction(&mut rng::stream(0, "crossing_linking_number", attempt));
        let (e1, e2) = frame(v);
        let proj = |p: Vec3| [dot(p, e1), dot(p, e2), dot(p, v)];
        let a: Vec<(Vec3, Vec3)> = w.segments().map(|(p, q)| (proj(p), proj(q))).collect();
        let b: Vec<(Vec3, Vec3)> = wp.segments().map(|(p, q)| (proj(p), proj(q))).collect();
        let mut total = 0i64;
        for &(p, q) in &a {
            let r = sub(q, p);
            for &(s0, s1) in &b {
                let u = sub(s1, s0);
                let den = r[0] * u[1] - r[1] * u[0];
                let scale_ = (r[0].hypot(r[1])) * (u[0].hypot(u[1]));
                let qp = sub(s0, p);
                if den.abs() <= 1e-12 * scale_ {
                    // Parallel in projection: degenerate only if they overlap.
                    let offset = qp[0] * r[1] - qp[1] * r[0];
                    if offset.abs() <= 1e-12 * scale_.max(1e-300) {
                        continue 'attempt;
                    }
                    continue;
                }
                let s = (qp[0] * u[1] - qp[1] * u[0]) / den;
                let t = (qp[0] * r[1] - qp[1] * r[0]) / den;
                if s < -EDGE_MARGIN || s > 1.0 + EDGE_MARGIN || t < -EDGE_MARGIN || t > 1.0 + EDGE_MARGIN {
                    continue;
                }
                if s < EDGE_MARGIN || s > 1.0 - EDGE_MARGIN || t < EDGE_MARGIN || t > 1.0 - EDGE_MARGIN {
                    continue 'attempt;
                }
                let hw = p[2] + s * r[2];
                let hp = s0[2] + t * u[2];
                if hw == hp {
                    continue 'attempt;
                }
                let over = if hw > hp { den } else { -den };
                total += if over > 0.0 { 1 } else { -1 };
            }
        }
        if total % 2 != 0 {
            continue;
        }
        return Ok(total / 2);
    }
    Err(Error::DegenerateLink("no generic projection found".into()))
}

/// Linking number by the exact Gauss sum, cross-checked against a signed
/// crossing count.
pub fn linking_number(w: &Polyline, wp: &Polyline) -> Result<i64> {
    check_pair(w, wp)?;
    let g = gauss_linking_integral(w, wp);
    let rounded = g.round();
    if (g - rounded).abs() > 1e-6 {
        return Err(Error::DegenerateLink(format!("Gauss sum {g} is not an integer")));
    }
    let c = crossing_linking_number(w, wp)?;
    if c != rounded as i64 {
        return Err(Error::DegenerateLink(format!("Gauss sum {rounded} disagrees with crossing count {c}")));
    }
    Ok(c)
}

/// Degree of `(s, t) -> (W(s) - W'(t)) / |W(s) - W'(t)|`, by counting signed
/// preimages of a random regular value.
pub fn gauss_map_degree(w: &Polyline, wp: &Polyline) -> Result<i64> {
    check_pair(w, wp)?;
    'attempt: for attempt in 0..REGULAR_VALUE_ATTEMPTS {
        let p = random_direction(&mut rng::stream(0, "gauss_map_degree", attempt));
        let pv = Vector3::from(p);
        let mut degree = 0i64;
        for (a, b) in w.segments() {
            let e1 = sub(b, a);
            for (c, d) in wp.segments() {
                let e2 = sub(d, c);
                // a + s e1 - c - t e2 = lambda p
                let m = Matrix3::from_columns(&[Vector3::from(e1), -Vector3::from(e2), -pv]);
                let det = m.determinant();
                let sc = norm(e1) * norm(e2);
                if det.abs() <= 1e-12 * sc {
                    // The difference plane contains p. A preimage would be a
                    // whole segment, so the value is not regular.
                    let rhs = sub(c, a);
                    let normal = cross(e1, e2);
                    if dot(rhs, normal).abs() <= 1e-12 * norm(normal) * norm(rhs).max(1.0) {
                        continue 'attempt;
                    }
                    continue;
                }
                let Some(sol) = m.lu().solve(&Vector3::from(sub(c, a))) else {
                    continue 'attempt;
                };
                let (s, t, lambda) = (sol[0], sol[1], sol[2]);
                if lambda <= 0.0 || s < -EDGE_MARGIN || s > 1.0 + EDGE_MARGIN || t < -EDGE_MARGIN || t > 1.0 + EDGE_MARGIN {
                    continue;
                }
                if s < EDGE_MARGIN || s > 1.0 - EDGE_MARGIN || t < EDGE_MARGIN || t > 1.0 - EDGE_MARGIN {
                    continue 'attempt;
                }
                // Orientation of (dF/ds, dF/dt) against the outward normal.
                degree += if det > 0.0 { 1 } else { -1 };
            }
        }
        return Ok(degree);
    }
    Err(Error::DegenerateLink("no regular value found".into()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GehringReport {
    pub linking_number: i64,
    pub distance: f64,
    pub length: f64,
    /// `2 pi d`.
    pub bound: f64,
    /// Shortfall of an inscribed polygon with as many edges as `W`.
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `length(W) >= 2 pi dist(W, W')` for linked curves, allowing the
/// relative shortfall `1 - (n / pi) sin(pi / n)` of an inscribed `n`-gon.
pub fn gehring_check(w: &Polyline, wp: &Polyline) -> Result<GehringReport> {
    let lk = linking_number(w, wp)?;
    if lk == 0 {
        return Err(Error::NotApplicable("curves are not linked".into()));
    }
    let distance = curve_distance(w, wp);
    let length = w.length();
    let n = w.segment_count() as f64;
    let tolerance = 1.0 - (n / PI) * (PI / n).sin();
    let bound = 2.0 * PI * distance;
    Ok(GehringReport { linking_number: lk, distance, length, bound, tolerance, pass: length >= bound * (1.0 - tolerance) })
}

/// A Hopf link with every vertex moved by a uniform offset of size at most
/// `amplitude` in each coordinate.
pub fn perturbed_hopf(n: usize, amplitude: f64, r: &mut rng::Rng) -> Result<(Polyline, Polyline)> {
    let (a, b) = super::polyline::hopf_link(n)?;
    let mut jitter = |c: &Polyline| {
        let pts: Vec<Vec3> = c.vertices().iter().map(|v| [0, 1, 2].map(|k| v[k] + amplitude * r.random_range(-1.0..1.0))).collect();
        Polyline::closed(pts)
    };
    Ok((jitter(&a)?, jitter(&b)?))
}

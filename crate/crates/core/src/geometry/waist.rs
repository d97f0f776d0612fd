//! Sweepouts of the 2-sphere by level sets and their longest member.
//!
//! A family is the set of level curves of `f = x3 + sum c_i h_i` for seven
//! fixed low-degree harmonics `h_i`. It sweeps the sphere out when `f` has
//! exactly one minimum and one maximum and no other critical points. This is
//! checked on a subdivided icosahedron. Level curves are traced triangle by
//! triangle, with crossings found on the great-circle arcs between vertices,
//! and measured by summing great-circle distances.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::polyline::{add, cross, dot, norm, scale, unit, Vec3};
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Number of perturbation coefficients.
pub const HARMONICS: usize = 7;
const LEVEL_SCAN: usize = 16;
const GOLDEN_ITERS: usize = 36;
const ROOT_ITERS: usize = 60;

fn harmonics(x: Vec3) -> [f64; HARMONICS] {
    let [a, b, c] = x;
    [a, b, a * b, a * c, b * c, a * a - b * b, 3.0 * c * c - 1.0]
}

fn height(coeffs: &[f64], x: Vec3) -> f64 {
    x[2] + harmonics(x).iter().zip(coeffs).map(|(h, c)| h * c).sum::<f64>()
}

/// Subdivided icosahedron with vertices on the unit sphere.
#[derive(Clone, Debug)]
pub struct Icosphere {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Neighbours of each vertex in cyclic order.
    rings: Vec<Vec<usize>>,
}

impl Icosphere {
    pub fn new(level: usize) -> Icosphere {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(|&v| unit(v))
        .collect();
        let mut triangles = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |i: usize, j: usize, vs: &mut Vec<Vec3>| {
                *mid.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    vs.push(unit(add(vs[i], vs[j])));
                    vs.len() - 1
                })
            };
            let mut next = Vec::with_capacity(4 * triangles.len());
            for &[a, b, c] in &triangles {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            triangles = next;
        }
        let rings = rings(vertices.len(), &triangles);
        Icosphere { vertices, triangles, rings }
    }
}

/// Orders each vertex's link by chaining the opposite edges of its
/// triangles.
fn rings(n: usize, triangles: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut next: Vec<HashMap<usize, usize>> = vec![HashMap::new(); n];
    for &[a, b, c] in triangles {
        next[a].insert(b, c);
        next[b].insert(c, a);
        next[c].insert(a, b);
    }
    next.iter()
        .map(|m| {
            let start = *m.keys().min().expect("every vertex lies on a triangle");
            let mut ring = vec![start];
            let mut cur = m[&start];
            while cur != start {
                ring.push(cur);
                cur = m[&cur];
            }
            ring
        })
        .collect()
}

/// Critical points of a vertex function found by the sign pattern around
/// each link, with ties broken by vertex index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseCount {
    pub minima: usize,
    pub maxima: usize,
    /// Saddles counted with multiplicity.
    pub saddles: usize,
}

pub fn morse_count(mesh: &Icosphere, values: &[f64]) -> MorseCount {
    let above = |u: usize, v: usize| values[u] > values[v] || (values[u] == values[v] && u > v);
    let mut count = MorseCount { minima: 0, maxima: 0, saddles: 0 };
    for (v, ring) in mesh.rings.iter().enumerate() {
        let signs: Vec<bool> = ring.iter().map(|&u| above(u, v)).collect();
        let changes = (0..signs.len()).filter(|&i| signs[i] != signs[(i + 1) % signs.len()]).count();
        match changes {
            0 if signs[0] => count.minima += 1,
            0 => count.maxima += 1,
            c => count.saddles += c / 2 - 1,
        }
    }
    count
}

fn slerp(p: Vec3, q: Vec3, s: f64) -> Vec3 {
    let omega = norm(cross(p, q)).atan2(dot(p, q));
    let so = omega.sin();
    add(scale(p, ((1.0 - s) * omega).sin() / so), scale(q, (s * omega).sin() / so))
}

fn arc_length(p: Vec3, q: Vec3) -> f64 {
    norm(cross(p, q)).atan2(dot(p, q))
}

/// A validated member of the perturbation class on a fixed mesh.
pub struct Sweepout<'a> {
    mesh: &'a Icosphere,
    coeffs: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> Sweepout<'a> {
    pub fn new(mesh: &'a Icosphere, coeffs: &[f64]) -> Result<Sweepout<'a>> {
        if coeffs.len() != HARMONICS {
            return Err(Error::DimensionMismatch { expected: HARMONICS, got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("coefficients must be finite");
        }
        let values: Vec<f64> = mesh.vertices.iter().map(|&x| height(coeffs, x)).collect();
        let mc = morse_count(mesh, &values);
        if mc != (MorseCount { minima: 1, maxima: 1, saddles: 0 }) {
            return Err(Error::InvalidFamily(format!(
                "{} minima, {} maxima, {} saddles on the mesh",
                mc.minima, mc.maxima, mc.saddles
            )));
        }
        Ok(Sweepout { mesh, coeffs: coeffs.to_vec(), values })
    }

    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Point where `f = level` on the arc from vertex `i` to vertex `j`.
    fn crossing(&self, i: usize, j: usize, level: f64) -> Vec3 {
        // Fixed orientation so both triangles sharing the edge agree.
        let (i, j) = (i.min(j), i.max(j));
        let (p, q) = (self.mesh.vertices[i], self.mesh.vertices[j]);
        let g = |s: f64| height(&self.coeffs, slerp(p, q, s)) - level;
        let (mut a, mut b, mut ga, mut gb) = (0.0, 1.0, self.values[i] - level, self.values[j] - level);
        let mut side = 0;
        for _ in 0..ROOT_ITERS {
            let s = (a * gb - b * ga) / (gb - ga);
            let gs = g(s);
            if gs == 0.0 || (b - a).abs() < 1e-15 {
                return slerp(p, q, s);
            }
            if (gs > 0.0) == (gb > 0.0) {
                b = s;
                gb = gs;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            } else {
                a = s;
                ga = gs;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            }
        }
        slerp(p, q, (a * gb - b * ga) / (gb - ga))
    }

    /// Length of the level curve `f = level`.
    pub fn level_length(&self, level: f64) -> f64 {
        let up = |v: usize| self.values[v] > level;
        let mut total = 0.0;
        for &[a, b, c] in &self.mesh.triangles {
            let (ua, ub, uc) = (up(a), up(b), up(c));
            if ua == ub && ub == uc {
                continue;
            }
            // The lone vertex on its side and the two edges leaving it.
            let (v, w1, w2) = if ua != ub && ua != uc {
                (a, b, c)
            } else if ub != ua && ub != uc {
                (b, c, a)
            } else {
                (c, a, b)
            };
            total += arc_length(self.crossing(v, w1, level), self.crossing(v, w2, level));
        }
        total
    }

    /// Longest level curve as `(length, level)`: a coarse scan followed by
    /// golden-section search around the best scanned level.
    pub fn max_level_length(&self) -> (f64, f64) {
        let (lo, hi) = self.range();
        let h = (hi - lo) / LEVEL_SCAN as f64;
        let level = |k: usize| lo + (k as f64 + 0.5) * h;
        let best = (0..LEVEL_SCAN)
            .map(|k| (k, self.level_length(level(k))))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let (mut a, mut b) = (level(best.0) - h, level(best.0) + h);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
        let (mut f1, mut f2) = (self.level_length(x1), self.level_length(x2));
        for _ in 0..GOLDEN_ITERS {
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = self.level_length(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = self.level_length(x2);
            }
        }
        [(best.1, level(best.0)), (f1, x1), (f2, x2)].into_iter().fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaistParams {
    /// Mesh used during the search.
    pub search_level: usize,
    /// Mesh on which the certificate family is validated and measured.
    pub mesh_level: usize,
    pub restarts: usize,
    /// Coefficients are searched in the ball of this radius.
    pub radius: f64,
    /// Nelder-Mead iterations per restart.
    pub iterations: u64,
    pub seed: u64,
}

impl Default for WaistParams {
    fn default() -> Self {
        WaistParams { search_level: 4, mesh_level: 5, restarts: 64, radius: 0.2, iterations: 120, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaistResult {
    /// Smallest longest-level length found.
    pub min_max: f64,
    /// Coefficients of the certifying family.
    pub coeffs: Vec<f64>,
    /// Level of the longest member of that family.
    pub level: f64,
    /// `min_max / 2 pi`.
    pub ratio: f64,
    pub restart: usize,
    pub invalid_evaluations: usize,
}

/// Longest level curve of the family with perturbation `coeffs`.
pub fn sweepout_max_length(mesh: &Icosphere, coeffs: &[f64]) -> Result<(f64, f64)> {
    Ok(Sweepout::new(mesh, coeffs)?.max_level_length())
}

/// Nelder-Mead with the standard coefficients, run for `iterations` steps
/// or until the simplex values agree to `tol`. Returns the best vertex.
fn nelder_mead(f: &impl Fn(&[f64]) -> f64, mut simplex: Vec<Vec<f64>>, iterations: u64, tol: f64) -> (f64, Vec<f64>) {
    let n = simplex.len() - 1;
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    for _ in 0..iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if values[0].is_finite() && values[n] - values[0] <= tol {
            break;
        }
        let centroid: Vec<f64> = (0..simplex[0].len()).map(|k| simplex[..n].iter().map(|x| x[k]).sum::<f64>() / n as f64).collect();
        let reflected = lerp(&centroid, &simplex[n], -1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = lerp(&centroid, &simplex[n], -2.0);
            let fe = f(&expanded);
            (simplex[n], values[n]) = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < values[n - 1] {
            (simplex[n], values[n]) = (reflected, fr);
        } else {
            let (towards, ft) = if fr < values[n] { (&reflected, fr) } else { (&simplex[n], values[n]) };
            let contracted = lerp(&centroid, towards, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                (simplex[n], values[n]) = (contracted, fc);
            } else {
                for i in 1..=n {
                    simplex[i] = lerp(&simplex[0], &simplex[i], 0.5);
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&i, &j| values[i].total_cmp(&values[j])).expect("simplex is non-empty");
    (values[best], simplex[best].clone())
}

fn random_in_ball(r: &mut rng::Rng, radius: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..HARMONICS).map(|_| r.sample(StandardNormal)).collect();
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rho = radius * r.random::<f64>().powf(1.0 / HARMONICS as f64);
    g.iter().map(|x| x * rho / n).collect()
}

/// Minimises the longest level length over perturbations in a ball with
/// restarted Nelder-Mead searches. The result bounds the waist from above.
pub fn sweepout_waist_upper(params: &WaistParams) -> Result<WaistResult> {
    if params.restarts == 0 {
        return invalid("at least one restart is needed");
    }
    if !(params.radius >= 0.0 && params.radius.is_finite()) {
        return invalid("coefficient radius must be non-negative");
    }
    let mesh = Icosphere::new(params.search_level);
    let invalid_count = std::sync::atomic::AtomicUsize::new(0);
    let runs: Vec<(f64, Vec<f64>)> = (0..params.restarts)
        .into_par_iter()
        .map(|k| -> Result<(f64, Vec<f64>)> {
            let mut r = rng::stream(params.seed, "sweepout_waist", k as u64);
            let start = random_in_ball(&mut r, params.radius);
            let step = 0.25 * params.radius.max(1e-3);
            let mut simplex = vec![start.clone()];
            for i in 0..HARMONICS {
                let mut v = start.clone();
                v[i] += if v[i] > 0.0 { -step } else { step };
                simplex.push(v);
            }
            let radius2 = (params.radius + 1e-12).powi(2);
            // Leaving the ball or the two-critical-point class is infeasible.
            let objective = |c: &[f64]| {
                if c.iter().map(|x| x * x).sum::<f64>() > radius2 {
                    return f64::INFINITY;
                }
                sweepout_max_length(&mesh, c).map(|(len, _)| len).unwrap_or_else(|_| {
                    invalid_count.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    f64::INFINITY
                })
            };
            Ok(nelder_mead(&objective, simplex, params.iterations, 1e-9))
        })
        .collect::<Result<_>>()?;
    let (restart, (best, coeffs)) = runs
        .into_iter()
        .enumerate()
        .fold((0, (f64::INFINITY, Vec::new())), |acc, (k, run)| if run.0 < acc.1 .0 { (k, run) } else { acc });
    if !best.is_finite() {
        return Err(Error::SearchFailure("no restart found a valid sweepout".into()));
    }
    let (min_max, level) = sweepout_max_length(&Icosphere::new(params.mesh_level), &coeffs)?;
    Ok(WaistResult {
        min_max,
        coeffs,
        level,
        ratio: min_max / TAU,
        restart,
        invalid_evaluations: invalid_count.into_inner(),
    })
}

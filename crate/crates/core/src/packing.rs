//! Configurations of labelled points and the packing energies built from
//! their separation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matching::{bottleneck_small, bottleneck_threshold};
use crate::model_spaces::{euclidean_ball_volume, ModelSpace, Point};

/// Distance comparisons against a packing threshold allow this relative slack,
/// so that points constructed as exact multiples of a spacing are not split
/// by one ulp of rounding.
pub const SEPARATION_RTOL: f64 = 1e-12;

/// Largest `N` for which the bottleneck metric enumerates permutations.
pub const BRUTE_FORCE_MAX_N: usize = 8;

/// An ordered `N`-tuple of points of one model space.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    space: Arc<ModelSpace>,
    points: Vec<Point>,
}

impl Configuration {
    pub fn new(space: Arc<ModelSpace>, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return invalid("configuration needs at least one point");
        }
        for p in &points {
            space.validate(p)?;
        }
        Ok(Configuration { space, points })
    }

    /// Builds a configuration from 1D coordinates (interval or circle).
    pub fn from_scalars(space: Arc<ModelSpace>, xs: &[f64]) -> Result<Self> {
        Self::new(space, xs.iter().map(|&x| Point::scalar(x)).collect())
    }

    /// Skips validation; callers guarantee every point is canonical.
    pub(crate) fn new_unchecked(space: Arc<ModelSpace>, points: Vec<Point>) -> Self {
        Configuration { space, points }
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<ModelSpace> {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies a relabelling: point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return invalid("not a permutation of the point labels");
        }
        Ok(Configuration { space: self.space.clone(), points: perm.iter().map(|&i| self.points[i].clone()).collect() })
    }

    /// The closest pair `(i, j, distance)` with `i < j`; ties go to the lowest indices.
    pub fn closest_pair(&self) -> Result<(usize, usize, f64)> {
        if self.len() < 2 {
            return Err(Error::UndefinedSeparation);
        }
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = self.space.dist(&self.points[i], &self.points[j]);
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        Ok(best)
    }
}

/// `rho(psi)`: the minimum pairwise distance.
pub fn separation(c: &Configuration) -> Result<f64> {
    c.closest_pair().map(|(_, _, d)| d)
}

/// Monotone decreasing energies of the separation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyKind {
    /// `1 / rho`
    Reciprocal,
    /// `-rho`
    Negative,
    /// `-log rho`
    NegLog,
}

impl EnergyKind {
    /// Energy as a function of the separation value.
    pub fn of_separation(self, rho: f64) -> Result<f64> {
        match self {
            EnergyKind::Negative => Ok(-rho),
            _ if rho <= 0.0 => Err(Error::SingularConfiguration),
            EnergyKind::Reciprocal => Ok(1.0 / rho),
            EnergyKind::NegLog => Ok(-rho.ln()),
        }
    }
}

pub fn energy(c: &Configuration, kind: EnergyKind) -> Result<f64> {
    kind.of_separation(separation(c)?)
}

/// Whether closed balls of the given radii around the points have disjoint
/// interiors, i.e. `dist(x_i, x_j) >= r_i + r_j` for all pairs.
pub fn is_packing(c: &Configuration, radii: &[f64]) -> Result<bool> {
    if radii.len() != c.len() {
        return Err(Error::DimensionMismatch { expected: c.len(), got: radii.len() });
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return invalid("radii must be positive");
    }
    let pts = c.points();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if c.space().dist(&pts[i], &pts[j]) < radii[i] + radii[j] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Bottleneck distance between the unordered configurations: the minimum over
/// relabellings of the maximal displacement of a single point.
pub fn quotient_distance(a: &Configuration, b: &Configuration) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.space() != b.space() {
        return invalid("configurations live in different spaces");
    }
    Ok(quotient_dist_unchecked(a.space(), a.points(), b.points()))
}

pub(crate) fn quotient_dist_unchecked(space: &ModelSpace, a: &[Point], b: &[Point]) -> f64 {
    let n = a.len();
    match n {
        1 => space.dist(&a[0], &b[0]),
        2 => {
            let id = space.dist(&a[0], &b[0]).max(space.dist(&a[1], &b[1]));
            let sw = space.dist(&a[0], &b[1]).max(space.dist(&a[1], &b[0]));
            id.min(sw)
        }
        _ if n <= BRUTE_FORCE_MAX_N => {
            let mut cost = [[0.0; BRUTE_FORCE_MAX_N]; BRUTE_FORCE_MAX_N];
            for (i, p) in a.iter().enumerate() {
                for (j, q) in b.iter().enumerate() {
                    cost[i][j] = space.dist(p, q);
                }
            }
            bottleneck_small(&cost, n)
        }
        _ => {
            let cost: Vec<Vec<f64>> = a.iter().map(|p| b.iter().map(|q| space.dist(p, q)).collect()).collect();
            bottleneck_threshold(&cost)
        }
    }
}

/// Ordered (product sup) distance `max_i dist(x_i, y_i)`.
pub(crate) fn ordered_dist_unchecked(space: &ModelSpace, a: &[Point], b: &[Point]) -> f64 {
    a.iter().zip(b).map(|(p, q)| space.dist(p, q)).fold(0.0, f64::max)
}

/// Greedy covering and packing counts of a finite point set at scale `delta`.
///
/// `cover` is the length of a farthest-point traversal stopped once every
/// point lies within `delta` of a chosen centre; `pack` is the size of a
/// maximal `2 delta`-separated subset collected greedily in input order.
pub fn covering_packing_numbers(pts: &[Point], space: &ModelSpace, delta: f64) -> Result<(usize, usize)> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    if pts.is_empty() {
        return invalid("empty point set");
    }
    let mut nearest: Vec<f64> = pts.iter().map(|p| space.dist(p, &pts[0])).collect();
    let mut cover = 1;
    loop {
        let (far, &r) = nearest.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).expect("nonempty");
        if r <= delta {
            break;
        }
        cover += 1;
        for (k, p) in pts.iter().enumerate() {
            nearest[k] = nearest[k].min(space.dist(p, &pts[far]));
        }
    }
    let sep = 2.0 * delta * (1.0 - SEPARATION_RTOL);
    let mut chosen: Vec<&Point> = Vec::new();
    for p in pts {
        if chosen.iter().all(|q| space.dist(p, q) >= sep) {
            chosen.push(p);
        }
    }
    Ok((cover, chosen.len()))
}

/// `min over g in G of E(g psi)` for a finite group given as point permutations.
pub fn min_symmetrize<F>(c: &Configuration, group: &[Vec<usize>], energy: F) -> Result<f64>
where
    F: Fn(&Configuration) -> Result<f64>,
{
    if group.is_empty() {
        return invalid("group must contain at least the identity");
    }
    let mut best = f64::INFINITY;
    for g in group {
        best = best.min(energy(&c.permuted(g)?)?);
    }
    Ok(best)
}

/// All permutations of `0..n` (the symmetric group as point relabellings).
pub fn symmetric_group(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Hausdorff-type content `beta_k * sum r_i^k` of a covering by balls of radii `r_i`.
pub fn ball_cover_content(radii: &[f64], k: usize) -> f64 {
    euclidean_ball_volume(k) * radii.iter().map(|r| r.powi(k as i32)).sum::<f64>()
}

//! Largest equal-radius ball packings and the asymptotic packing constant.
//!
//! Each restart runs three phases from a uniform start:
//! 1. overlap-removal inflation: pairs closer than a slowly growing target
//!    diameter are pushed apart along their geodesics;
//! 2. soft-min ascent over all distance pieces with temperature
//!    `T_t = T_0 * 0.95^t`, `T_0 = rho_0 / 10`, keeping the best configuration;
//! 3. sequential linear programming on the linearised max-min problem,
//!    accepting a step only if the separation grows.
//!
//! All step sizes and thresholds are relative to the current separation, so
//! rescaling a space rescales the result.

use std::sync::Arc;

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model_spaces::{ModelSpace, Point};
use crate::packing::{is_packing, separation, Configuration};
use crate::rng;

const COOLING: f64 = 0.95;
/// Pieces this many temperatures above the minimum get no weight.
const WEIGHT_CUTOFF: f64 = 40.0;
const INFLATION_GROWTH: f64 = 0.02;
const SLP_INITIAL_TRUST: f64 = 0.05;
const SLP_MAX_TRUST: f64 = 1.0;
const SLP_MIN_TRUST: f64 = 1e-13;
const SLP_MIN_GAIN: f64 = 1e-15;
const SLP_MAX_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { restarts: 8, iterations: 200 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PackingTrace {
    pub restarts: usize,
    pub iterations: usize,
    pub best_restart: usize,
    /// Radius found by each restart, in restart order.
    pub per_restart: Vec<f64>,
    /// Running best radius over restarts.
    pub best_so_far: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PackingResult {
    pub radius: f64,
    pub config: Configuration,
    pub trace: PackingTrace,
}

/// `r_max` for `N` points on an interval or circle.
pub fn exact_oracle_1d(space: &ModelSpace, n: usize) -> Result<f64> {
    if n < 2 {
        return invalid("N >= 2 required");
    }
    match space {
        ModelSpace::Interval { length } => Ok(length / (2.0 * (n - 1) as f64)),
        ModelSpace::Circle { length } => Ok(length / (2.0 * n as f64)),
        _ => Err(Error::NotApplicable(format!("no closed form for {}", space.name()))),
    }
}

/// Best packing radius found for `n` equal balls.
pub fn max_packing_radius(space: &Arc<ModelSpace>, n: usize, budget: Budget, seed: u64) -> Result<PackingResult> {
    if n < 2 {
        return invalid("N >= 2 required");
    }
    if budget.restarts == 0 || budget.iterations == 0 {
        return invalid("budget must be positive");
    }
    let runs: Vec<Vec<Point>> = (0..budget.restarts)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, "max_packing_radius", k as u64);
            let start: Vec<Point> = (0..n).map(|_| space.sample_uniform(&mut r)).collect();
            optimise(space, start, budget.iterations)
        })
        .collect();
    let radii: Vec<f64> = runs.iter().map(|pts| 0.5 * min_distance(space, pts)).collect();
    let mut best = 0;
    for (k, &r) in radii.iter().enumerate() {
        if r > radii[best] {
            best = k;
        }
    }
    let mut best_so_far = Vec::with_capacity(radii.len());
    let mut acc = 0.0f64;
    for &r in &radii {
        acc = acc.max(r);
        best_so_far.push(acc);
    }
    let config = Configuration::new(space.clone(), runs[best].clone())?;
    let radius = 0.5 * separation(&config)?;
    debug_assert!(is_packing(&config, &vec![radius; n]).unwrap_or(false));
    Ok(PackingResult {
        radius,
        config,
        trace: PackingTrace { restarts: budget.restarts, iterations: budget.iterations, best_restart: best, per_restart: radii, best_so_far },
    })
}

fn min_distance(space: &ModelSpace, pts: &[Point]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.min(space.dist(&pts[i], &pts[j]));
        }
    }
    m
}

/// Distance pieces with gradients at both ends: `(length, d/dp, d/dq)`.
fn two_sided_pieces(space: &ModelSpace, p: &Point, q: &Point, buf: &mut Vec<(f64, Vec<f64>)>, out: &mut Vec<(f64, Vec<f64>, Vec<f64>)>) {
    out.clear();
    space.distance_pieces(p, q, buf);
    match space {
        ModelSpace::Sphere { .. } => {
            let (len, gp) = buf[0].clone();
            space.distance_pieces(q, p, buf);
            out.push((len, gp, buf[0].1.clone()));
        }
        _ => {
            for (len, g) in buf.drain(..) {
                let gq = g.iter().map(|x| -x).collect();
                out.push((len, g, gq));
            }
        }
    }
}

fn step_all(space: &ModelSpace, pts: &[Point], dirs: &[Vec<f64>], eta: f64) -> Vec<Point> {
    pts.iter().zip(dirs).map(|(p, d)| space.projected_step(p, d, eta)).collect()
}

fn optimise(space: &ModelSpace, mut pts: Vec<Point>, iterations: usize) -> Vec<Point> {
    let n = pts.len();
    let m = pts[0].coords().len();
    let mut buf = Vec::new();
    let mut pieces = Vec::new();

    // inflation
    for _ in 0..iterations / 4 {
        let rho = min_distance(space, &pts);
        let target = if rho > 0.0 { rho * (1.0 + INFLATION_GROWTH) } else { 1e-3 * space.length_scale() };
        let mut disp = vec![vec![0.0; m]; n];
        for i in 0..n {
            for j in i + 1..n {
                two_sided_pieces(space, &pts[i], &pts[j], &mut buf, &mut pieces);
                for (len, gp, gq) in &pieces {
                    if *len < target {
                        let push = 0.5 * (target - len);
                        for c in 0..m {
                            disp[i][c] += push * gp[c];
                            disp[j][c] += push * gq[c];
                        }
                    }
                }
            }
        }
        pts = step_all(space, &pts, &disp, 1.0);
    }

    // soft-min ascent
    let mut best = pts.clone();
    let mut best_rho = min_distance(space, &pts);
    let t0 = best_rho.max(1e-9 * space.length_scale()) / 10.0;
    let mut eta = 0.1 * best_rho.max(1e-9 * space.length_scale());
    for t in 0..iterations {
        let temp = t0 * COOLING.powi(t as i32);
        let (value, grad) = soft_min(space, &pts, temp, &mut buf, &mut pieces);
        let gmax = grad.iter().map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
        if !(gmax > 0.0) {
            break;
        }
        let dirs: Vec<Vec<f64>> = grad.iter().map(|g| g.iter().map(|x| x / gmax).collect()).collect();
        loop {
            let trial = step_all(space, &pts, &dirs, eta);
            let (tv, _) = soft_min(space, &trial, temp, &mut buf, &mut pieces);
            if tv > value {
                pts = trial;
                eta *= 1.2;
                break;
            }
            eta *= 0.5;
            if eta < 1e-14 * best_rho {
                break;
            }
        }
        let rho = min_distance(space, &pts);
        if rho > best_rho {
            best_rho = rho;
            best = pts.clone();
        }
        eta = eta.max(1e-12 * best_rho);
    }

    polish(space, best)
}

/// Soft-min of all distance pieces and its gradient with respect to each point.
fn soft_min(space: &ModelSpace, pts: &[Point], temp: f64, buf: &mut Vec<(f64, Vec<f64>)>, pieces: &mut Vec<(f64, Vec<f64>, Vec<f64>)>) -> (f64, Vec<Vec<f64>>) {
    let n = pts.len();
    let m = pts[0].coords().len();
    let floor = min_distance(space, pts);
    let mut z = 0.0;
    let mut grad = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in i + 1..n {
            two_sided_pieces(space, &pts[i], &pts[j], buf, pieces);
            for (len, gp, gq) in pieces.iter() {
                let a = (len - floor) / temp;
                if a > WEIGHT_CUTOFF {
                    continue;
                }
                let w = (-a).exp();
                z += w;
                for c in 0..m {
                    grad[i][c] += w * gp[c];
                    grad[j][c] += w * gq[c];
                }
            }
        }
    }
    for g in &mut grad {
        for x in g.iter_mut() {
            *x /= z;
        }
    }
    (floor - temp * z.ln(), grad)
}

/// Admissible displacement range of each coordinate within the trust radius.
fn bounds(space: &ModelSpace, p: &Point, radius: f64) -> Vec<(f64, f64)> {
    let c = p.coords();
    match space {
        ModelSpace::Interval { length } => vec![((-radius).max(-c[0]), radius.min(length - c[0]))],
        ModelSpace::Box { sides } => c.iter().zip(sides).map(|(x, s)| ((-radius).max(-x), radius.min(s - x))).collect(),
        _ => vec![(-radius, radius); c.len()],
    }
}

/// Sequential linear programming on the max-min problem: maximise `t` subject
/// to every nearby piece, linearised, staying above `t`, inside a trust region
/// that grows on good agreement and shrinks on rejection.
fn polish(space: &ModelSpace, mut pts: Vec<Point>) -> Vec<Point> {
    let n = pts.len();
    let m = pts[0].coords().len();
    let mut rho = min_distance(space, &pts);
    if !(rho > 0.0) {
        return pts;
    }
    let reach = (m as f64).sqrt();
    let mut radius = SLP_INITIAL_TRUST * rho;
    let mut buf = Vec::new();
    let mut pieces = Vec::new();
    for _ in 0..SLP_MAX_STEPS {
        if radius < SLP_MIN_TRUST * rho {
            break;
        }
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<Vec<Variable>> = pts.iter().map(|p| bounds(space, p, radius).into_iter().map(|b| lp.add_var(0.0, b)).collect()).collect();
        let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
        if let ModelSpace::Sphere { .. } = space {
            for (p, v) in pts.iter().zip(&vars) {
                let tangent: Vec<(Variable, f64)> = v.iter().copied().zip(p.coords().iter().copied()).collect();
                lp.add_constraint(tangent, ComparisonOp::Eq, 0.0);
            }
        }
        let cutoff = rho + 2.5 * reach * radius;
        for i in 0..n {
            for j in i + 1..n {
                two_sided_pieces(space, &pts[i], &pts[j], &mut buf, &mut pieces);
                for (len, gp, gq) in &pieces {
                    if *len <= cutoff {
                        let mut row: Vec<(Variable, f64)> = Vec::with_capacity(2 * m + 1);
                        row.extend(vars[i].iter().copied().zip(gp.iter().copied()));
                        row.extend(vars[j].iter().copied().zip(gq.iter().copied()));
                        row.push((t, -1.0));
                        // len + g.delta - t >= 0
                        lp.add_constraint(row, ComparisonOp::Ge, -len);
                    }
                }
            }
        }
        let Some(sol) = lp.solve().ok().and_then(|o| o.solution().cloned()) else { break };
        let predicted = sol.var_value(t) - rho;
        if !(predicted > SLP_MIN_GAIN * rho) {
            break;
        }
        let dirs: Vec<Vec<f64>> = vars.iter().map(|v| v.iter().map(|&x| sol.var_value(x)).collect()).collect();
        let trial = step_all(space, &pts, &dirs, 1.0);
        let actual = min_distance(space, &trial) - rho;
        if actual > 0.0 {
            pts = trial;
            rho += actual;
            if actual > 0.75 * predicted {
                radius = (2.0 * radius).min(SLP_MAX_TRUST * rho);
            } else if actual < 0.25 * predicted {
                radius *= 0.25;
            }
        } else {
            radius *= 0.25;
        }
    }
    pts
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitRow {
    pub n: usize,
    pub radius: f64,
    /// `N r^dim / vol`.
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PackingFit {
    pub constant: f64,
    pub table: Vec<FitRow>,
    /// Whether the radii are non-increasing in `N`; false flags an under-budgeted run.
    pub monotone: bool,
}

/// Normalised packing densities over `ns` and their limit, estimated as the
/// median over the largest quarter of the `N` values.
pub fn packing_constant_fit(space: &Arc<ModelSpace>, ns: &[usize], budget: Budget, seed: u64) -> Result<PackingFit> {
    if ns.is_empty() {
        return invalid("empty N list");
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("N list must be increasing");
    }
    if ns[0] < 2 {
        return invalid("N >= 2 required");
    }
    let dim = space.dim() as i32;
    let vol = space.volume();
    let table = ns
        .iter()
        .map(|&n| {
            let res = max_packing_radius(space, n, budget, rng::child_seed(seed, "packing_constant_fit", n as u64))?;
            Ok(FitRow { n, radius: res.radius, normalized: n as f64 * res.radius.powi(dim) / vol })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = table.windows(2).all(|w| w[1].radius <= w[0].radius);
    let top = ns.len().div_ceil(4);
    let mut tail: Vec<f64> = table[table.len() - top..].iter().map(|r| r.normalized).collect();
    tail.sort_by(f64::total_cmp);
    let constant = if top % 2 == 1 { tail[top / 2] } else { 0.5 * (tail[top / 2 - 1] + tail[top / 2]) };
    Ok(PackingFit { constant, table, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(s: ModelSpace) -> Arc<ModelSpace> {
        Arc::new(s)
    }

    #[test]
    fn oracle_values() {
        assert_eq!(exact_oracle_1d(&ModelSpace::circle(1.0).unwrap(), 4).unwrap(), 0.125);
        // centres may sit on the endpoints: 0 and 2
        assert_eq!(exact_oracle_1d(&ModelSpace::interval(2.0).unwrap(), 2).unwrap(), 1.0);
        assert_eq!(exact_oracle_1d(&ModelSpace::circle(3.0).unwrap(), 6).unwrap(), 0.25);
        assert!(exact_oracle_1d(&ModelSpace::unit_square_torus(), 3).is_err());
        assert!(exact_oracle_1d(&ModelSpace::circle(1.0).unwrap(), 1).is_err());
    }

    #[test]
    fn one_dimensional_examples() {
        let c = max_packing_radius(&sp(ModelSpace::circle(1.0).unwrap()), 5, Budget::default(), 1).unwrap();
        assert!((c.radius - 0.1).abs() < 1e-6, "{}", c.radius);
        let i = max_packing_radius(&sp(ModelSpace::interval(1.0).unwrap()), 3, Budget::default(), 1).unwrap();
        assert!((i.radius - 0.25).abs() < 1e-6, "{}", i.radius);
        assert!(is_packing(&i.config, &[i.radius; 3]).unwrap());
    }

    #[test]
    fn torus_pair_reaches_half_diagonal() {
        // grid oracle: max over a 401^2 grid of offsets of the torus distance
        let t = ModelSpace::unit_square_torus();
        let o = Point::new(vec![0.0, 0.0]);
        let mut grid = 0.0f64;
        for a in 0..=400 {
            for b in 0..=400 {
                grid = grid.max(t.dist(&o, &Point::new(vec![a as f64 / 400.0, b as f64 / 400.0])));
            }
        }
        let r = max_packing_radius(&sp(t), 2, Budget::default(), 2).unwrap();
        assert!((r.radius - grid / 2.0).abs() < 1e-3, "{} vs {}", r.radius, grid / 2.0);
    }

    #[test]
    fn invalid_requests() {
        let c = sp(ModelSpace::circle(1.0).unwrap());
        assert!(max_packing_radius(&c, 1, Budget::default(), 0).is_err());
        assert!(max_packing_radius(&c, 3, Budget { restarts: 0, iterations: 10 }, 0).is_err());
        assert!(packing_constant_fit(&sp(ModelSpace::unit_square_torus()), &[1, 4], Budget::default(), 0).is_err());
        assert!(packing_constant_fit(&c, &[4, 3], Budget::default(), 0).is_err());
    }

    #[test]
    fn trace_is_consistent() {
        let r = max_packing_radius(&sp(ModelSpace::sphere(2).unwrap()), 4, Budget { restarts: 3, iterations: 200 }, 3).unwrap();
        assert_eq!(r.trace.per_restart.len(), 3);
        assert_eq!(*r.trace.best_so_far.last().unwrap(), r.radius);
        assert_eq!(r.radius * 2.0, separation(&r.config).unwrap());
        // regular tetrahedron: angle arccos(-1/3)
        assert!((2.0 * r.radius - (-1.0f64 / 3.0).acos()).abs() < 1e-6, "{}", r.radius);
    }
}

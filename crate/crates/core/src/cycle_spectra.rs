//! Zero sets of finite-dimensional function families on a flat 2-torus.
//!
//! Fields live on an `M x M` grid of cell centres in lattice coordinates.
//! Zero-set lengths come from periodic marching squares; bisecting functions
//! for a family of disjoint disks are found by a continuation from smoothed
//! sign residuals to the exact ones, integrated chord by chord.

use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::extremal::{max_packing_radius, Budget};
use crate::model_spaces::{FlatTorus, ModelSpace, Point};
use crate::rng;

pub const DEFAULT_GRID: usize = 256;
pub const MIN_GRID: usize = 16;
const GRAM_TOL: f64 = 1e-10;

/// Real values at the cell centres of a periodic `M x M` grid.
///
/// Cell `(i, j)` has lattice coordinates `((i + 1/2) / M, (j + 1/2) / M)`;
/// values are stored with `i` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    torus: FlatTorus,
    m: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(torus: FlatTorus, m: usize, values: Vec<f64>) -> Result<Self> {
        if torus.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: torus.dim() });
        }
        if m < MIN_GRID {
            return Err(Error::Resolution(format!("grid size {m} below {MIN_GRID}")));
        }
        if values.len() != m * m {
            return invalid(format!("expected {} values, got {}", m * m, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("field values must be finite");
        }
        Ok(ScalarField { torus, m, values })
    }

    /// Samples `f` (a function of lattice coordinates) at the cell centres.
    pub fn from_fn(torus: FlatTorus, m: usize, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let h = 1.0 / m as f64;
        let mut values = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                values.push(f([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]));
            }
        }
        Self::new(torus, m, values)
    }

    pub fn torus(&self) -> &FlatTorus {
        &self.torus
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(j % self.m) * self.m + (i % self.m)]
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.torus.clone(), self.m, self.values.iter().map(|v| v * lambda).collect())
    }

    /// Periodic bilinear interpolation at lattice coordinates `u`.
    pub fn interpolate(&self, u: [f64; 2]) -> f64 {
        let m = self.m as f64;
        let s = u[0] * m - 0.5;
        let t = u[1] * m - 0.5;
        let (fs, ft) = (s.floor(), t.floor());
        let (a, b) = (s - fs, t - ft);
        let i = (fs as i64).rem_euclid(self.m as i64) as usize;
        let j = (ft as i64).rem_euclid(self.m as i64) as usize;
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        (1.0 - b) * ((1.0 - a) * v00 + a * v10) + b * ((1.0 - a) * v01 + a * v11)
    }

    /// Grid inner product `area / M^2 * sum f g`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        let w = self.torus.area() / (self.m * self.m) as f64;
        w * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Total length of the zero set, by marching squares with linear
/// interpolation along cell edges. Saddle cells are resolved by the sign of
/// the cell average.
pub fn zero_set_length(f: &ScalarField) -> Result<f64> {
    if f.values.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateZeroSet);
    }
    let m = f.m;
    let b = f.torus.basis();
    let h = 1.0 / m as f64;
    let seg = |p: [f64; 2], q: [f64; 2]| {
        let du = [(q[0] - p[0]) * h, (q[1] - p[1]) * h];
        let x = du[0] * b[0][0] + du[1] * b[1][0];
        let y = du[0] * b[0][1] + du[1] * b[1][1];
        x.hypot(y)
    };
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut total = 0.0;
            for i in 0..m {
                let v = [f.at(i, j), f.at(i + 1, j), f.at(i + 1, j + 1), f.at(i, j + 1)];
                let pos = v.map(|x| x > 0.0);
                if pos.iter().all(|&p| p == pos[0]) {
                    continue;
                }
                const CORNER: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
                let mut cross: [Option<[f64; 2]>; 4] = [None; 4];
                for e in 0..4 {
                    let (p, q) = (e, (e + 1) % 4);
                    if pos[p] != pos[q] {
                        let t = v[p] / (v[p] - v[q]);
                        let (a, c) = (CORNER[p], CORNER[q]);
                        cross[e] = Some([a[0] + t * (c[0] - a[0]), a[1] + t * (c[1] - a[1])]);
                    }
                }
                let pts: Vec<[f64; 2]> = cross.iter().flatten().copied().collect();
                if pts.len() == 2 {
                    total += seg(pts[0], pts[1]);
                } else {
                    let c = cross.map(|x| x.unwrap());
                    let centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                    if (centre > 0.0) == pos[0] {
                        total += seg(c[0], c[1]) + seg(c[2], c[3]);
                    } else {
                        total += seg(c[3], c[0]) + seg(c[1], c[2]);
                    }
                }
            }
            total
        })
        .collect();
    Ok(rows.iter().sum())
}

/// One unnormalised member of a function family.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Constant,
    /// `cos 2 pi (k . u)` in lattice coordinates `u`.
    Cos([i32; 2]),
    Sin([i32; 2]),
    Field(ScalarField),
}

impl Generator {
    #[inline]
    fn eval(&self, u: [f64; 2]) -> f64 {
        let phase = |k: &[i32; 2]| std::f64::consts::TAU * (k[0] as f64 * u[0] + k[1] as f64 * u[1]);
        match self {
            Generator::Constant => 1.0,
            Generator::Cos(k) => phase(k).cos(),
            Generator::Sin(k) => phase(k).sin(),
            Generator::Field(f) => f.interpolate(u),
        }
    }
}

/// A family of functions, orthonormal in the grid inner product.
///
/// Member `i` is `sum_j transform[i][j] * generators[j]` with a lower
/// triangular transform from Gram-Schmidt.
#[derive(Clone, Debug)]
pub struct FunctionBasis {
    torus: FlatTorus,
    m: usize,
    generators: Vec<Generator>,
    transform: Vec<Vec<f64>>,
    fields: Vec<ScalarField>,
}

impl FunctionBasis {
    pub fn new(torus: FlatTorus, m: usize, generators: Vec<Generator>) -> Result<Self> {
        if generators.is_empty() {
            return invalid("empty function family");
        }
        let mut raw = Vec::with_capacity(generators.len());
        for g in &generators {
            if let Generator::Field(f) = g {
                if f.torus != torus || f.m != m {
                    return invalid("field generator lives on a different grid");
                }
                raw.push(f.clone());
            } else {
                raw.push(ScalarField::from_fn(torus.clone(), m, |u| g.eval(u))?);
            }
        }
        let k = raw.len();
        let mut fields: Vec<ScalarField> = Vec::with_capacity(k);
        let mut transform: Vec<Vec<f64>> = Vec::with_capacity(k);
        for (i, g) in raw.iter().enumerate() {
            let g_norm = g.inner(g).sqrt();
            let mut v = g.values.clone();
            let mut t = vec![0.0; k];
            t[i] = 1.0;
            // Two passes of modified Gram-Schmidt.
            for _ in 0..2 {
                for (q, tq) in fields.iter().zip(&transform) {
                    let cur = ScalarField { torus: torus.clone(), m, values: v };
                    let p = cur.inner(q);
                    v = cur.values;
                    for (x, y) in v.iter_mut().zip(&q.values) {
                        *x -= p * y;
                    }
                    for (a, b) in t.iter_mut().zip(tq) {
                        *a -= p * b;
                    }
                }
            }
            let cur = ScalarField { torus: torus.clone(), m, values: v };
            let n = cur.inner(&cur).sqrt();
            if !(n > 1e-8 * g_norm) {
                return invalid(format!("generator {i} is linearly dependent on the previous ones"));
            }
            let values = cur.values.iter().map(|x| x / n).collect();
            t.iter_mut().for_each(|a| *a /= n);
            fields.push(ScalarField { torus: torus.clone(), m, values });
            transform.push(t);
        }
        let basis = FunctionBasis { torus, m, generators, transform, fields };
        let err = basis.gram_error();
        if err > GRAM_TOL {
            return Err(Error::SearchFailure(format!("orthonormalisation left Gram error {err:e}")));
        }
        Ok(basis)
    }

    /// The constant followed by `cos`/`sin` pairs ordered by Euclidean
    /// frequency, truncated to `k` members.
    pub fn trigonometric(torus: FlatTorus, k: usize, m: usize) -> Result<Self> {
        if k == 0 {
            return invalid("K >= 1 required");
        }
        if torus.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: torus.dim() });
        }
        // Dual basis: frequency of k is |B^{-T} k|.
        let b = torus.basis();
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let dual = [[b[1][1] / det, -b[1][0] / det], [-b[0][1] / det, b[0][0] / det]];
        let freq = |k: [i32; 2]| {
            let x = k[0] as f64 * dual[0][0] + k[1] as f64 * dual[1][0];
            let y = k[0] as f64 * dual[0][1] + k[1] as f64 * dual[1][1];
            x * x + y * y
        };
        let pairs = k / 2;
        let mut reach = 1i32;
        let modes = loop {
            let mut modes = Vec::new();
            for k1 in 0..=reach {
                for k2 in -reach..=reach {
                    if k1 > 0 || k2 > 0 {
                        modes.push([k1, k2]);
                    }
                }
            }
            modes.sort_by(|a, b| freq(*a).total_cmp(&freq(*b)).then(a.cmp(b)));
            // Everything outside the box has a frequency at least that of the
            // lowest mode on its boundary ring.
            let ring = (-(reach + 1)..=reach + 1)
                .flat_map(|i| [[reach + 1, i], [i, reach + 1]])
                .map(freq)
                .fold(f64::INFINITY, f64::min);
            if modes.len() > pairs && freq(modes[pairs.saturating_sub(1)]) < ring {
                break modes;
            }
            reach *= 2;
        };
        let mut gens = vec![Generator::Constant];
        for kk in modes {
            if gens.len() >= k {
                break;
            }
            gens.push(Generator::Cos(kk));
            if gens.len() < k {
                gens.push(Generator::Sin(kk));
            }
        }
        Self::new(torus, m, gens)
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn torus(&self) -> &FlatTorus {
        &self.torus
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    /// Orthonormal members sampled on the grid.
    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    pub fn gram_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.fields.iter().enumerate() {
            for (j, b) in self.fields.iter().enumerate().take(i + 1) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - target).abs());
            }
        }
        worst
    }

    /// Generator weights of `sum_i c_i b_i`.
    fn generator_weights(&self, c: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut a = vec![0.0; k];
        for (ci, row) in c.iter().zip(&self.transform) {
            for j in 0..k {
                a[j] += ci * row[j];
            }
        }
        a
    }

    /// `sum_i c_i b_i` on the grid.
    pub fn combine(&self, c: &[f64]) -> Result<ScalarField> {
        if c.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: c.len() });
        }
        let mut values = vec![0.0; self.m * self.m];
        for (ci, f) in c.iter().zip(&self.fields) {
            for (v, x) in values.iter_mut().zip(&f.values) {
                *v += ci * x;
            }
        }
        ScalarField::new(self.torus.clone(), self.m, values)
    }
}

/// A closed metric disk of the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    /// Lattice coordinates.
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BisectParams {
    /// Accepted `|int_U sign f| / vol U` per ball.
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
}

impl Default for BisectParams {
    fn default() -> Self {
        BisectParams { tol: 1e-3, starts: 32, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bisection {
    /// Unit coefficients in the orthonormal basis.
    pub coeffs: Vec<f64>,
    /// Signed `int_U sign f / vol U`, one per ball.
    pub residuals: Vec<f64>,
    pub start: usize,
    pub iterations: usize,
}

impl Bisection {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()))
    }
}

/// Chords run at this angle to the first Euclidean axis, so that straight
/// zero lines of trigonometric families (rational directions) are never
/// parallel to them.
const CHORD_ANGLE: f64 = 0.618_033_988_749_894_8;
const CHORD_SAMPLES: usize = 12;
const PANELS: usize = 8;
const PANEL_ORDER: usize = 8;
const PANEL_DEPTH: usize = 10;
const PANEL_TOL: f64 = 1e-8;
const SMOOTH_NODES: usize = 24;
const SIGMAS: [f64; 5] = [0.3, 0.1, 0.03, 0.01, 0.003];
const LM_STEPS: usize = 40;
const START_BATCH: usize = 1;

struct Disk {
    centre: [f64; 2],
    r: f64,
    vol: f64,
}

struct Problem<'a> {
    basis: &'a FunctionBasis,
    disks: Vec<Disk>,
    /// Euclidean to lattice.
    inv: [[f64; 2]; 2],
    /// Gauss-Legendre rule on `[-1, 1]` for the chord panels.
    panel_rule: Vec<(f64, f64)>,
    /// Generator values at the smoothing nodes, per disk, and node weights
    /// (already divided by the disk volume).
    smooth: Vec<(Vec<f64>, Vec<f64>)>,
}

impl<'a> Problem<'a> {
    fn new(basis: &'a FunctionBasis, balls: &[Ball]) -> Self {
        let b = basis.torus.basis();
        let det = b[0][0] * b[1][1] - b[1][0] * b[0][1];
        // Columns of B are the basis vectors, so B^{-1} rows:
        let inv = [[b[1][1] / det, -b[1][0] / det], [-b[0][1] / det, b[0][0] / det]];
        let disks: Vec<Disk> = balls
            .iter()
            .map(|ball| {
                let c = basis.torus.to_euclidean(ball.center.coords());
                Disk { centre: [c[0], c[1]], r: ball.radius, vol: std::f64::consts::PI * ball.radius * ball.radius }
            })
            .collect();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let panel_rule = GaussLegendre::new(NonZeroUsize::new(PANEL_ORDER).unwrap()).as_node_weight_pairs().to_vec();
        let rule = GaussLegendre::new(NonZeroUsize::new(SMOOTH_NODES).unwrap());
        let nodes = rule.as_node_weight_pairs();
        let k = basis.len();
        let mut problem = Problem { basis, disks, inv, panel_rule, smooth: Vec::new() };
        let smooth = problem
            .disks
            .iter()
            .map(|d| {
                let mut g = Vec::with_capacity(nodes.len() * nodes.len() * k);
                let mut w = Vec::with_capacity(nodes.len() * nodes.len());
                for &(x, wx) in nodes {
                    let (s, c) = ((x * half_pi).sin(), (x * half_pi).cos());
                    let (u, h) = (d.r * s, d.r * c);
                    for &(y, wy) in nodes {
                        let p = problem.lattice([d.centre[0] + u, d.centre[1] + h * y]);
                        g.extend(basis.generators.iter().map(|gen| gen.eval(p)));
                        w.push(wx * half_pi * d.r * c * wy * h / d.vol);
                    }
                }
                (g, w)
            })
            .collect();
        problem.smooth = smooth;
        problem
    }

    #[inline]
    fn lattice(&self, x: [f64; 2]) -> [f64; 2] {
        [self.inv[0][0] * x[0] + self.inv[0][1] * x[1], self.inv[1][0] * x[0] + self.inv[1][1] * x[1]]
    }

    #[inline]
    fn eval(&self, a: &[f64], x: [f64; 2]) -> f64 {
        let u = self.lattice(x);
        let gens = &self.basis.generators;
        let mut s = 0.0;
        let mut i = 0;
        while i < gens.len() {
            // A cos/sin pair of one frequency shares a single sin_cos.
            if let (Generator::Cos(k), Some(Generator::Sin(k2))) = (&gens[i], gens.get(i + 1)) {
                if k == k2 {
                    let phase = std::f64::consts::TAU * (k[0] as f64 * u[0] + k[1] as f64 * u[1]);
                    let (sn, cs) = phase.sin_cos();
                    s += a[i] * cs + a[i + 1] * sn;
                    i += 2;
                    continue;
                }
            }
            s += a[i] * gens[i].eval(u);
            i += 1;
        }
        s
    }

    /// Smoothed residuals `int tanh(f / sigma) / vol` and their gradients in
    /// generator weights.
    fn smoothed(&self, a: &[f64], sigma: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let k = a.len();
        self.smooth
            .par_iter()
            .map(|(g, w)| {
                let mut r = 0.0;
                let mut grad = vec![0.0; k];
                for (p, wp) in w.iter().enumerate() {
                    let gp = &g[p * k..(p + 1) * k];
                    let f: f64 = gp.iter().zip(a).map(|(x, y)| x * y).sum();
                    let t = (f / sigma).tanh();
                    r += wp * t;
                    let d = wp * (1.0 - t * t) / sigma;
                    for (gr, x) in grad.iter_mut().zip(gp) {
                        *gr += d * x;
                    }
                }
                (r, grad)
            })
            .unzip()
    }

    /// Exact residuals by chord quadrature, with gradients from the motion
    /// of the chord roots.
    fn exact(&self, a: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        self.disks.par_iter().map(|d| self.exact_disk(a, d)).unzip()
    }

    fn exact_disk(&self, a: &[f64], d: &Disk) -> (f64, Vec<f64>) {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut total = (0.0, vec![0.0; a.len()]);
        for p in 0..PANELS {
            let lo = -half_pi + std::f64::consts::PI * p as f64 / PANELS as f64;
            let hi = lo + std::f64::consts::PI / PANELS as f64;
            let coarse = self.panel(a, d, lo, hi);
            let (v, g) = self.refine(a, d, lo, hi, coarse, 0);
            total.0 += v;
            total.1.iter_mut().zip(&g).for_each(|(x, y)| *x += y);
        }
        total.0 /= d.vol;
        total.1.iter_mut().for_each(|x| *x /= d.vol);
        total
    }

    /// Adaptive bisection of a panel in the chord angle. The acceptance test
    /// only looks at `|fine - coarse|`, so it is the same for `f` and `-f`.
    fn refine(&self, a: &[f64], d: &Disk, lo: f64, hi: f64, coarse: (f64, Vec<f64>), depth: usize) -> (f64, Vec<f64>) {
        let mid = 0.5 * (lo + hi);
        let left = self.panel(a, d, lo, mid);
        let right = self.panel(a, d, mid, hi);
        let fine = left.0 + right.0;
        let tol = PANEL_TOL * d.vol * (hi - lo);
        if depth >= PANEL_DEPTH || (fine - coarse.0).abs() <= tol {
            let g = left.1.iter().zip(&right.1).map(|(x, y)| x + y).collect();
            return (fine, g);
        }
        let (lv, lg) = self.refine(a, d, lo, mid, left, depth + 1);
        let (rv, rg) = self.refine(a, d, mid, hi, right, depth + 1);
        (lv + rv, lg.iter().zip(&rg).map(|(x, y)| x + y).collect())
    }

    /// Gauss rule over chords with offsets `r sin theta`, theta in `[lo, hi]`.
    fn panel(&self, a: &[f64], d: &Disk, lo: f64, hi: f64) -> (f64, Vec<f64>) {
        let (half, centre) = (0.5 * (hi - lo), 0.5 * (hi + lo));
        let mut v = 0.0;
        let mut grad = vec![0.0; a.len()];
        for &(x, w) in &self.panel_rule {
            let theta = centre + half * x;
            let jac = w * half * d.r * theta.cos();
            v += jac * self.chord(a, d, theta, jac, &mut grad);
        }
        (v, grad)
    }

    /// Signed length of one chord; adds `jac` times its gradient to `grad`.
    fn chord(&self, a: &[f64], d: &Disk, theta: f64, jac: f64, grad: &mut [f64]) -> f64 {
        let (dir, nrm) = ((CHORD_ANGLE.cos(), CHORD_ANGLE.sin()), (-CHORD_ANGLE.sin(), CHORD_ANGLE.cos()));
        let (u, h) = (d.r * theta.sin(), d.r * theta.cos());
        let base = [d.centre[0] + u * nrm.0, d.centre[1] + u * nrm.1];
        let at = |v: f64| [base[0] + v * dir.0, base[1] + v * dir.1];
        let g = |v: f64| self.eval(a, at(v));
        let mut vs = [0.0; CHORD_SAMPLES + 1];
        let mut gs = [0.0; CHORD_SAMPLES + 1];
        for i in 0..=CHORD_SAMPLES {
            vs[i] = -h + 2.0 * h * i as f64 / CHORD_SAMPLES as f64;
            gs[i] = g(vs[i]);
        }
        let mut roots: Vec<f64> = Vec::new();
        for i in 0..CHORD_SAMPLES {
            if gs[i] == 0.0 && i > 0 {
                roots.push(vs[i]);
            } else if gs[i] * gs[i + 1] < 0.0 {
                roots.push(illinois(&g, vs[i], vs[i + 1], gs[i], gs[i + 1]));
            }
        }
        let mut signed = 0.0;
        let mut lo = -h;
        for &root in roots.iter().chain(std::iter::once(&h)) {
            signed += sign(g(0.5 * (lo + root))) * (root - lo);
            lo = root;
        }
        // A root moves by -g_k / f_v under a change of weight k; either way
        // the positive part grows by 2 g_k / |f_v|.
        let dv = 1e-6 * d.r;
        for &root in &roots {
            let slope = ((g(root + dv) - g(root - dv)) / (2.0 * dv)).abs();
            if slope > 0.0 {
                let p = self.lattice(at(root));
                for (gr, gen) in grad.iter_mut().zip(&self.basis.generators) {
                    *gr += jac * 2.0 * gen.eval(p) / slope;
                }
            }
        }
        signed
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Regula falsi with the Illinois modification. Odd in `g`: negating `g`
/// returns the same root bit for bit.
fn illinois(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..100 {
        let x = (a * gb - b * ga) / (gb - ga);
        if !(x > a && x < b) || (b - a) <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            return 0.5 * (a + b);
        }
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx * gb < 0.0 {
            a = b;
            ga = gb;
            b = x;
            gb = gx;
            side = 0;
        } else {
            b = x;
            gb = gx;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
        // Keep a < b for the bracket test.
        if a > b {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut ga, &mut gb);
            side = -side;
        }
    }
    0.5 * (a + b)
}

/// Orthonormal basis of the tangent space of the unit sphere at `c`, as
/// columns of a `K x (K-1)` matrix (a Householder reflection).
fn tangent_frame(c: &[f64]) -> DMatrix<f64> {
    let k = c.len();
    let mut v = DVector::from_column_slice(c);
    let s = if c[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += s;
    let vv = v.dot(&v);
    let h = DMatrix::<f64>::identity(k, k) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, k - 1).into_owned()
}

fn normalize(c: &mut [f64]) {
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter_mut().for_each(|x| *x /= n);
}

impl Problem<'_> {
    fn residuals(&self, c: &[f64], sigma: Option<f64>) -> (Vec<f64>, DMatrix<f64>) {
        let a = self.basis.generator_weights(c);
        let (r, ga) = match sigma {
            Some(s) => self.smoothed(&a, s),
            None => self.exact(&a),
        };
        // Chain rule through a = T^T c.
        let k = c.len();
        let jac = DMatrix::from_fn(r.len(), k, |i, m| self.basis.transform[m].iter().zip(&ga[i]).map(|(t, g)| t * g).sum());
        (r, jac)
    }

    /// Levenberg-Marquardt on the sphere. Returns the final point and the
    /// number of accepted steps.
    fn descend(&self, mut c: Vec<f64>, sigma: Option<f64>, target: f64) -> (Vec<f64>, Vec<f64>, usize) {
        let (mut r, mut jac) = self.residuals(&c, sigma);
        let mut cost: f64 = r.iter().map(|x| x * x).sum();
        let mut lambda = 1e-3;
        let mut accepted = 0;
        for _ in 0..LM_STEPS {
            if r.iter().all(|x| x.abs() <= target) {
                break;
            }
            let e = tangent_frame(&c);
            let jt = &jac * &e;
            let rv = DVector::from_column_slice(&r);
            let jtj = jt.transpose() * &jt;
            let g = jt.transpose() * rv;
            let scale = jtj.diagonal().max().max(1e-12);
            let mut improved = false;
            for _ in 0..12 {
                let mut lhs = jtj.clone();
                for i in 0..lhs.nrows() {
                    lhs[(i, i)] += lambda * scale;
                }
                let Some(step) = lhs.cholesky().map(|ch| ch.solve(&(-&g))) else {
                    lambda *= 10.0;
                    continue;
                };
                let mut trial: Vec<f64> = (DVector::from_column_slice(&c) + &e * step).iter().copied().collect();
                normalize(&mut trial);
                let (tr, tj) = self.residuals(&trial, sigma);
                let tc: f64 = tr.iter().map(|x| x * x).sum();
                if tc < cost {
                    c = trial;
                    r = tr;
                    jac = tj;
                    cost = tc;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    accepted += 1;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (c, r, accepted)
    }

    fn solve_from(&self, start: Vec<f64>, tol: f64) -> (Vec<f64>, Vec<f64>, usize) {
        let scale = 1.0 / self.basis.torus.area().sqrt();
        let mut c = start;
        let mut steps = 0;
        for s in SIGMAS {
            let (nc, _, n) = self.descend(c, Some(s * scale), 0.1 * tol);
            c = nc;
            steps += n;
        }
        let (c, r, n) = self.descend(c, None, 0.25 * tol);
        (c, r, steps + n)
    }
}

fn validate_balls(torus: &FlatTorus, balls: &[Ball]) -> Result<()> {
    let space = ModelSpace::FlatTorus(torus.clone());
    let inj = space.injectivity_radius();
    for (i, b) in balls.iter().enumerate() {
        space.validate(&b.center)?;
        if !(b.radius > 0.0 && b.radius <= inj * (1.0 + 1e-12)) {
            return invalid(format!("ball {i} radius {} outside (0, {inj}]", b.radius));
        }
    }
    for i in 0..balls.len() {
        for j in 0..i {
            let d = space.dist(&balls[i].center, &balls[j].center);
            let need = balls[i].radius + balls[j].radius;
            if d < need * (1.0 - 1e-12) {
                return Err(Error::InvalidPartition(format!("balls {j} and {i} overlap: distance {d} < {need}")));
            }
        }
    }
    Ok(())
}

/// Signed half-volume residuals of `sum c_k b_k` over each ball.
pub fn bisection_residuals(basis: &FunctionBasis, balls: &[Ball], c: &[f64]) -> Result<Vec<f64>> {
    if c.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: c.len() });
    }
    validate_balls(&basis.torus, balls)?;
    let problem = Problem::new(basis, balls);
    Ok(problem.residuals(c, None).0)
}

/// A unit coefficient vector whose function cuts every ball into halves of
/// equal volume, up to `params.tol`.
pub fn bisect_balls(basis: &FunctionBasis, balls: &[Ball], params: &BisectParams) -> Result<Bisection> {
    if balls.len() + 1 != basis.len() {
        return Err(Error::DimensionMismatch { expected: balls.len() + 1, got: basis.len() });
    }
    if !(params.tol > 0.0) || params.starts == 0 {
        return invalid("tolerance and start count must be positive");
    }
    validate_balls(&basis.torus, balls)?;
    let problem = Problem::new(basis, balls);
    let k = basis.len();
    let mut best: Option<(f64, usize)> = None;
    for batch in (0..params.starts).step_by(START_BATCH) {
        let end = (batch + START_BATCH).min(params.starts);
        let runs: Vec<(Vec<f64>, Vec<f64>, usize)> = (batch..end)
            .into_par_iter()
            .map(|s| {
                let mut r = rng::stream(params.seed, "bisect_balls", s as u64);
                let mut c: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut r)).collect();
                normalize(&mut c);
                problem.solve_from(c, params.tol)
            })
            .collect();
        for (offset, (c, r, iterations)) in runs.into_iter().enumerate() {
            let worst = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if worst <= params.tol {
                return Ok(Bisection { coeffs: c, residuals: r, start: batch + offset, iterations });
            }
            if best.is_none_or(|(w, _)| worst < w) {
                best = Some((worst, batch + offset));
            }
        }
    }
    let (worst, s) = best.unwrap();
    Err(Error::SearchFailure(format!(
        "no bisecting function within {} after {} starts (best {worst:.3e} at start {s})",
        params.tol, params.starts
    )))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: usize,
    /// Basis dimension `N + 1`.
    pub k: usize,
    pub ball_radius: f64,
    pub length: f64,
    /// `N * 2 r`: each bisected disk holds a curve at least a diameter long.
    pub waist_bound: f64,
    /// `length / sqrt(N * area)`.
    pub normalized: f64,
    pub max_residual: f64,
    pub start: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeSpectrum {
    pub rows: Vec<SpectrumRow>,
    /// Least-squares slope of `ln length` against `ln N`.
    pub exponent: f64,
    /// `exp` of the fitted intercept.
    pub prefactor: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScalingParams {
    pub grid: usize,
    pub budget: Budget,
    pub bisect: BisectParams,
    pub seed: u64,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams { grid: DEFAULT_GRID, budget: Budget::default(), bisect: BisectParams::default(), seed: 0 }
    }
}

/// For each `N`, packs `N` equal disks as well as possible, bisects them with
/// the first `N + 1` trigonometric functions and measures the zero set.
///
/// `N = 1` uses one disk of the injectivity radius at the origin.
pub fn volume_spectrum_scaling(torus: &FlatTorus, ns: &[usize], params: &ScalingParams) -> Result<VolumeSpectrum> {
    if ns.is_empty() || ns.contains(&0) {
        return invalid("N values must be positive");
    }
    let space = Arc::new(ModelSpace::FlatTorus(torus.clone()));
    let area = torus.area();
    let rows = ns
        .par_iter()
        .map(|&n| -> Result<SpectrumRow> {
            let balls = if n == 1 {
                vec![Ball { center: Point::new(vec![0.0, 0.0]), radius: space.injectivity_radius() }]
            } else {
                let seed = rng::child_seed(params.seed, "volume_spectrum_scaling/packing", n as u64);
                let packing = max_packing_radius(&space, n, params.budget, seed)?;
                let r = packing.radius;
                packing.config.points().iter().map(|p| Ball { center: p.clone(), radius: r }).collect()
            };
            let basis = FunctionBasis::trigonometric(torus.clone(), n + 1, params.grid)?;
            let bp = BisectParams { seed: rng::child_seed(params.seed, "volume_spectrum_scaling/bisect", n as u64), ..params.bisect };
            let cut = bisect_balls(&basis, &balls, &bp)?;
            let length = zero_set_length(&basis.combine(&cut.coeffs)?)?;
            Ok(SpectrumRow {
                n,
                k: n + 1,
                ball_radius: balls[0].radius,
                length,
                waist_bound: 2.0 * n as f64 * balls[0].radius,
                normalized: length / (n as f64 * area).sqrt(),
                max_residual: cut.max_residual(),
                start: cut.start,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (exponent, intercept) = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.length.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
        (slope, my - slope * mx)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(VolumeSpectrum { rows, exponent, prefactor: intercept.exp() })
}

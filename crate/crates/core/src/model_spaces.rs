//! Compact model geometries: interval, circle, flat torus, box and round sphere.
//!
//! Each [`ModelSpace`] knows its exact geodesic distance, total volume and
//! uniform sampler. Points are plain coordinate vectors whose meaning depends
//! on the variant:
//!
//! | variant     | coordinates                                       |
//! |-------------|---------------------------------------------------|
//! | `Interval`  | one scalar in `[0, L]`                            |
//! | `Circle`    | arc-length position in `[0, L)`                   |
//! | `FlatTorus` | lattice coordinates, each in `[0, 1)`             |
//! | `Box`       | Cartesian coordinates in `[0, s_1] x ... x [0, s_d]` |
//! | `Sphere`    | unit vector in `R^{d+1}`                          |
//!
//! Tangent vectors handed to [`ModelSpace::geodesic_step`] are always given in
//! ambient Cartesian coordinates (for the torus: Euclidean, not lattice).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of a model space. See the module docs for the coordinate convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn scalar(x: f64) -> Self {
        Point(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Largest supported torus dimension.
pub const MAX_TORUS_DIM: usize = 4;

type Mat = [[f64; MAX_TORUS_DIM]; MAX_TORUS_DIM];
type Vector = [f64; MAX_TORUS_DIM];

/// Flat torus `R^d / B Z^d`, with a basis reduction precomputed for exact
/// minimum-image distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FlatTorus {
    /// Basis vectors as given (one per entry).
    basis: Vec<Vec<f64>>,
    d: usize,
    /// Columns are basis vectors: `x = basis_mat * lambda`.
    basis_mat: Mat,
    basis_inv: Mat,
    /// Reduced basis (columns) and its inverse.
    reduced: Mat,
    reduced_inv: Mat,
    /// Offsets in `{-1,0,1}^d`, in reduced coordinates.
    offsets: Vec<Vector>,
}

impl TryFrom<Vec<Vec<f64>>> for FlatTorus {
    type Error = Error;
    fn try_from(basis: Vec<Vec<f64>>) -> Result<Self> {
        FlatTorus::new(basis)
    }
}

impl From<FlatTorus> for Vec<Vec<f64>> {
    fn from(t: FlatTorus) -> Self {
        t.basis
    }
}

fn to_mat(m: &DMatrix<f64>) -> Mat {
    let mut out = [[0.0; MAX_TORUS_DIM]; MAX_TORUS_DIM];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[i][j] = m[(i, j)];
        }
    }
    out
}

#[inline]
fn mat_vec(m: &Mat, v: &[f64], d: usize) -> Vector {
    let mut out = [0.0; MAX_TORUS_DIM];
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..d {
            s += m[i][j] * v[j];
        }
        out[i] = s;
    }
    out
}

impl FlatTorus {
    /// Torus spanned by the given basis vectors (one vector per entry).
    pub fn new(basis: Vec<Vec<f64>>) -> Result<Self> {
        let d = basis.len();
        if d == 0 {
            return invalid("flat torus needs at least one basis vector");
        }
        if d > MAX_TORUS_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        if basis.iter().any(|b| b.len() != d) {
            return invalid("lattice basis must be a square matrix");
        }
        if basis.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("lattice basis has non-finite entries");
        }
        let bm = DMatrix::from_fn(d, d, |i, j| basis[j][i]);
        let scale = bm.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let det = bm.determinant();
        if !(det.abs() > 1e-12 * scale.powi(d as i32)) {
            return invalid("lattice basis is singular");
        }
        let singular = || Error::InvalidInput("lattice basis is singular".into());
        let binv = bm.clone().try_inverse().ok_or_else(singular)?;
        let red = reduce_basis(&bm);
        let rinv = red.clone().try_inverse().ok_or_else(singular)?;
        let mut offsets: Vec<Vector> = vec![[0.0; MAX_TORUS_DIM]];
        for k in 0..d {
            offsets = offsets
                .into_iter()
                .flat_map(|o| {
                    [-1.0, 0.0, 1.0].into_iter().map(move |s| {
                        let mut o = o;
                        o[k] = s;
                        o
                    })
                })
                .collect();
        }
        Ok(FlatTorus {
            basis,
            d,
            basis_mat: to_mat(&bm),
            basis_inv: to_mat(&binv),
            reduced: to_mat(&red),
            reduced_inv: to_mat(&rinv),
            offsets,
        })
    }

    /// Axis-aligned torus with the given side lengths.
    pub fn rectangular(sides: &[f64]) -> Result<Self> {
        let d = sides.len();
        Self::new((0..d).map(|i| (0..d).map(|j| if i == j { sides[i] } else { 0.0 }).collect()).collect())
    }

    /// Hexagonal 2-torus with basis `a(1,0), a(1/2, sqrt(3)/2)` scaled to the given area.
    pub fn hexagonal(area: f64) -> Result<Self> {
        let a = (2.0 * area / 3f64.sqrt()).sqrt();
        Self::new(vec![vec![a, 0.0], vec![0.5 * a, 0.5 * 3f64.sqrt() * a]])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// The same torus with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.basis.iter().map(|b| b.iter().map(|x| x * factor).collect()).collect())
    }

    pub fn area(&self) -> f64 {
        let d = self.d;
        DMatrix::from_fn(d, d, |i, j| self.basis_mat[i][j]).determinant().abs()
    }

    /// Euclidean position of lattice coordinates.
    pub fn to_euclidean(&self, lattice: &[f64]) -> Vec<f64> {
        mat_vec(&self.basis_mat, lattice, self.d)[..self.d].to_vec()
    }

    /// Lattice coordinates (not wrapped) of a Euclidean vector.
    pub fn to_lattice(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.basis_inv, x, self.d)[..self.d].to_vec()
    }

    /// Shortest Euclidean representative of the difference `v` modulo the lattice.
    pub fn min_image(&self, v: &[f64]) -> Vec<f64> {
        let mut best = Vec::new();
        let mut best_n = f64::INFINITY;
        self.for_each_image(v, |img| {
            let n: f64 = img.iter().map(|x| x * x).sum();
            if n < best_n {
                best_n = n;
                best = img.to_vec();
            }
        });
        best
    }

    /// Visits the `3^d` lattice translates of the Euclidean vector `v` nearest
    /// to the origin.
    #[inline]
    pub fn for_each_image(&self, v: &[f64], mut f: impl FnMut(&[f64])) {
        let d = self.d;
        let mut mu = mat_vec(&self.reduced_inv, v, d);
        for m in mu.iter_mut().take(d) {
            *m -= m.round();
        }
        let mut shifted = [0.0; MAX_TORUS_DIM];
        for off in &self.offsets {
            for j in 0..d {
                shifted[j] = mu[j] + off[j];
            }
            let img = mat_vec(&self.reduced, &shifted, d);
            f(&img[..d]);
        }
    }

    /// Squared minimum-image distance between lattice coordinates `a` and `b`.
    #[inline]
    fn dist2(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.d;
        let mut dl = [0.0; MAX_TORUS_DIM];
        for j in 0..d {
            dl[j] = b[j] - a[j];
        }
        let v = mat_vec(&self.basis_mat, &dl, d);
        let mut best = f64::INFINITY;
        self.for_each_image(&v[..d], |img| {
            let n: f64 = img.iter().map(|x| x * x).sum();
            if n < best {
                best = n;
            }
        });
        best
    }

    /// Length of the shortest nonzero lattice vector, for 2-tori.
    pub fn systole(&self) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        let b = gauss_reduce([self.basis[0][0], self.basis[0][1]], [self.basis[1][0], self.basis[1][1]]);
        Ok(norm(&b[0]))
    }

    fn shortest_vector_len(&self) -> f64 {
        (0..self.d)
            .map(|j| (0..self.d).map(|i| self.reduced[i][j].powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Lagrange-Gauss reduction of a planar lattice basis; the first output vector
/// is a shortest nonzero lattice vector.
pub fn gauss_reduce(mut a: [f64; 2], mut b: [f64; 2]) -> [[f64; 2]; 2] {
    let dot = |u: &[f64; 2], v: &[f64; 2]| u[0] * v[0] + u[1] * v[1];
    if dot(&a, &a) > dot(&b, &b) {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        let mu = (dot(&a, &b) / dot(&a, &a)).round();
        b = [b[0] - mu * a[0], b[1] - mu * a[1]];
        if dot(&b, &b) >= dot(&a, &a) {
            return [a, b];
        }
        std::mem::swap(&mut a, &mut b);
    }
}

/// Minimum and determinant of the positive definite integral form
/// `a x^2 + 2 b x y + c y^2`, by exact Lagrange reduction.
///
/// For a lattice with Gram matrix `[[a, b], [b, c]]` the Loewner ratio
/// satisfies `(systole^2 / area)^2 = min^2 / det` exactly.
pub fn reduced_form_minimum(a: i64, b: i64, c: i64) -> Result<(i128, i128)> {
    let (mut a, mut b, mut c) = (a as i128, b as i128, c as i128);
    let det = a * c - b * b;
    if a <= 0 || det <= 0 {
        return invalid("form is not positive definite");
    }
    loop {
        if a > c {
            std::mem::swap(&mut a, &mut c);
        }
        // Translate y -> y - mu x with mu the nearest integer to b / a.
        let mu = (2 * b + a).div_euclid(2 * a);
        if mu == 0 {
            return Ok((a, det));
        }
        c = c - 2 * mu * b + mu * mu * a;
        b -= mu * a;
    }
}

/// `systole^2 / area` of a flat 2-torus, with the systole squared taken
/// from the reduced basis without a square root.
pub fn loewner_ratio(space: &ModelSpace) -> Result<f64> {
    match space {
        ModelSpace::FlatTorus(t) if t.dim() == 2 => {
            let b = t.basis();
            let r = gauss_reduce([b[0][0], b[0][1]], [b[1][0], b[1][1]]);
            Ok((r[0][0] * r[0][0] + r[0][1] * r[0][1]) / t.area())
        }
        other => invalid(format!("the Loewner ratio needs a flat 2-torus, got {}", other.name())),
    }
}

fn reduce_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.ncols();
    match d {
        1 => m.clone(),
        2 => {
            let r = gauss_reduce([m[(0, 0)], m[(1, 0)]], [m[(0, 1)], m[(1, 1)]]);
            DMatrix::from_fn(2, 2, |i, j| r[j][i])
        }
        _ => lll(m),
    }
}

/// Textbook LLL with `delta = 0.99` on the columns of `m`.
fn lll(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.ncols();
    let mut b: Vec<DVector<f64>> = (0..d).map(|j| m.column(j).into_owned()).collect();
    let gso = |b: &[DVector<f64>]| {
        let mut bs: Vec<DVector<f64>> = Vec::with_capacity(b.len());
        let mut mu = vec![vec![0.0; b.len()]; b.len()];
        for i in 0..b.len() {
            let mut v = b[i].clone();
            for j in 0..i {
                mu[i][j] = b[i].dot(&bs[j]) / bs[j].dot(&bs[j]);
                v -= &bs[j] * mu[i][j];
            }
            bs.push(v);
        }
        (bs, mu)
    };
    let mut k = 1;
    let mut guard = 0;
    while k < d && guard < 10_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (_, mu) = gso(&b);
            let q = mu[k][j].round();
            if q != 0.0 {
                let bj = b[j].clone();
                b[k] -= bj * q;
            }
        }
        let (bs, mu) = gso(&b);
        if bs[k].dot(&bs[k]) >= (0.99 - mu[k][k - 1].powi(2)) * bs[k - 1].dot(&bs[k - 1]) {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    DMatrix::from_fn(d, d, |i, j| b[j][i])
}

/// One of the five model geometries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelSpace {
    Interval { length: f64 },
    Circle { length: f64 },
    FlatTorus(FlatTorus),
    Box { sides: Vec<f64> },
    /// Unit round sphere `S^dim`, `dim` in `{1, 2, 3}`.
    Sphere { dim: usize },
}

impl ModelSpace {
    pub fn interval(length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return invalid("interval length must be positive");
        }
        Ok(ModelSpace::Interval { length })
    }

    pub fn circle(length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return invalid("circle length must be positive");
        }
        Ok(ModelSpace::Circle { length })
    }

    pub fn torus(basis: Vec<Vec<f64>>) -> Result<Self> {
        Ok(ModelSpace::FlatTorus(FlatTorus::new(basis)?))
    }

    pub fn unit_square_torus() -> Self {
        ModelSpace::FlatTorus(FlatTorus::rectangular(&[1.0, 1.0]).expect("unit square is a valid lattice"))
    }

    pub fn hexagonal_torus(area: f64) -> Result<Self> {
        Ok(ModelSpace::FlatTorus(FlatTorus::hexagonal(area)?))
    }

    pub fn cube(sides: Vec<f64>) -> Result<Self> {
        if sides.is_empty() || sides.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return invalid("box sides must be positive");
        }
        Ok(ModelSpace::Box { sides })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(ModelSpace::Sphere { dim })
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        match self {
            ModelSpace::Interval { .. } | ModelSpace::Circle { .. } => 1,
            ModelSpace::FlatTorus(t) => t.dim(),
            ModelSpace::Box { sides } => sides.len(),
            ModelSpace::Sphere { dim } => *dim,
        }
    }

    /// Number of stored coordinates per point.
    pub fn coord_len(&self) -> usize {
        match self {
            ModelSpace::Sphere { dim } => dim + 1,
            _ => self.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpace::Interval { .. } => "interval",
            ModelSpace::Circle { .. } => "circle",
            ModelSpace::FlatTorus(_) => "torus",
            ModelSpace::Box { .. } => "box",
            ModelSpace::Sphere { .. } => "sphere",
        }
    }

    /// Checks the coordinate count, range and normalisation of `p`.
    pub fn validate(&self, p: &Point) -> Result<()> {
        let c = p.coords();
        if c.len() != self.coord_len() {
            return Err(Error::DimensionMismatch { expected: self.coord_len(), got: c.len() });
        }
        if c.iter().any(|x| !x.is_finite()) {
            return invalid("non-finite coordinate");
        }
        let ok = match self {
            ModelSpace::Interval { length } => (0.0..=*length).contains(&c[0]),
            ModelSpace::Circle { length } => (0.0..*length).contains(&c[0]),
            ModelSpace::FlatTorus(_) => c.iter().all(|x| (0.0..1.0).contains(x)),
            ModelSpace::Box { sides } => c.iter().zip(sides).all(|(x, s)| (0.0..=*s).contains(x)),
            ModelSpace::Sphere { .. } => (norm(c) - 1.0).abs() <= 1e-12,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("point {c:?} outside {}", self.name()))
        }
    }

    /// Brings `p` to its canonical representative (wrapping, clamping, normalising).
    pub fn canonicalize(&self, p: &Point) -> Point {
        let c = p.coords();
        match self {
            ModelSpace::Interval { length } => Point(vec![c[0].clamp(0.0, *length)]),
            ModelSpace::Circle { length } => Point(vec![wrap(c[0], *length)]),
            ModelSpace::FlatTorus(_) => Point(c.iter().map(|&x| wrap(x, 1.0)).collect()),
            ModelSpace::Box { sides } => Point(c.iter().zip(sides).map(|(x, s)| x.clamp(0.0, *s)).collect()),
            ModelSpace::Sphere { .. } => {
                let n = norm(c);
                Point(c.iter().map(|x| x / n).collect())
            }
        }
    }

    fn check_pair(&self, p: &Point, q: &Point) -> Result<()> {
        let n = self.coord_len();
        for x in [p, q] {
            if x.coords().len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.coords().len() });
            }
        }
        Ok(())
    }

    /// Geodesic distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_pair(p, q)?;
        Ok(self.dist(p, q))
    }

    /// Geodesic distance without the dimension check; hot loops use this.
    pub fn dist(&self, p: &Point, q: &Point) -> f64 {
        let (a, b) = (p.coords(), q.coords());
        match self {
            ModelSpace::Interval { .. } => (a[0] - b[0]).abs(),
            ModelSpace::Circle { length } => {
                let d = (a[0] - b[0]).abs() % length;
                d.min(length - d)
            }
            ModelSpace::FlatTorus(t) => t.dist2(a, b).sqrt(),
            ModelSpace::Box { .. } => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            ModelSpace::Sphere { .. } => {
                let (mut s, mut d) = (0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    s += (x + y) * (x + y);
                    d += (x - y) * (x - y);
                }
                2.0 * d.sqrt().atan2(s.sqrt())
            }
        }
    }

    /// Total Riemannian volume.
    pub fn volume(&self) -> f64 {
        match self {
            ModelSpace::Interval { length } | ModelSpace::Circle { length } => *length,
            ModelSpace::FlatTorus(t) => t.area(),
            ModelSpace::Box { sides } => sides.iter().product(),
            ModelSpace::Sphere { dim } => sphere_volume(*dim),
        }
    }

    /// Injectivity radius (for the interval and box: their diameter).
    pub fn injectivity_radius(&self) -> f64 {
        match self {
            ModelSpace::Interval { length } => *length,
            ModelSpace::Circle { length } => 0.5 * length,
            ModelSpace::FlatTorus(t) => 0.5 * t.shortest_vector_len(),
            ModelSpace::Box { sides } => norm(sides),
            ModelSpace::Sphere { .. } => PI,
        }
    }

    /// Natural length unit `vol^(1/n)`; all scale-dependent tolerances are
    /// expressed in multiples of it.
    pub fn length_scale(&self) -> f64 {
        match self {
            ModelSpace::Sphere { .. } => 1.0,
            _ => self.volume().powf(1.0 / self.dim() as f64),
        }
    }

    /// Point distributed uniformly with respect to volume.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            ModelSpace::Interval { length } => Point(vec![rng.random::<f64>() * length]),
            ModelSpace::Circle { length } => Point(vec![wrap(rng.random::<f64>() * length, *length)]),
            ModelSpace::FlatTorus(t) => Point((0..t.dim()).map(|_| rng.random::<f64>()).collect()),
            ModelSpace::Box { sides } => Point(sides.iter().map(|s| rng.random::<f64>() * s).collect()),
            ModelSpace::Sphere { dim } => loop {
                let v: Vec<f64> = (0..=*dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let n = norm(&v);
                if n > 1e-9 {
                    break Point(v.into_iter().map(|x| x / n).collect());
                }
            },
        }
    }

    /// Moves `p` a distance `min(step * |direction|, injectivity radius)` along
    /// the geodesic with initial velocity `direction`. The torus and circle
    /// wrap; the interval and box reflect at their faces; on the sphere the
    /// direction is first projected to the tangent plane.
    pub fn geodesic_step(&self, p: &Point, direction: &[f64], step: f64) -> Result<Point> {
        let c = p.coords();
        let dim_ok = match self {
            ModelSpace::Sphere { dim } => direction.len() == dim + 1,
            _ => direction.len() == self.dim(),
        };
        if !dim_ok || c.len() != self.coord_len() {
            return Err(Error::DimensionMismatch { expected: self.coord_len(), got: direction.len() });
        }
        let dir = match self {
            ModelSpace::Sphere { .. } => {
                let dot: f64 = c.iter().zip(direction).map(|(x, y)| x * y).sum();
                direction.iter().zip(c).map(|(v, x)| v - dot * x).collect::<Vec<_>>()
            }
            _ => direction.to_vec(),
        };
        let speed = norm(&dir);
        if !(speed > 0.0) {
            return invalid("zero direction");
        }
        let t = (step * speed).min(self.injectivity_radius());
        let u: Vec<f64> = dir.iter().map(|x| x / speed).collect();
        Ok(match self {
            ModelSpace::Interval { length } => Point(vec![reflect(c[0] + t * u[0], *length)]),
            ModelSpace::Circle { length } => Point(vec![wrap(c[0] + t * u[0], *length)]),
            ModelSpace::FlatTorus(tor) => {
                let dl = tor.to_lattice(&u);
                Point(c.iter().zip(dl).map(|(x, d)| wrap(x + t * d, 1.0)).collect())
            }
            ModelSpace::Box { sides } => Point(c.iter().zip(&u).zip(sides).map(|((x, d), s)| reflect(x + t * d, *s)).collect()),
            ModelSpace::Sphere { .. } => {
                let (s, co) = t.sin_cos();
                let v: Vec<f64> = c.iter().zip(&u).map(|(x, d)| co * x + s * d).collect();
                let n = norm(&v);
                Point(v.into_iter().map(|x| x / n).collect())
            }
        })
    }

    /// Like [`geodesic_step`](Self::geodesic_step) but clamps to the boundary
    /// of the interval and box instead of reflecting; used by optimisers that
    /// need a projection rather than a measure-preserving move.
    pub fn projected_step(&self, p: &Point, direction: &[f64], step: f64) -> Point {
        let c = p.coords();
        match self {
            ModelSpace::Interval { length } => Point(vec![(c[0] + step * direction[0]).clamp(0.0, *length)]),
            ModelSpace::Box { sides } => Point(c.iter().zip(direction).zip(sides).map(|((x, d), s)| (x + step * d).clamp(0.0, *s)).collect()),
            _ => {
                if norm(direction) * step == 0.0 {
                    return p.clone();
                }
                self.geodesic_step(p, direction, step).unwrap_or_else(|_| p.clone())
            }
        }
    }

    /// Smooth pieces of the distance from `p` to `q`: every locally minimising
    /// geodesic candidate (circle arcs, torus translates, the straight segment)
    /// as `(length, gradient of that length with respect to p)`.
    /// Gradients are ambient tangent vectors at `p`.
    pub fn distance_pieces(&self, p: &Point, q: &Point, out: &mut Vec<(f64, Vec<f64>)>) {
        out.clear();
        let (a, b) = (p.coords(), q.coords());
        match self {
            ModelSpace::Interval { .. } => {
                let d = a[0] - b[0];
                out.push((d.abs(), vec![if d >= 0.0 { 1.0 } else { -1.0 }]));
            }
            ModelSpace::Circle { length } => {
                let fwd = wrap(a[0] - b[0], *length);
                out.push((fwd, vec![1.0]));
                out.push((length - fwd, vec![-1.0]));
            }
            ModelSpace::FlatTorus(t) => {
                let dl: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let v = t.to_euclidean(&dl);
                t.for_each_image(&v, |img| {
                    let n = norm(img);
                    let g = if n > 0.0 { img.iter().map(|x| x / n).collect() } else { vec![0.0; img.len()] };
                    out.push((n, g));
                });
            }
            ModelSpace::Box { .. } => {
                let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let n = norm(&v);
                let g = if n > 0.0 { v.iter().map(|x| x / n).collect() } else { vec![0.0; v.len()] };
                out.push((n, g));
            }
            ModelSpace::Sphere { .. } => {
                let d = self.dist(p, q);
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let s = d.sin();
                let g = if s > 1e-14 { a.iter().zip(b).map(|(x, y)| -(y - dot * x) / s).collect() } else { vec![0.0; a.len()] };
                out.push((d, g));
            }
        }
    }
}

/// Volume `beta_k` of the unit ball in `R^k`.
pub fn euclidean_ball_volume(k: usize) -> f64 {
    // beta_k = beta_{k-2} * 2 pi / k
    let mut b = if k % 2 == 0 { 1.0 } else { 2.0 };
    let mut j = if k % 2 == 0 { 2 } else { 3 };
    while j <= k {
        b *= 2.0 * PI / j as f64;
        j += 2;
    }
    b
}

/// Volume of the unit sphere `S^d`, `(d + 1) * beta_{d+1}`.
pub fn sphere_volume(d: usize) -> f64 {
    (d + 1) as f64 * euclidean_ball_volume(d + 1)
}

/// Systole of a flat 2-torus.
pub fn torus_systole(space: &ModelSpace) -> Result<f64> {
    match space {
        ModelSpace::FlatTorus(t) => t.systole(),
        other => invalid(format!("systole needs a flat torus, got {}", other.name())),
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `x mod period` in `[0, period)`.
pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Folds `x` into `[0, len]` by mirror reflection at both ends.
fn reflect(x: f64, len: f64) -> f64 {
    let r = x.rem_euclid(2.0 * len);
    if r > len {
        2.0 * len - r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn distance_examples() {
        let c = ModelSpace::circle(1.0).unwrap();
        assert!(close(c.distance(&Point::scalar(0.0), &Point::scalar(0.6)).unwrap(), 0.4, 1e-15));
        let t = ModelSpace::unit_square_torus();
        let d = t.distance(&Point::new(vec![0.0, 0.0]), &Point::new(vec![0.5, 0.5])).unwrap();
        assert!(close(d, 0.5f64.sqrt(), 1e-15));
        let s = ModelSpace::sphere(2).unwrap();
        let d = s.distance(&Point::new(vec![0.0, 0.0, 1.0]), &Point::new(vec![1.0, 0.0, 0.0])).unwrap();
        assert!(close(d, PI / 2.0, 1e-15));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let t = ModelSpace::unit_square_torus();
        assert!(matches!(
            t.distance(&Point::new(vec![0.0]), &Point::new(vec![0.5, 0.5])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn volume_examples() {
        assert_eq!(ModelSpace::circle(1.0).unwrap().volume(), 1.0);
        assert!(close(ModelSpace::torus(vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap().volume(), 3f64.sqrt() / 2.0, 1e-15));
        assert!(close(ModelSpace::sphere(2).unwrap().volume(), 4.0 * PI, 1e-14));
        assert!(close(ModelSpace::sphere(1).unwrap().volume(), 2.0 * PI, 1e-14));
        assert!(close(ModelSpace::sphere(3).unwrap().volume(), 2.0 * PI * PI, 1e-13));
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(euclidean_ball_volume(0), 1.0);
        assert_eq!(euclidean_ball_volume(1), 2.0);
        assert!(close(euclidean_ball_volume(2), PI, 1e-15));
        assert!(close(euclidean_ball_volume(3), 4.0 * PI / 3.0, 1e-15));
        assert!(close(euclidean_ball_volume(4), PI * PI / 2.0, 1e-14));
    }

    #[test]
    fn geodesic_step_examples() {
        let c = ModelSpace::circle(1.0).unwrap();
        let p = c.geodesic_step(&Point::scalar(0.9), &[1.0], 0.2).unwrap();
        assert!(close(p.0[0], 0.1, 1e-12));
        let i = ModelSpace::interval(1.0).unwrap();
        let p = i.geodesic_step(&Point::scalar(0.95), &[1.0], 0.1).unwrap();
        assert!(close(p.0[0], 0.95, 1e-12));
        let s = ModelSpace::sphere(2).unwrap();
        let p = s.geodesic_step(&Point::new(vec![0.0, 0.0, 1.0]), &[0.6, 0.8, 0.0], PI).unwrap();
        assert!(close(p.0[2], -1.0, 1e-10) && close(p.0[0], 0.0, 1e-10));
        assert!(c.geodesic_step(&Point::scalar(0.2), &[0.0], 1.0).is_err());
    }

    #[test]
    fn sampling_ranges_and_sphere_mean() {
        let mut r = rng::stream(1, "test", 0);
        let c = ModelSpace::circle(1.0).unwrap();
        for _ in 0..1000 {
            let x = c.sample_uniform(&mut r).0[0];
            assert!((0.0..1.0).contains(&x));
        }
        let s = ModelSpace::sphere(2).unwrap();
        let mut mean = [0.0; 3];
        let n = 100_000;
        for _ in 0..n {
            let p = s.sample_uniform(&mut r);
            s.validate(&p).unwrap();
            for k in 0..3 {
                mean[k] += p.0[k] / n as f64;
            }
        }
        assert!(mean.iter().all(|m| m.abs() < 0.02), "{mean:?}");
    }

    #[test]
    fn box_sampling_passes_chi_square() {
        // 100 bins, 99 dof: the 0.01 upper critical value is 134.64.
        let b = ModelSpace::cube(vec![1.0, 1.0]).unwrap();
        let mut r = rng::stream(2, "chi2", 0);
        let n = 100_000;
        let mut bins = [0usize; 100];
        for _ in 0..n {
            let p = b.sample_uniform(&mut r);
            let (i, j) = ((p.0[0] * 10.0) as usize, (p.0[1] * 10.0) as usize);
            bins[i.min(9) * 10 + j.min(9)] += 1;
        }
        let e = n as f64 / 100.0;
        let chi2: f64 = bins.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 134.64, "chi2 = {chi2}");
    }

    #[test]
    fn exact_form_reduction() {
        // Hexagonal Gram matrix scaled by 2: minimum 2, determinant 3.
        assert_eq!(reduced_form_minimum(2, 1, 2).unwrap(), (2, 3));
        // The same lattice from a skewed basis.
        assert_eq!(reduced_form_minimum(2, 5, 14).unwrap(), (2, 3));
        assert_eq!(reduced_form_minimum(1, 0, 1).unwrap(), (1, 1));
        assert_eq!(reduced_form_minimum(9, 4, 2).unwrap().0, 1);
        assert!(reduced_form_minimum(1, 1, 1).is_err());
        assert!(reduced_form_minimum(-1, 0, 1).is_err());
    }

    #[test]
    fn systole_examples() {
        let sq = ModelSpace::unit_square_torus();
        assert!(close(torus_systole(&sq).unwrap(), 1.0, 1e-15));
        let hex = ModelSpace::torus(vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let s = torus_systole(&hex).unwrap();
        assert!(close(s, 1.0, 1e-15));
        assert!(close(s * s / hex.volume(), 2.0 / 3f64.sqrt(), 1e-12));
        assert!(close(loewner_ratio(&ModelSpace::hexagonal_torus(7.0).unwrap()).unwrap(), 2.0 / 3f64.sqrt(), 1e-12));
        assert!(close(loewner_ratio(&sq).unwrap(), 1.0, 1e-15));
        let odd = ModelSpace::torus(vec![vec![3.0, 0.0], vec![1.4, 0.1]]).unwrap();
        let mut brute = f64::INFINITY;
        for i in -50i32..=50 {
            for j in -50i32..=50 {
                if (i, j) != (0, 0) {
                    let v = [3.0 * i as f64 + 1.4 * j as f64, 0.1 * j as f64];
                    brute = brute.min(norm(&v));
                }
            }
        }
        assert!(close(torus_systole(&odd).unwrap(), brute, 1e-12));
        let t3 = ModelSpace::FlatTorus(FlatTorus::rectangular(&[1.0, 1.0, 1.0]).unwrap());
        assert!(matches!(torus_systole(&t3), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn skewed_torus_distance_matches_brute_force() {
        let t = ModelSpace::torus(vec![vec![3.0, 0.0], vec![1.4, 0.1]]).unwrap();
        let ModelSpace::FlatTorus(tor) = &t else { unreachable!() };
        let mut r = rng::stream(3, "skew", 0);
        for _ in 0..200 {
            let p = t.sample_uniform(&mut r);
            let q = t.sample_uniform(&mut r);
            let dl: Vec<f64> = p.0.iter().zip(&q.0).map(|(a, b)| b - a).collect();
            let mut brute = f64::INFINITY;
            for i in -60i32..=60 {
                for j in -60i32..=60 {
                    let v = tor.to_euclidean(&[dl[0] + i as f64, dl[1] + j as f64]);
                    brute = brute.min(norm(&v));
                }
            }
            assert!(close(t.dist(&p, &q), brute, 1e-12));
        }
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(ModelSpace::circle(0.0).is_err());
        assert!(ModelSpace::interval(-1.0).is_err());
        assert!(ModelSpace::torus(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
        assert!(ModelSpace::sphere(4).is_err());
        assert!(ModelSpace::cube(vec![1.0, 0.0]).is_err());
    }
}

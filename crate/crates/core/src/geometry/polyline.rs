//! Polygonal curves in the plane and in space, and their text format.
//!
//! The format has one vertex per line (`x y` or `x y z`), blank lines between
//! components and `#` comment lines. Every component read from text is a
//! closed curve. Floats are written in Rust's shortest round-trip form, so
//! writing and re-reading is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn unit(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// A polygonal curve. Planar curves keep `z = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    dim: usize,
    vertices: Vec<Vec3>,
    closed: bool,
}

impl Polyline {
    pub fn new(dim: usize, vertices: Vec<Vec3>, closed: bool) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let min = if closed { 3 } else { 2 };
        if vertices.len() < min {
            return invalid(format!("a polyline needs at least {min} vertices"));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("vertex coordinates must be finite");
        }
        if dim == 2 && vertices.iter().any(|v| v[2] != 0.0) {
            return invalid("planar polyline with nonzero z");
        }
        let p = Polyline { dim, vertices, closed };
        if p.segments().any(|(a, b)| a == b) {
            return invalid("zero-length edge");
        }
        Ok(p)
    }

    pub fn closed(vertices: Vec<Vec3>) -> Result<Self> {
        Self::new(3, vertices, true)
    }

    pub fn planar(vertices: &[[f64; 2]], closed: bool) -> Result<Self> {
        Self::new(2, vertices.iter().map(|v| [v[0], v[1], 0.0]).collect(), closed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    pub fn segment(&self, i: usize) -> (Vec3, Vec3) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        (0..self.segment_count()).map(|i| self.segment(i))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| norm(sub(b, a))).sum()
    }

    /// Applies `f` to every vertex.
    pub fn map(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        Self::new(self.dim, self.vertices.iter().map(|&v| f(v)).collect(), self.closed)
    }

    /// Same curve with the vertex list rotated to start at `k`.
    pub fn rotated_start(&self, k: usize) -> Self {
        let mut v = self.vertices.clone();
        let n = v.len();
        v.rotate_left(k % n);
        Polyline { vertices: v, ..self.clone() }
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline { vertices: v, ..self.clone() }
    }
}

/// Regular `n`-gon inscribed in the circle of radius `r` around `centre`
/// spanned by the orthonormal pair `(u, v)`.
pub fn circle_polygon(centre: Vec3, u: Vec3, v: Vec3, r: f64, n: usize) -> Result<Polyline> {
    let pts = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            add(centre, add(scale(u, r * t.cos()), scale(v, r * t.sin())))
        })
        .collect();
    Polyline::closed(pts)
}

/// Two unit circles in orthogonal planes, each through the other's centre.
pub fn hopf_link(n: usize) -> Result<(Polyline, Polyline)> {
    let a = circle_polygon([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, n)?;
    let b = circle_polygon([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0, n)?;
    Ok((a, b))
}

/// The two components of the `(2, 4)` torus link: curves winding once along
/// and twice around a torus with radii 2 and 1, half a turn apart.
pub fn torus_link_2_4(n: usize) -> Result<(Polyline, Polyline)> {
    let comp = |offset: f64| {
        let pts = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                let s = 2.0 * t + offset;
                let rho = 2.0 + s.cos();
                [rho * t.cos(), rho * t.sin(), s.sin()]
            })
            .collect();
        Polyline::closed(pts)
    };
    Ok((comp(0.0)?, comp(std::f64::consts::PI)?))
}

/// The `z`-axis from `-extent` to `extent`, closed by a rectangle through
/// `x = extent`.
pub fn axis_loop(extent: f64) -> Result<Polyline> {
    Polyline::closed(vec![[0.0, 0.0, -extent], [0.0, 0.0, extent], [extent, 0.0, extent], [extent, 0.0, -extent]])
}

/// Parses the text format; every component is closed.
pub fn parse_polylines(text: &str) -> Result<Vec<Polyline>> {
    let mut out = Vec::new();
    let mut current: Vec<Vec3> = Vec::new();
    let mut dim = 0;
    let flush = |current: &mut Vec<Vec3>, dim: &mut usize, out: &mut Vec<Polyline>| -> Result<()> {
        if !current.is_empty() {
            out.push(Polyline::new(*dim, std::mem::take(current), true)?);
        }
        *dim = 0;
        Ok(())
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut current, &mut dim, &mut out)?;
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
        if nums.len() != 2 && nums.len() != 3 {
            return invalid(format!("line {}: expected 2 or 3 coordinates", lineno + 1));
        }
        if dim == 0 {
            dim = nums.len();
        } else if dim != nums.len() {
            return invalid(format!("line {}: mixed dimensions in one component", lineno + 1));
        }
        current.push([nums[0], nums[1], nums.get(2).copied().unwrap_or(0.0)]);
    }
    flush(&mut current, &mut dim, &mut out)?;
    if out.is_empty() {
        return invalid("no polyline in input");
    }
    Ok(out)
}

pub fn format_polylines(curves: &[Polyline]) -> String {
    let mut s = String::new();
    for (k, c) in curves.iter().enumerate() {
        if k > 0 {
            s.push('\n');
        }
        for v in &c.vertices {
            if c.dim == 2 {
                let _ = writeln!(s, "{} {}", v[0], v[1]);
            } else {
                let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
            }
        }
    }
    s
}

pub fn read_polylines(path: impl AsRef<Path>) -> Result<Vec<Polyline>> {
    parse_polylines(&std::fs::read_to_string(path)?)
}

pub fn write_polylines(path: impl AsRef<Path>, curves: &[Polyline]) -> Result<()> {
    Ok(std::fs::write(path, format_polylines(curves))?)
}

//! Fixed-scale Vietoris–Rips complexes with lower-star filtration values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::packing::{separation, Configuration};
use crate::spectra::landmarks::Metric;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    /// Strictly increasing vertex indices.
    pub vertices: Vec<u32>,
    pub value: f64,
}

impl Simplex {
    pub fn new(mut vertices: Vec<u32>, value: f64) -> Self {
        vertices.sort_unstable();
        Simplex { vertices, value }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

#[derive(Clone, Debug)]
pub struct FilteredComplex {
    /// Landmark configurations (empty for complexes built by hand).
    pub vertices: Vec<Configuration>,
    pub simplices: Vec<Simplex>,
    pub max_dim: usize,
    /// Set when the connection radius produced no edges.
    pub zero_dimensional: bool,
}

impl FilteredComplex {
    pub fn from_simplices(simplices: Vec<Simplex>, max_dim: usize) -> Self {
        let zero_dimensional = simplices.iter().all(|s| s.vertices.len() <= 1);
        FilteredComplex { vertices: Vec::new(), simplices, max_dim, zero_dimensional }
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut out = vec![0; self.max_dim + 1];
        for s in &self.simplices {
            out[s.dim()] += 1;
        }
        out
    }
}

/// Symmetric pairwise distance matrix, row-major.
pub fn distance_matrix(landmarks: &[Configuration], metric: Metric) -> Vec<f64> {
    let n = landmarks.len();
    let rows: Vec<Vec<f64>> =
        (0..n).into_par_iter().map(|i| (0..n).map(|j| if i == j { 0.0 } else { metric.dist(&landmarks[i], &landmarks[j]) }).collect()).collect();
    rows.concat()
}

/// Vietoris–Rips complex at scale `eps` on the landmarks, each simplex valued
/// by the largest `-rho` among its vertices.
pub fn build_filtration(landmarks: &[Configuration], metric: Metric, eps: f64, max_dim: usize) -> Result<FilteredComplex> {
    if !(eps > 0.0) {
        return invalid("connection radius must be positive");
    }
    let values = landmarks.iter().map(|c| separation(c).map(|r| -r)).collect::<Result<Vec<f64>>>()?;
    let dm = distance_matrix(landmarks, metric);
    let mut fc = rips(&values, &dm, eps, max_dim);
    fc.vertices = landmarks.to_vec();
    Ok(fc)
}

/// Rips complex from vertex values and a distance matrix (edges at `d <= eps`).
pub fn rips(values: &[f64], dm: &[f64], eps: f64, max_dim: usize) -> FilteredComplex {
    let n = values.len();
    let up: Vec<Vec<u32>> = (0..n).map(|i| (i + 1..n).filter(|&j| dm[i * n + j] <= eps).map(|j| j as u32).collect()).collect();
    let per_vertex: Vec<Vec<Simplex>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut out = vec![Simplex { vertices: vec![v as u32], value: values[v] }];
            let mut stack = vec![v as u32];
            extend(&up, values, &mut stack, &up[v], max_dim, &mut out);
            out
        })
        .collect();
    let simplices: Vec<Simplex> = per_vertex.into_iter().flatten().collect();
    let zero_dimensional = !simplices.iter().any(|s| s.vertices.len() > 1);
    FilteredComplex { vertices: Vec::new(), simplices, max_dim, zero_dimensional }
}

fn extend(up: &[Vec<u32>], values: &[f64], stack: &mut Vec<u32>, cands: &[u32], max_dim: usize, out: &mut Vec<Simplex>) {
    if stack.len() > max_dim {
        return;
    }
    for (k, &w) in cands.iter().enumerate() {
        stack.push(w);
        let value = stack.iter().map(|&u| values[u as usize]).fold(f64::NEG_INFINITY, f64::max);
        out.push(Simplex { vertices: stack.clone(), value });
        if stack.len() <= max_dim {
            let next: Vec<u32> = intersect(&cands[k + 1..], &up[w as usize]);
            extend(up, values, stack, &next, max_dim, out);
        }
        stack.pop();
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

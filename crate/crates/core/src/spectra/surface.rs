//! Multi-energy vanishing regions of a tracked class.
//!
//! Each energy is a reciprocal pair distance `E_j = 1/dist(x_a, x_b)` on
//! labelled configurations. For a grid point `(e_j)` the subcomplex spanned by
//! landmarks with `E_j < e_j` for all `j` is tested for whether the tracked
//! class restricts to zero there: the class is represented by a cocycle on the
//! whole complex and the test asks whether its restriction is a coboundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model_spaces::ModelSpace;
use crate::packing::{symmetric_group, Configuration};
use crate::spectra::complex::rips;
use crate::spectra::landmarks::{landmark_select, Metric};
use crate::spectra::persistence::{reduce, sym_diff, Reduction};
use crate::spectra::sampling::sample_configs;
use crate::spectra::{resolve_hard_core, SpectrumParams};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackedClass {
    /// The `index`-th essential class of dimension `dim`, in order of birth.
    Essential { dim: usize, index: usize },
    /// Every essential class of dimension `dim` at once: a grid point counts as
    /// vanishing when the whole restriction map in that degree is zero.
    AllEssential { dim: usize },
}

impl TrackedClass {
    fn dim(self) -> usize {
        match self {
            TrackedClass::Essential { dim, .. } | TrackedClass::AllEssential { dim } => dim,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSurfaceGrid {
    /// Point pairs whose reciprocal distance is the energy on each axis.
    pub pairs: Vec<(usize, usize)>,
    pub axes: Vec<Vec<f64>>,
    /// Row-major over `axes`; true where the class vanishes.
    pub vanishes: Vec<bool>,
    /// Grid points that vanish but have a non-vanishing successor along some axis.
    pub boundary: Vec<Vec<usize>>,
    pub landmark_count: usize,
    pub covering_radius: f64,
}

impl SpectralSurfaceGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, ax)| acc * ax.len() + i)
    }

    pub fn get(&self, idx: &[usize]) -> bool {
        self.vanishes[self.flat_index(idx)]
    }

    /// Midpoint of the first vanishing-to-surviving step along the diagonal,
    /// for grids whose axes coincide.
    pub fn diagonal_crossing(&self) -> Option<f64> {
        let ax = &self.axes[0];
        (0..ax.len() - 1).find(|&k| self.get(&vec![k; self.axes.len()]) && !self.get(&vec![k + 1; self.axes.len()])).map(|k| 0.5 * (ax[k] + ax[k + 1]))
    }
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

/// Landmarks closed under relabelling: maxmin orbits, each expanded to all `N!` labellings.
fn orbit_closed_landmarks(space: &Arc<ModelSpace>, n: usize, params: &SpectrumParams) -> Result<(Vec<Configuration>, f64)> {
    let hard_core = resolve_hard_core(space, n, params)?;
    let samples = sample_configs(space, n, &params.sampling(hard_core))?;
    let group = symmetric_group(n);
    let orbits = (params.landmarks / group.len()).max(1).min(samples.len());
    let sel = landmark_select(&samples, orbits, Metric::Quotient)?;
    let mut out = Vec::with_capacity(orbits * group.len());
    for &i in &sel.indices {
        for g in &group {
            out.push(samples[i].permuted(g)?);
        }
    }
    Ok((out, sel.covering_radius))
}

pub fn spectral_surface(
    space: &Arc<ModelSpace>,
    n: usize,
    pairs: &[(usize, usize)],
    class: TrackedClass,
    axes: &[Vec<f64>],
    params: &SpectrumParams,
) -> Result<SpectralSurfaceGrid> {
    if pairs.is_empty() || pairs.len() > 3 || pairs.len() != axes.len() {
        return invalid("need between one and three energies, one grid axis each");
    }
    if pairs.iter().any(|&(a, b)| a == b || a >= n || b >= n) {
        return invalid("energy pairs must name two distinct points");
    }
    if axes.iter().any(|ax| ax.len() < 2 || ax.windows(2).any(|w| !(w[0] < w[1]))) {
        return invalid("grid axes must be increasing with at least two values");
    }
    let (landmarks, covering_radius) = orbit_closed_landmarks(space, n, params)?;
    let values: Vec<f64> = landmarks.iter().map(|c| -crate::packing::separation(c).unwrap_or(0.0)).collect();
    let dm = crate::spectra::complex::distance_matrix(&landmarks, Metric::Ordered);
    let fc = rips(&values, &dm, params.eps_factor * covering_radius, params.max_dim.max(class.dim() + 1));
    let red = reduce(&fc)?;
    let cocycles = red.essential_cocycles(class.dim());
    let chosen: Vec<&(usize, Vec<usize>)> = match class {
        TrackedClass::Essential { index, .. } => cocycles.get(index).into_iter().collect(),
        TrackedClass::AllEssential { .. } => cocycles.iter().collect(),
    };
    if chosen.is_empty() {
        return Err(Error::ClassNotFound(format!("{class:?} among {} essential classes", cocycles.len())));
    }
    let energies: Vec<Vec<f64>> = landmarks
        .iter()
        .map(|c| pairs.iter().map(|&(a, b)| 1.0 / space.dist(&c.points()[a], &c.points()[b])).collect())
        .collect();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let vanishes: Vec<bool> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = unflatten(flat, &shape);
            let inside: Vec<bool> = energies.iter().map(|e| e.iter().zip(&idx).zip(axes).all(|((&ej, &k), ax)| ej < ax[k])).collect();
            chosen.iter().all(|(_, support)| restricts_to_coboundary(&red, support, class.dim(), &inside))
        })
        .collect();
    let mut boundary = Vec::new();
    for flat in 0..total {
        if !vanishes[flat] {
            continue;
        }
        let idx = unflatten(flat, &shape);
        let edge = (0..shape.len()).any(|k| {
            if idx[k] + 1 >= shape[k] {
                return false;
            }
            let mut nb = idx.clone();
            nb[k] += 1;
            !vanishes[nb.iter().zip(&shape).fold(0, |acc, (&i, &s)| acc * s + i)]
        });
        if edge {
            boundary.push(idx);
        }
    }
    Ok(SpectralSurfaceGrid { pairs: pairs.to_vec(), axes: axes.to_vec(), vanishes, boundary, landmark_count: landmarks.len(), covering_radius })
}

/// Whether the cocycle with the given support, restricted to the full
/// subcomplex on the `inside` vertices, is a coboundary there.
pub(crate) fn restricts_to_coboundary(red: &Reduction, support: &[usize], dim: usize, inside: &[bool]) -> bool {
    let keep = |i: usize| red.sorted[i].vertices.iter().all(|&v| inside[v as usize]);
    match dim {
        0 => !support.iter().any(|&i| keep(i)),
        1 => parity_consistent(red, support, inside),
        _ => coboundary_by_elimination(red, support, dim, &keep),
    }
}

/// A 1-cochain is a coboundary iff vertex labels in Z₂ can be chosen whose
/// differences along every edge reproduce it.
fn parity_consistent(red: &Reduction, support: &[usize], inside: &[bool]) -> bool {
    let nv = inside.len();
    let mut parent: Vec<usize> = (0..nv).collect();
    let mut parity = vec![false; nv];
    fn find(parent: &mut [usize], parity: &mut [bool], x: usize) -> (usize, bool) {
        let mut root = x;
        let mut p = false;
        while parent[root] != root {
            p ^= parity[root];
            root = parent[root];
        }
        // path compression
        let mut cur = x;
        let mut acc = p;
        while parent[cur] != root {
            let next = parent[cur];
            let flip = parity[cur];
            parent[cur] = root;
            parity[cur] = acc;
            acc ^= flip;
            cur = next;
        }
        (root, p)
    }
    for (i, s) in red.sorted.iter().enumerate() {
        if s.vertices.len() != 2 {
            continue;
        }
        let (u, v) = (s.vertices[0] as usize, s.vertices[1] as usize);
        if !inside[u] || !inside[v] {
            continue;
        }
        let bit = support.binary_search(&i).is_ok();
        let (ru, pu) = find(&mut parent, &mut parity, u);
        let (rv, pv) = find(&mut parent, &mut parity, v);
        if ru == rv {
            if pu ^ pv != bit {
                return false;
            }
        } else {
            parent[ru] = rv;
            parity[ru] = pu ^ pv ^ bit;
        }
    }
    true
}

fn coboundary_by_elimination(red: &Reduction, support: &[usize], dim: usize, keep: &dyn Fn(usize) -> bool) -> bool {
    let n = red.sorted.len();
    let mut cofaces: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, col) in red.boundary.iter().enumerate() {
        if red.sorted[j].dim() == dim && keep(j) {
            for &f in col {
                cofaces[f].push(j);
            }
        }
    }
    let mut owner: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for f in 0..n {
        if red.sorted[f].dim() + 1 != dim || !keep(f) {
            continue;
        }
        let mut col = std::mem::take(&mut cofaces[f]);
        while let Some(&low) = col.last() {
            match owner.get(&low) {
                Some(o) => col = sym_diff(&col, o),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            owner.insert(low, col);
        }
    }
    let mut target: Vec<usize> = support.iter().copied().filter(|&i| keep(i)).collect();
    while let Some(&low) = target.last() {
        match owner.get(&low) {
            Some(o) => target = sym_diff(&target, o),
            None => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::complex::{FilteredComplex, Simplex};

    fn s(v: &[u32], value: f64) -> Simplex {
        Simplex::new(v.to_vec(), value)
    }

    /// Square 0-1-2-3 with a diagonal 0-2 and one filled triangle 0-1-2.
    fn square() -> Reduction {
        let mut sx = vec![s(&[0], 0.0), s(&[1], 0.0), s(&[2], 0.0), s(&[3], 0.0)];
        for e in [[0, 1], [1, 2], [2, 3], [0, 3], [0, 2]] {
            sx.push(s(&e, 0.0));
        }
        sx.push(s(&[0, 1, 2], 0.0));
        reduce(&FilteredComplex::from_simplices(sx, 2)).unwrap()
    }

    #[test]
    fn loop_cocycle_vanishes_only_when_the_loop_is_cut() {
        let red = square();
        let cocycles = red.essential_cocycles(1);
        assert_eq!(cocycles.len(), 1);
        let support = &cocycles[0].1;
        for inside in [[true; 4], [true, true, true, false], [false, true, true, true]] {
            let by_parity = restricts_to_coboundary(&red, support, 1, &inside);
            let keep = |i: usize| red.sorted[i].vertices.iter().all(|&v| inside[v as usize]);
            assert_eq!(by_parity, coboundary_by_elimination(&red, support, 1, &keep));
            assert_eq!(by_parity, inside != [true; 4]);
        }
    }

    #[test]
    fn unflatten_round_trips() {
        let shape = [3, 4, 5];
        for flat in 0..60 {
            let idx = unflatten(flat, &shape);
            assert_eq!(idx.iter().zip(&shape).fold(0, |a, (&i, &s)| a * s + i), flat);
        }
    }
}

//! Z₂ persistent homology by boundary-matrix reduction with clearing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectra::complex::{FilteredComplex, Simplex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    #[serde(with = "infinite_as_null")]
    pub death: f64,
}

impl Interval {
    pub fn is_essential(&self) -> bool {
        self.death == f64::INFINITY
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub intervals: Vec<Interval>,
}

impl Barcode {
    /// Rank of `H_dim` of the subcomplex with values `<= e`.
    pub fn betti_at(&self, e: f64, dim: usize) -> usize {
        self.intervals.iter().filter(|iv| iv.dim == dim && iv.birth <= e && e < iv.death).count()
    }

    pub fn essential(&self, dim: usize) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(move |iv| iv.dim == dim && iv.is_essential())
    }

    pub fn top_dim(&self) -> Option<usize> {
        self.intervals.iter().map(|iv| iv.dim).max()
    }

    /// Coefficients of the Poincaré polynomial of the image of the sublevel at
    /// `e` in the whole complex: essential classes already born at `e`.
    /// Trailing zeros are trimmed, so the zero polynomial is empty.
    pub fn poincare_at(&self, e: f64) -> Vec<usize> {
        let mut coeffs = vec![0; self.top_dim().map_or(0, |d| d + 1)];
        for iv in self.intervals.iter().filter(|iv| iv.is_essential() && iv.birth <= e) {
            coeffs[iv.dim] += 1;
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        coeffs
    }

    /// Keeps only intervals of dimension below `dim`.
    pub fn truncated(&self, dim: usize) -> Barcode {
        Barcode { intervals: self.intervals.iter().copied().filter(|iv| iv.dim < dim).collect() }
    }
}

/// Renders coefficients as `1 + 2t + t^2`.
pub fn format_polynomial(coeffs: &[usize]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let mono = match i {
                0 => String::new(),
                1 => "t".to_string(),
                _ => format!("t^{i}"),
            };
            match (c, i) {
                (_, 0) => c.to_string(),
                (1, _) => mono,
                _ => format!("{c}{mono}"),
            }
        })
        .collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

/// Reduced boundary data of a complex in canonical order.
#[derive(Debug)]
pub(crate) struct Reduction {
    /// Simplices sorted by (value, dimension, vertices).
    pub sorted: Vec<Simplex>,
    /// Boundary of each sorted simplex as increasing indices into `sorted`.
    pub boundary: Vec<Vec<usize>>,
    /// Simplices that create a class which never dies.
    pub essential: Vec<usize>,
    /// Simplices that kill a class.
    pub negative: Vec<bool>,
    pub pairs: Vec<(usize, usize)>,
}

fn canonical_cmp(a: &Simplex, b: &Simplex) -> std::cmp::Ordering {
    a.value.total_cmp(&b.value).then(a.vertices.len().cmp(&b.vertices.len())).then_with(|| a.vertices.cmp(&b.vertices))
}

pub(crate) fn reduce(fc: &FilteredComplex) -> Result<Reduction> {
    let mut sorted = fc.simplices.clone();
    for s in &sorted {
        if s.vertices.is_empty() || !s.value.is_finite() {
            return invalid("simplices need vertices and a finite value");
        }
        if s.dim() > fc.max_dim {
            return invalid(format!("simplex of dimension {} above max_dim {}", s.dim(), fc.max_dim));
        }
        if s.vertices.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("simplex vertices must be strictly increasing");
        }
    }
    sorted.sort_by(canonical_cmp);
    let index: HashMap<&[u32], usize> = sorted.iter().enumerate().map(|(i, s)| (s.vertices.as_slice(), i)).collect();
    if index.len() != sorted.len() {
        return invalid("duplicate simplex");
    }
    let mut boundary = Vec::with_capacity(sorted.len());
    let mut face = Vec::new();
    for (i, s) in sorted.iter().enumerate() {
        let mut col = Vec::with_capacity(s.vertices.len());
        if s.vertices.len() > 1 {
            for skip in 0..s.vertices.len() {
                face.clear();
                face.extend(s.vertices.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v));
                match index.get(face.as_slice()) {
                    Some(&f) if f < i => col.push(f),
                    Some(_) => return invalid(format!("filtration not monotone at simplex {:?}", s.vertices)),
                    None => return invalid(format!("face {face:?} of {:?} missing", s.vertices)),
                }
            }
            col.sort_unstable();
        }
        boundary.push(col);
    }
    drop(index);

    let n = sorted.len();
    let mut cleared = vec![false; n];
    let mut negative = vec![false; n];
    let mut owner = vec![usize::MAX; n];
    let mut reduced: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pairs = Vec::new();
    let top = sorted.iter().map(Simplex::dim).max().unwrap_or(0);
    for d in (1..=top).rev() {
        for j in 0..n {
            if sorted[j].dim() != d || cleared[j] {
                continue;
            }
            let mut col = boundary[j].clone();
            while let Some(&low) = col.last() {
                let o = owner[low];
                if o == usize::MAX {
                    break;
                }
                col = sym_diff(&col, &reduced[o]);
            }
            if let Some(&low) = col.last() {
                owner[low] = j;
                cleared[low] = true;
                negative[j] = true;
                pairs.push((low, j));
                reduced[j] = col;
            }
        }
    }
    let essential = (0..n).filter(|&i| !negative[i] && owner[i] == usize::MAX).collect();
    Ok(Reduction { sorted, boundary, essential, negative, pairs })
}

/// Barcode of a monotone filtered complex. Intervals of zero length are
/// omitted; the result does not depend on the input order of the simplices.
pub fn persistence_reduce(fc: &FilteredComplex) -> Result<Barcode> {
    Ok(reduce(fc)?.barcode())
}

impl Reduction {
    pub fn barcode(&self) -> Barcode {
        let mut intervals: Vec<Interval> = self
            .pairs
            .iter()
            .map(|&(b, d)| Interval { dim: self.sorted[b].dim(), birth: self.sorted[b].value, death: self.sorted[d].value })
            .filter(|iv| iv.birth < iv.death)
            .chain(self.essential.iter().map(|&b| Interval { dim: self.sorted[b].dim(), birth: self.sorted[b].value, death: f64::INFINITY }))
            .collect();
        intervals.sort_by(|a, b| a.dim.cmp(&b.dim).then(a.birth.total_cmp(&b.birth)).then(a.death.total_cmp(&b.death)));
        Barcode { intervals }
    }

    /// Cocycle representatives of the essential classes of dimension `dim`,
    /// as `(creating simplex, support)` with indices into `sorted`. Each is
    /// supported on its creator and later simplices.
    pub fn essential_cocycles(&self, dim: usize) -> Vec<(usize, Vec<usize>)> {
        let n = self.sorted.len();
        let mut cofaces: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, col) in self.boundary.iter().enumerate() {
            if self.sorted[j].dim() == dim + 1 {
                for &f in col {
                    cofaces[f].push(j);
                }
            }
        }
        let mut owner: HashMap<usize, usize> = HashMap::new();
        let mut reduced: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut v: HashMap<usize, Vec<usize>> = HashMap::new();
        let wanted: Vec<usize> = self.essential.iter().copied().filter(|&i| self.sorted[i].dim() == dim).collect();
        let mut out = Vec::new();
        for j in (0..n).rev() {
            if self.sorted[j].dim() != dim || self.negative[j] {
                continue;
            }
            let mut col = cofaces[j].clone();
            let mut vj = vec![j];
            while let Some(&low) = col.first() {
                let Some(&o) = owner.get(&low) else { break };
                col = sym_diff(&col, &reduced[&o]);
                vj = sym_diff(&vj, &v[&o]);
            }
            if let Some(&low) = col.first() {
                owner.insert(low, j);
                reduced.insert(j, col);
                v.insert(j, vj);
            } else if wanted.contains(&j) {
                out.push((j, vj));
            }
        }
        out.sort();
        out
    }
}

/// Symmetric difference of two increasing index lists.
pub(crate) fn sym_diff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn s(v: &[u32], value: f64) -> Simplex {
        Simplex::new(v.to_vec(), value)
    }

    #[test]
    fn single_vertex() {
        let fc = FilteredComplex::from_simplices(vec![s(&[0], 0.7)], 0);
        let bc = persistence_reduce(&fc).unwrap();
        assert_eq!(bc.intervals, vec![Interval { dim: 0, birth: 0.7, death: f64::INFINITY }]);
    }

    fn hollow() -> Vec<Simplex> {
        vec![s(&[0], 0.0), s(&[1], 0.0), s(&[2], 0.0), s(&[0, 1], 0.0), s(&[1, 2], 0.0), s(&[0, 2], 0.0)]
    }

    #[test]
    fn hollow_and_filled_triangle() {
        let bc = persistence_reduce(&FilteredComplex::from_simplices(hollow(), 1)).unwrap();
        assert_eq!(bc.intervals, vec![Interval { dim: 0, birth: 0.0, death: f64::INFINITY }, Interval { dim: 1, birth: 0.0, death: f64::INFINITY }]);
        let mut filled = hollow();
        filled.push(s(&[0, 1, 2], 1.0));
        let bc = persistence_reduce(&FilteredComplex::from_simplices(filled, 2)).unwrap();
        assert_eq!(bc.intervals[1], Interval { dim: 1, birth: 0.0, death: 1.0 });
        assert_eq!(bc.poincare_at(0.5), vec![1]);
    }

    #[test]
    fn rejects_bad_complexes() {
        let mut bad = hollow();
        bad[3].value = -1.0;
        assert!(persistence_reduce(&FilteredComplex::from_simplices(bad, 1)).is_err());
        let mut missing = hollow();
        missing.remove(0);
        assert!(persistence_reduce(&FilteredComplex::from_simplices(missing, 1)).is_err());
        let mut dup = hollow();
        dup.push(s(&[0], 0.0));
        assert!(persistence_reduce(&FilteredComplex::from_simplices(dup, 1)).is_err());
    }

    /// Random closed complex with monotone values.
    fn random_complex(seed: u64, target: usize) -> FilteredComplex {
        let mut r = crate::rng::stream(seed, "random_complex", 0);
        let mut value: HashMap<Vec<u32>, f64> = HashMap::new();
        fn add(v: Vec<u32>, val: f64, value: &mut HashMap<Vec<u32>, f64>) -> f64 {
            if let Some(&x) = value.get(&v) {
                return x;
            }
            let mut m = val;
            if v.len() > 1 {
                for skip in 0..v.len() {
                    let f: Vec<u32> = v.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &x)| x).collect();
                    m = m.max(add(f, val, value));
                }
            }
            value.insert(v, m);
            m
        }
        while value.len() < target {
            let k = r.random_range(1..=4usize);
            let mut v: Vec<u32> = (0..12).collect();
            v.shuffle(&mut r);
            v.truncate(k);
            v.sort();
            let val = (r.random::<f64>() * 10.0).round() / 10.0;
            add(v, val, &mut value);
        }
        let simplices = value.into_iter().map(|(v, x)| Simplex { vertices: v, value: x }).collect();
        FilteredComplex::from_simplices(simplices, 3)
    }

    fn dense_rank(mut rows: Vec<Vec<bool>>) -> usize {
        let mut rank = 0;
        let ncols = rows.first().map_or(0, Vec::len);
        for c in 0..ncols {
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r][c]) {
                rows.swap(rank, p);
                for r in 0..rows.len() {
                    if r != rank && rows[r][c] {
                        let pivot = rows[rank].clone();
                        for (x, y) in rows[r].iter_mut().zip(pivot) {
                            *x ^= y;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    fn dense_betti(simplices: &[Simplex], e: f64, dim: usize) -> usize {
        let sub: Vec<&Simplex> = simplices.iter().filter(|s| s.value <= e).collect();
        let of_dim = |d: usize| sub.iter().filter(|s| s.dim() == d).copied().collect::<Vec<_>>();
        let bd_rank = |d: usize| {
            if d == 0 {
                return 0;
            }
            let (lo, hi) = (of_dim(d - 1), of_dim(d));
            let rows: Vec<Vec<bool>> =
                lo.iter().map(|f| hi.iter().map(|s| f.vertices.iter().all(|v| s.vertices.contains(v))).collect()).collect();
            dense_rank(rows)
        };
        of_dim(dim).len() - bd_rank(dim) - bd_rank(dim + 1)
    }

    #[test]
    fn betti_numbers_match_dense_ranks() {
        for seed in 0..4 {
            let fc = random_complex(seed, 200);
            let bc = persistence_reduce(&fc).unwrap();
            for e in [0.1, 0.3, 0.5, 0.75, 1.0] {
                for d in 0..3 {
                    assert_eq!(bc.betti_at(e, d), dense_betti(&fc.simplices, e, d), "seed {seed} e {e} dim {d}");
                }
            }
        }
    }

    #[test]
    fn input_order_does_not_matter() {
        let fc = random_complex(7, 200);
        let bc = persistence_reduce(&fc).unwrap();
        let mut r = crate::rng::stream(7, "shuffle", 0);
        for _ in 0..5 {
            let mut g = fc.clone();
            g.simplices.shuffle(&mut r);
            assert_eq!(persistence_reduce(&g).unwrap(), bc);
        }
    }

    #[test]
    fn essential_cocycles_are_cocycles_and_detect_their_class() {
        let fc = random_complex(3, 200);
        let red = reduce(&fc).unwrap();
        for dim in 0..2 {
            for (creator, support) in red.essential_cocycles(dim) {
                assert!(support.contains(&creator) && support.iter().all(|&i| i >= creator));
                // coboundary vanishes: each (dim+1)-simplex meets the support evenly
                for (j, col) in red.boundary.iter().enumerate() {
                    if red.sorted[j].dim() == dim + 1 {
                        assert_eq!(col.iter().filter(|f| support.contains(f)).count() % 2, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn polynomial_formatting() {
        assert_eq!(format_polynomial(&[]), "0");
        assert_eq!(format_polynomial(&[1, 1]), "1 + t");
        assert_eq!(format_polynomial(&[2, 0, 3]), "2 + 3t^2");
    }
}

//! Farthest-point landmark selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::packing::{ordered_dist_unchecked, quotient_dist_unchecked, separation, Configuration};

/// Metric on configurations: labelled points, or points up to relabelling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Ordered,
    Quotient,
}

impl Metric {
    pub fn dist(self, a: &Configuration, b: &Configuration) -> f64 {
        match self {
            Metric::Ordered => ordered_dist_unchecked(a.space(), a.points(), b.points()),
            Metric::Quotient => quotient_dist_unchecked(a.space(), a.points(), b.points()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LandmarkSelection {
    /// Indices into the sample list, in selection order.
    pub indices: Vec<usize>,
    /// Largest distance from a sample to its nearest landmark.
    pub covering_radius: f64,
}

/// Maxmin subsample of size `count`. The first landmark is the sample of
/// largest separation; ties go to the lowest index throughout.
pub fn landmark_select(samples: &[Configuration], count: usize, metric: Metric) -> Result<LandmarkSelection> {
    if samples.is_empty() {
        return invalid("no samples to select landmarks from");
    }
    if count == 0 || count > samples.len() {
        return invalid(format!("landmark count {count} outside 1..={}", samples.len()));
    }
    let rhos: Vec<f64> = samples.iter().map(|c| separation(c).unwrap_or(0.0)).collect();
    let first = argmax(&rhos);
    let mut indices = vec![first];
    let mut nearest: Vec<f64> = samples.par_iter().map(|c| metric.dist(c, &samples[first])).collect();
    while indices.len() < count {
        let next = argmax(&nearest);
        indices.push(next);
        let chosen = &samples[next];
        nearest.par_iter_mut().zip(samples.par_iter()).for_each(|(d, c)| *d = d.min(metric.dist(c, chosen)));
    }
    let covering_radius = nearest.iter().copied().fold(0.0, f64::max);
    Ok(LandmarkSelection { indices, covering_radius })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_spaces::{ModelSpace, Point};
    use crate::spectra::sampling::{sample_configs, SamplingParams};
    use std::sync::Arc;

    fn circle() -> Arc<ModelSpace> {
        Arc::new(ModelSpace::circle(1.0).unwrap())
    }

    #[test]
    fn full_selection_is_a_permutation() {
        let s = sample_configs(&circle(), 2, &SamplingParams { count: 40, mcmc_steps: 2, hard_core: 0.0, seed: 4 }).unwrap();
        let sel = landmark_select(&s, 40, Metric::Quotient).unwrap();
        let mut idx = sel.indices.clone();
        idx.sort();
        assert_eq!(idx, (0..40).collect::<Vec<_>>());
        assert_eq!(sel.covering_radius, 0.0);
        let rho_first = separation(&s[sel.indices[0]]).unwrap();
        assert!(s.iter().all(|c| separation(c).unwrap() <= rho_first));
    }

    #[test]
    fn two_clusters_get_one_landmark_each() {
        let sp = circle();
        let mut samples = Vec::new();
        for k in 0..1000 {
            let base = if k < 500 { 0.1 } else { 0.6 };
            let j = (k % 500) as f64 * 1e-5;
            let pts = vec![Point::scalar(base + j), Point::scalar(base + 0.2 + j)];
            samples.push(Configuration::new(sp.clone(), pts).unwrap());
        }
        let sel = landmark_select(&samples, 2, Metric::Ordered).unwrap();
        assert!((sel.indices[0] < 500) != (sel.indices[1] < 500));
    }

    #[test]
    fn greedy_cover_is_within_twice_optimal() {
        let s = sample_configs(&circle(), 2, &SamplingParams { count: 600, mcmc_steps: 3, hard_core: 0.0, seed: 5 }).unwrap();
        let sel = landmark_select(&s, 50, Metric::Quotient).unwrap();
        // Oracle: the 51st maxmin point is at distance >= r from all 50 landmarks,
        // and those 51 points are pairwise >= r apart, so any 50 balls of radius
        // below r/2 miss one of them: optimal >= r/2.
        let full = landmark_select(&s, 51, Metric::Quotient).unwrap();
        let last = &s[full.indices[50]];
        let r = full.indices[..50].iter().map(|&i| Metric::Quotient.dist(&s[i], last)).fold(f64::INFINITY, f64::min);
        assert!((r - sel.covering_radius).abs() < 1e-15);
        let lower = r / 2.0;
        assert!(sel.covering_radius <= 2.0 * lower + 1e-15);
        // brute-force check of the covering radius
        let cr = s
            .iter()
            .map(|c| sel.indices.iter().map(|&i| Metric::Quotient.dist(c, &s[i])).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        assert_eq!(cr, sel.covering_radius);
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(landmark_select(&[], 1, Metric::Ordered).is_err());
        let s = sample_configs(&circle(), 2, &SamplingParams { count: 3, mcmc_steps: 1, hard_core: 0.0, seed: 1 }).unwrap();
        assert!(landmark_select(&s, 4, Metric::Ordered).is_err());
    }
}

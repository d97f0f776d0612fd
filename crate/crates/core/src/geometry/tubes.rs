//! Monte Carlo volumes of `delta`-neighbourhoods of polygonal curves, on the
//! unit 2-sphere and in space.
//!
//! Every segment gets a box of known measure containing its own tube piece.
//! A sample picks a box with probability proportional to its measure, draws a
//! uniform point in it and scores `1 / m` when the point lies in the box's
//! piece, where `m` counts the pieces containing the point. The mean score
//! times the total box measure is an unbiased estimate of the union.

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::polyline::{add, cross, dot, norm, scale, sub, unit, Polyline, Vec3};
use crate::error::{invalid, Error, Result};
use crate::model_spaces::euclidean_ball_volume;
use crate::rng;

const CHUNK: usize = 8192;
/// Tolerance on `|v| = 1` for sphere vertices.
const SPHERE_TOL: f64 = 1e-9;

/// Where the curve and its neighbourhood live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TubeAmbient {
    /// Unit sphere in `R^3`; edges are minor great-circle arcs.
    Sphere,
    Euclidean,
}

impl TubeAmbient {
    fn dim(self) -> usize {
        match self {
            TubeAmbient::Sphere => 2,
            TubeAmbient::Euclidean => 3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TubeEstimate {
    pub curve: String,
    pub ambient: TubeAmbient,
    pub delta: f64,
    pub samples: usize,
    pub volume: f64,
    pub std_error: f64,
    /// `volume / (delta^(n-1) beta_(n-1))`.
    pub mink: f64,
    pub mink_std_error: f64,
}

struct Frame {
    a: Vec3,
    b: Vec3,
    e1: Vec3,
    e2: Vec3,
    e3: Vec3,
    len: f64,
}

impl Frame {
    fn sphere(a: Vec3, b: Vec3) -> Result<Frame> {
        let c = dot(a, b);
        let w = sub(b, scale(a, c));
        if norm(w) < 1e-12 || c < 0.0 && norm(w) < 1e-6 {
            return invalid("consecutive sphere vertices must not be antipodal");
        }
        let e2 = unit(w);
        let len = norm(cross(a, b)).atan2(c);
        Ok(Frame { a, b, e1: a, e2, e3: cross(a, e2), len })
    }

    fn euclidean(a: Vec3, b: Vec3) -> Frame {
        let d = sub(b, a);
        let e1 = unit(d);
        let helper = if e1[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e2 = unit(cross(e1, helper));
        Frame { a, b, e1, e2, e3: cross(e1, e2), len: norm(d) }
    }

    fn box_measure(&self, ambient: TubeAmbient, delta: f64) -> f64 {
        match ambient {
            TubeAmbient::Sphere => (self.len + 2.0 * delta) * 2.0 * delta.sin(),
            TubeAmbient::Euclidean => (self.len + 2.0 * delta) * 4.0 * delta * delta,
        }
    }

    fn sample(&self, ambient: TubeAmbient, delta: f64, r: &mut rng::Rng) -> Vec3 {
        let s = r.random_range(-delta..self.len + delta);
        match ambient {
            // Area on the sphere is d(longitude) d(height).
            TubeAmbient::Sphere => {
                let z: f64 = r.random_range(-delta.sin()..delta.sin());
                let rho = (1.0 - z * z).sqrt();
                add(add(scale(self.e1, rho * s.cos()), scale(self.e2, rho * s.sin())), scale(self.e3, z))
            }
            TubeAmbient::Euclidean => {
                let u = r.random_range(-delta..delta);
                let v = r.random_range(-delta..delta);
                add(add(add(self.a, scale(self.e1, s)), scale(self.e2, u)), scale(self.e3, v))
            }
        }
    }

    /// Whether `x` is within `delta` of the segment (`cos_d = cos delta`,
    /// `sin_d = sin delta` on the sphere).
    fn contains(&self, ambient: TubeAmbient, x: Vec3, delta: f64, cos_d: f64, sin_d: f64) -> bool {
        match ambient {
            TubeAmbient::Sphere => {
                let phi = dot(x, self.e2).atan2(dot(x, self.e1));
                if (0.0..=self.len).contains(&phi) {
                    dot(x, self.e3).abs() < sin_d
                } else {
                    dot(x, self.a) > cos_d || dot(x, self.b) > cos_d
                }
            }
            TubeAmbient::Euclidean => {
                let t = dot(sub(x, self.a), self.e1).clamp(0.0, self.len);
                let r = sub(x, add(self.a, scale(self.e1, t)));
                dot(r, r) < delta * delta
            }
        }
    }
}

fn frames(curve: &Polyline, ambient: TubeAmbient) -> Result<Vec<Frame>> {
    if curve.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: curve.dim() });
    }
    match ambient {
        TubeAmbient::Sphere => {
            if curve.vertices().iter().any(|v| (norm(*v) - 1.0).abs() > SPHERE_TOL) {
                return invalid("sphere curve vertices must have unit norm");
            }
            curve.segments().map(|(a, b)| Frame::sphere(a, b)).collect()
        }
        TubeAmbient::Euclidean => Ok(curve.segments().map(|(a, b)| Frame::euclidean(a, b)).collect()),
    }
}

/// Estimates the volume of the `delta`-neighbourhood of `curve` with
/// `samples` Monte Carlo points, reproducibly under `seed`.
///
/// On the sphere `delta` must be below `pi / 2`.
pub fn tube_volume(curve: &Polyline, ambient: TubeAmbient, delta: f64, samples: usize, seed: u64) -> Result<TubeEstimate> {
    if samples == 0 {
        return invalid("tube volume needs at least one sample");
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid("delta must be positive");
    }
    if ambient == TubeAmbient::Sphere && delta >= PI / 2.0 {
        return invalid("delta must be below pi/2 on the sphere");
    }
    let fr = frames(curve, ambient)?;
    let measures: Vec<f64> = fr.iter().map(|f| f.box_measure(ambient, delta)).collect();
    let total: f64 = measures.iter().sum();
    let pick = WeightedIndex::new(&measures).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let (cos_d, sin_d) = (delta.cos(), delta.sin());

    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, "tube_volume", c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let i = pick.sample(&mut r);
                let x = fr[i].sample(ambient, delta, &mut r);
                if !fr[i].contains(ambient, x, delta, cos_d, sin_d) {
                    continue;
                }
                let m = fr.iter().filter(|f| f.contains(ambient, x, delta, cos_d, sin_d)).count();
                let w = 1.0 / m as f64;
                s1 += w;
                s2 += w * w;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let n = samples as f64;
    let mean = s1 / n;
    let var = if samples > 1 { (s2 / n - mean * mean).max(0.0) * n / (n - 1.0) } else { 0.0 };
    let volume = total * mean;
    let std_error = total * (var / n).sqrt();
    let codim = ambient.dim() - 1;
    let norm_factor = delta.powi(codim as i32) * euclidean_ball_volume(codim);
    Ok(TubeEstimate {
        curve: format!("{}-gon of length {}", curve.segment_count(), curve.length()),
        ambient,
        delta,
        samples,
        volume,
        std_error,
        mink: volume / norm_factor,
        mink_std_error: std_error / norm_factor,
    })
}

/// The equator of the unit sphere as `n` great-circle arcs.
pub fn equator(n: usize) -> Result<Polyline> {
    super::polyline::circle_polygon([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polyline::{circle_polygon, torus_link_2_4};

    #[test]
    fn equator_band_area() {
        let eq = equator(8).unwrap();
        for (k, &d) in [0.3, 0.15, 0.075].iter().enumerate() {
            let t = tube_volume(&eq, TubeAmbient::Sphere, d, 400_000, k as u64).unwrap();
            let exact = 4.0 * PI * d.sin();
            assert!(t.std_error > 0.0);
            assert!((t.volume - exact).abs() <= 3.0 * t.std_error, "delta {d}: {} vs {exact} (se {})", t.volume, t.std_error);
            assert!((t.mink - t.volume / (2.0 * d)).abs() < 1e-12);
        }
    }

    #[test]
    fn mink_tends_to_length_quadratically() {
        let eq = equator(8).unwrap();
        let deltas = [0.3, 0.15, 0.075];
        let errs: Vec<f64> = deltas
            .iter()
            .map(|&d| 2.0 * PI - tube_volume(&eq, TubeAmbient::Sphere, d, 2_000_000, 5).unwrap().mink)
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        let slope = (errs[0] / errs[2]).ln() / (deltas[0] / deltas[2]).ln();
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn solid_torus() {
        let c = circle_polygon([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 256).unwrap();
        let d = 0.1;
        let t = tube_volume(&c, TubeAmbient::Euclidean, d, 400_000, 3).unwrap();
        let exact = 2.0 * PI * PI * d * d;
        assert!((t.volume - exact).abs() <= 3.0 * t.std_error, "{} vs {exact} (se {})", t.volume, t.std_error);
        assert!((t.mink - 2.0 * PI).abs() < 5.0 * t.mink_std_error + 1e-3);
    }

    #[test]
    fn monotone_in_delta() {
        let (w, _) = torus_link_2_4(64).unwrap();
        let est: Vec<TubeEstimate> =
            [0.05, 0.1, 0.2, 0.4].iter().map(|&d| tube_volume(&w, TubeAmbient::Euclidean, d, 100_000, 9).unwrap()).collect();
        for p in est.windows(2) {
            let se = p[0].std_error.hypot(p[1].std_error);
            assert!(p[0].volume <= p[1].volume + 3.0 * se);
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let eq = equator(16).unwrap();
        let a = tube_volume(&eq, TubeAmbient::Sphere, 0.2, 20_000, 1).unwrap();
        let b = tube_volume(&eq, TubeAmbient::Sphere, 0.2, 20_000, 1).unwrap();
        assert_eq!(a.volume.to_bits(), b.volume.to_bits());
        assert!(tube_volume(&eq, TubeAmbient::Sphere, 0.2, 0, 1).is_err());
        assert!(tube_volume(&eq, TubeAmbient::Sphere, 0.0, 10, 1).is_err());
        assert!(tube_volume(&eq, TubeAmbient::Sphere, 2.0, 10, 1).is_err());
        let off = circle_polygon([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 2.0, 8).unwrap();
        assert!(tube_volume(&off, TubeAmbient::Sphere, 0.2, 10, 1).is_err());
    }
}

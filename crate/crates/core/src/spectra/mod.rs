//! Persistence of the separation filtration on sampled configuration spaces.
//!
//! Pipeline: hard-core sampling, maxmin landmarks, a fixed-scale Rips complex
//! valued by `-rho`, and Z₂ persistence. Large separation means early birth.

pub mod complex;
pub mod landmarks;
pub mod persistence;
pub mod sampling;
pub mod surface;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model_spaces::ModelSpace;
use crate::packing::separation;

pub use complex::{build_filtration, FilteredComplex, Simplex};
pub use landmarks::{landmark_select, LandmarkSelection, Metric};
pub use persistence::{format_polynomial, persistence_reduce, Barcode, Interval};
pub use sampling::{sample_configs, SamplingParams};
pub use surface::{spectral_surface, SpectralSurfaceGrid, TrackedClass};

const PILOT_SAMPLES: usize = 4096;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub samples: usize,
    pub mcmc_steps: usize,
    pub landmarks: usize,
    /// Rips scale as a multiple of the landmark covering radius.
    pub eps_factor: f64,
    /// Highest simplex dimension; homology is reported below it.
    pub max_dim: usize,
    /// Explicit minimum separation of samples. When absent it is
    /// `hard_core_frac` times the best separation among uniform pilot draws.
    pub hard_core: Option<f64>,
    pub hard_core_frac: f64,
    pub seed: u64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams {
            samples: 20_000,
            mcmc_steps: 8,
            landmarks: 600,
            eps_factor: 3.0,
            max_dim: 2,
            hard_core: None,
            hard_core_frac: 0.9,
            seed: 0,
        }
    }
}

impl SpectrumParams {
    pub(crate) fn sampling(&self, hard_core: f64) -> SamplingParams {
        SamplingParams { count: self.samples, mcmc_steps: self.mcmc_steps, hard_core, seed: self.seed }
    }
}

pub(crate) fn resolve_hard_core(space: &Arc<ModelSpace>, n: usize, params: &SpectrumParams) -> Result<f64> {
    if let Some(h) = params.hard_core {
        if !(h >= 0.0) {
            return invalid("hard core must be non-negative");
        }
        return Ok(h);
    }
    if !(0.0..1.0).contains(&params.hard_core_frac) {
        return invalid("hard_core_frac must lie in [0, 1)");
    }
    let pilot = SamplingParams { count: PILOT_SAMPLES, mcmc_steps: 0, hard_core: 0.0, seed: crate::rng::child_seed(params.seed, "pilot", 0) };
    let best = sample_configs(space, n, &pilot)?.iter().map(|c| separation(c).unwrap_or(0.0)).fold(0.0, f64::max);
    Ok(params.hard_core_frac * best)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub space: String,
    pub n: usize,
    pub quotient: bool,
    /// Intervals in the `-rho` filtration, dimensions below `max_dim`.
    pub barcode: Barcode,
    /// Distinct finite interval endpoints, increasing.
    pub spectrum: Vec<f64>,
    /// The same values as packing radii `rho / 2`, decreasing.
    pub radii: Vec<f64>,
    pub hard_core: f64,
    pub max_rho: f64,
    pub landmark_count: usize,
    pub covering_radius: f64,
    pub eps: f64,
    pub zero_dimensional: bool,
}

impl SpectrumReport {
    pub fn essential_births(&self, dim: usize) -> Vec<f64> {
        self.barcode.essential(dim).map(|iv| iv.birth).collect()
    }
}

pub fn packing_spectrum(space: &Arc<ModelSpace>, n: usize, quotient: bool, params: &SpectrumParams) -> Result<SpectrumReport> {
    if n < 2 {
        return invalid("the packing spectrum needs N >= 2");
    }
    if !(params.eps_factor > 0.0) || params.max_dim == 0 {
        return invalid("eps_factor must be positive and max_dim at least 1");
    }
    let hard_core = resolve_hard_core(space, n, params)?;
    let samples = sample_configs(space, n, &params.sampling(hard_core))?;
    let metric = if quotient { Metric::Quotient } else { Metric::Ordered };
    let sel = landmark_select(&samples, params.landmarks.min(samples.len()), metric)?;
    let landmarks: Vec<_> = sel.indices.iter().map(|&i| samples[i].clone()).collect();
    let max_rho = separation(&landmarks[0])?;
    let eps = params.eps_factor * sel.covering_radius;
    let fc = build_filtration(&landmarks, metric, eps.max(f64::MIN_POSITIVE), params.max_dim)?;
    let barcode = persistence_reduce(&fc)?.truncated(params.max_dim);
    let mut spectrum: Vec<f64> = barcode.intervals.iter().flat_map(|iv| [iv.birth, iv.death]).filter(|x| x.is_finite()).collect();
    spectrum.sort_by(f64::total_cmp);
    spectrum.dedup();
    let radii = spectrum.iter().map(|&e| -e / 2.0).collect();
    Ok(SpectrumReport {
        space: space.name().to_string(),
        n,
        quotient,
        barcode,
        spectrum,
        radii,
        hard_core,
        max_rho,
        landmark_count: landmarks.len(),
        covering_radius: sel.covering_radius,
        eps,
        zero_dimensional: fc.zero_dimensional,
    })
}

/// Poincaré polynomial coefficients (constant term first) of the image of the
/// sublevel `{-rho <= e}` in the whole sampled space.
pub fn poincare_polynomial_at(b: &Barcode, e: f64) -> Vec<usize> {
    b.poincare_at(e)
}

//! Point-cloud surrogate of the configuration space minus its diagonals.
//!
//! Configurations are drawn uniformly from the hard-core region
//! `{rho >= hard_core}` by rejection seeding, then decorrelated by
//! single-point hard-sphere Metropolis moves (a move is accepted iff the
//! hard-core constraint still holds). Proposals are isotropic with a uniform
//! step length, so the chain keeps the uniform measure.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model_spaces::{ModelSpace, Point};
use crate::packing::Configuration;
use crate::rng;

/// Independent chains; fixed so that output does not depend on thread count.
const CHAINS: usize = 16;
const MAX_SEED_TRIES: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct SamplingParams {
    pub count: usize,
    /// Single-point moves between recorded samples (0: pure rejection sampling).
    pub mcmc_steps: usize,
    /// Minimum admissible separation of a sample.
    pub hard_core: f64,
    pub seed: u64,
}

fn min_dist(space: &ModelSpace, pts: &[Point]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.min(space.dist(&pts[i], &pts[j]));
        }
    }
    m
}

/// Separation of point `i` from the others.
fn min_dist_from(space: &ModelSpace, pts: &[Point], i: usize, p: &Point) -> f64 {
    pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| space.dist(p, q)).fold(f64::INFINITY, f64::min)
}

fn admissible(rho: f64, hard_core: f64) -> bool {
    rho > 0.0 && rho >= hard_core
}

fn seed_state<R: Rng>(space: &ModelSpace, n: usize, hard_core: f64, r: &mut R) -> Result<Vec<Point>> {
    for _ in 0..MAX_SEED_TRIES {
        let pts: Vec<Point> = (0..n).map(|_| space.sample_uniform(r)).collect();
        if admissible(min_dist(space, &pts), hard_core) {
            return Ok(pts);
        }
    }
    Err(Error::SearchFailure(format!("no configuration with separation >= {hard_core} after {MAX_SEED_TRIES} uniform draws")))
}

fn random_direction<R: Rng>(space: &ModelSpace, p: &Point, r: &mut R) -> Vec<f64> {
    let len = match space {
        ModelSpace::Sphere { dim } => dim + 1,
        _ => space.dim(),
    };
    loop {
        let mut v: Vec<f64> = (0..len).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        if let ModelSpace::Sphere { .. } = space {
            let dot: f64 = v.iter().zip(p.coords()).map(|(a, b)| a * b).sum();
            for (a, b) in v.iter_mut().zip(p.coords()) {
                *a -= dot * b;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Draws `count` configurations of `n` points with separation above the hard core.
pub fn sample_configs(space: &Arc<ModelSpace>, n: usize, params: &SamplingParams) -> Result<Vec<Configuration>> {
    if n < 2 {
        return invalid("sampling needs N >= 2");
    }
    if params.count == 0 {
        return invalid("sample count must be positive");
    }
    // typical spacing of N points
    let max_step = 0.5 * (space.volume() / n as f64).powf(1.0 / space.dim() as f64).min(space.injectivity_radius());
    let per_chain = params.count.div_ceil(CHAINS);
    let chains: Vec<Result<Vec<Vec<Point>>>> = (0..CHAINS)
        .into_par_iter()
        .map(|c| {
            let take = per_chain.min(params.count.saturating_sub(c * per_chain));
            let mut r = rng::stream(params.seed, "sample_configs", c as u64);
            let mut out = Vec::with_capacity(take);
            if take == 0 {
                return Ok(out);
            }
            let mut state = seed_state(space, n, params.hard_core, &mut r)?;
            for _ in 0..take {
                if params.mcmc_steps == 0 {
                    state = seed_state(space, n, params.hard_core, &mut r)?;
                } else {
                    for _ in 0..params.mcmc_steps {
                        let i = r.random_range(0..n);
                        let dir = random_direction(space, &state[i], &mut r);
                        let step = r.random::<f64>() * max_step;
                        let moved = space.geodesic_step(&state[i], &dir, step)?;
                        if admissible(min_dist_from(space, &state, i, &moved), params.hard_core) {
                            state[i] = moved;
                        }
                    }
                }
                out.push(state.clone());
            }
            Ok(out)
        })
        .collect();
    let mut configs = Vec::with_capacity(params.count);
    for chain in chains {
        for pts in chain? {
            configs.push(Configuration::new_unchecked(space.clone(), pts));
        }
    }
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::separation;

    fn params(count: usize, seed: u64) -> SamplingParams {
        SamplingParams { count, mcmc_steps: 4, hard_core: 0.0, seed }
    }

    #[test]
    fn circle_pairs_have_bounded_separation() {
        let c = Arc::new(ModelSpace::circle(1.0).unwrap());
        let s = sample_configs(&c, 2, &params(1000, 1)).unwrap();
        assert_eq!(s.len(), 1000);
        for cfg in &s {
            let rho = separation(cfg).unwrap();
            assert!(rho > 0.0 && rho <= 0.5);
            for p in cfg.points() {
                c.validate(p).unwrap();
            }
        }
    }

    #[test]
    fn circle_triples_reach_equispacing() {
        let c = Arc::new(ModelSpace::circle(1.0).unwrap());
        let s = sample_configs(&c, 3, &params(10_000, 2)).unwrap();
        let best = s.iter().map(|c| separation(c).unwrap()).fold(0.0, f64::max);
        assert!(best >= 1.0 / 3.0 - 0.01, "best = {best}");
    }

    #[test]
    fn torus_pairs_reach_half_diagonal() {
        // brute-force grid oracle: the maximal torus distance over a 201^2 grid of offsets
        let mut grid_max = 0.0f64;
        for i in 0..=200 {
            for j in 0..=200 {
                let (x, y) = (i as f64 / 200.0, j as f64 / 200.0);
                let dx = x.min(1.0 - x);
                let dy = y.min(1.0 - y);
                grid_max = grid_max.max((dx * dx + dy * dy).sqrt());
            }
        }
        assert!((grid_max - 0.5f64.sqrt()).abs() < 1e-12);
        let t = Arc::new(ModelSpace::unit_square_torus());
        let s = sample_configs(&t, 2, &params(10_000, 3)).unwrap();
        let best = s.iter().map(|c| separation(c).unwrap()).fold(0.0, f64::max);
        assert!(best >= grid_max - 0.02, "best = {best}");
    }

    #[test]
    fn hard_core_is_respected_and_sampling_is_deterministic() {
        let c = Arc::new(ModelSpace::circle(1.0).unwrap());
        let p = SamplingParams { count: 500, mcmc_steps: 3, hard_core: 0.3, seed: 9 };
        let a = sample_configs(&c, 3, &p).unwrap();
        let b = sample_configs(&c, 3, &p).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|c| separation(c).unwrap() >= 0.3));
    }

    #[test]
    fn impossible_hard_core_fails() {
        let c = Arc::new(ModelSpace::circle(1.0).unwrap());
        let p = SamplingParams { count: 5, mcmc_steps: 1, hard_core: 0.6, seed: 1 };
        assert!(matches!(sample_configs(&c, 2, &p), Err(Error::SearchFailure(_))));
    }
}

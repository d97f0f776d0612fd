use std::sync::Arc;

use packspectra::model_spaces::ModelSpace;
use packspectra::spectra::*;
use packspectra::Error;

fn circle() -> Arc<ModelSpace> {
    Arc::new(ModelSpace::circle(1.0).unwrap())
}

fn params(seed: u64) -> SpectrumParams {
    SpectrumParams { seed, ..Default::default() }
}

#[test]
fn circle_pairs_unordered_form_a_loop_at_half_separation() {
    let r = packing_spectrum(&circle(), 2, true, &params(0)).unwrap();
    let h0 = r.essential_births(0);
    let h1 = r.essential_births(1);
    assert_eq!((h0.len(), h1.len()), (1, 1), "{:?}", r.barcode);
    assert!((h0[0] + 0.5).abs() <= 0.02);
    assert!((h1[0] + 0.5).abs() <= 0.02);
    assert_eq!(poincare_polynomial_at(&r.barcode, -0.4), vec![1, 1]);
    assert_eq!(format_polynomial(&poincare_polynomial_at(&r.barcode, -0.4)), "1 + t");
    assert!(poincare_polynomial_at(&r.barcode, -0.6).is_empty());
    assert!(r.radii.iter().any(|&x| (x - 0.25).abs() <= 0.01));
}

#[test]
fn circle_triples_unordered_loop_is_born_at_equispacing() {
    let r = packing_spectrum(&circle(), 3, true, &params(0)).unwrap();
    let h1 = r.essential_births(1);
    assert_eq!(h1.len(), 1, "{:?}", r.barcode);
    assert!((h1[0] + 1.0 / 3.0).abs() <= 0.02, "birth {}", h1[0]);
}

#[test]
fn interval_pairs_ordered_have_two_contractible_chambers() {
    let sp = Arc::new(ModelSpace::interval(1.0).unwrap());
    let r = packing_spectrum(&sp, 2, false, &params(0)).unwrap();
    assert_eq!(r.essential_births(0).len(), 2);
    assert_eq!(r.essential_births(1).len(), 0);
    assert!(r.max_rho <= 1.0);
    for k in 0..10 {
        let e = -r.hard_core + k as f64 * 0.01;
        if e < 0.0 {
            assert_eq!(r.barcode.betti_at(e, 0), 2);
            assert_eq!(r.barcode.betti_at(e, 1), 0);
        }
    }
}

#[test]
fn essential_births_move_less_than_the_covering_radius_across_seeds() {
    let a = packing_spectrum(&circle(), 2, true, &params(1)).unwrap();
    let b = packing_spectrum(&circle(), 2, true, &params(2)).unwrap();
    let bound = a.covering_radius.max(b.covering_radius);
    for dim in 0..2 {
        let (x, y) = (a.essential_births(dim), b.essential_births(dim));
        assert_eq!(x.len(), y.len());
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() <= bound, "dim {dim}: {p} vs {q}, bound {bound}");
        }
    }
}

#[test]
fn ordered_and_unordered_pairs_on_the_circle_agree() {
    // Ordered pairs of distinct points retract onto {(x, x + 1/2)}, a circle,
    // and so does its quotient by the swap.
    let o = packing_spectrum(&circle(), 2, false, &params(3)).unwrap();
    let q = packing_spectrum(&circle(), 2, true, &params(3)).unwrap();
    for dim in 0..2 {
        assert_eq!(o.essential_births(dim).len(), 1);
        assert_eq!(q.essential_births(dim).len(), 1);
    }
}

#[test]
fn spectrum_is_deterministic() {
    let a = packing_spectrum(&circle(), 2, true, &params(5)).unwrap();
    let b = packing_spectrum(&circle(), 2, true, &params(5)).unwrap();
    assert_eq!(a.barcode, b.barcode);
    assert_eq!(a.spectrum, b.spectrum);
}

#[test]
fn single_energy_surface_matches_the_barcode() {
    let ax: Vec<f64> = (0..41).map(|k| 1.8 + 0.01 * k as f64).collect();
    let g = spectral_surface(&circle(), 2, &[(0, 1)], TrackedClass::Essential { dim: 1, index: 0 }, &[ax], &params(0)).unwrap();
    let e = g.diagonal_crossing().unwrap();
    assert!((e - 2.0).abs() <= 0.1, "crossing {e}");
    assert_eq!(g.boundary.len(), 1);
}

#[test]
fn three_point_surface_is_symmetric_and_crosses_at_equispacing() {
    let ax: Vec<f64> = (0..16).map(|k| 2.7 + 0.04 * k as f64).collect();
    let pairs = [(0, 1), (0, 2), (1, 2)];
    // 200 landmark orbits of six labellings each
    let p = SpectrumParams { samples: 30_000, landmarks: 1200, ..params(0) };
    let g = spectral_surface(&circle(), 3, &pairs, TrackedClass::AllEssential { dim: 1 }, &[ax.clone(), ax.clone(), ax.clone()], &p).unwrap();
    let n = ax.len();
    let perms = [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let idx = [i, j, k];
                for p in perms {
                    assert_eq!(g.get(&idx), g.get(&[idx[p[0]], idx[p[1]], idx[p[2]]]));
                }
                // vanishing is inherited by smaller sublevels
                if g.get(&idx) {
                    for axis in 0..3 {
                        if idx[axis] > 0 {
                            let mut lower = idx;
                            lower[axis] -= 1;
                            assert!(g.get(&lower));
                        }
                    }
                }
            }
        }
    }
    let e = g.diagonal_crossing().unwrap();
    assert!((e - 3.0).abs() <= 0.15, "crossing {e}");
}

#[test]
fn missing_class_is_reported() {
    let ax = vec![vec![1.9, 2.1]];
    let err = spectral_surface(&circle(), 2, &[(0, 1)], TrackedClass::Essential { dim: 1, index: 3 }, &ax, &params(0)).unwrap_err();
    assert!(matches!(err, Error::ClassNotFound(_)));
}

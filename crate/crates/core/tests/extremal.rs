use std::sync::Arc;

use packspectra::extremal::*;
use packspectra::model_spaces::ModelSpace;
use packspectra::packing::{is_packing, separation};

const QUICK: Budget = Budget { restarts: 4, iterations: 50 };

#[test]
fn one_dimensional_optimum_is_found_for_every_n() {
    for sp in [ModelSpace::circle(1.0).unwrap(), ModelSpace::interval(1.0).unwrap()] {
        let sp = Arc::new(sp);
        for n in 2..=64 {
            let r = max_packing_radius(&sp, n, QUICK, 11).unwrap();
            let exact = exact_oracle_1d(&sp, n).unwrap();
            assert!((r.radius - exact).abs() <= 1e-6, "{} N={n}: {} vs {exact}", sp.name(), r.radius);
            assert!(is_packing(&r.config, &vec![r.radius; n]).unwrap());
            assert_eq!(r.radius, separation(&r.config).unwrap() / 2.0);
        }
    }
}

#[test]
fn circle_constant_is_one_half() {
    let sp = Arc::new(ModelSpace::circle(1.0).unwrap());
    let ns: Vec<usize> = (4..=64).collect();
    let fit = packing_constant_fit(&sp, &ns, QUICK, 1).unwrap();
    assert!((fit.constant - 0.5).abs() <= 1e-6);
    assert!(fit.monotone);
}

#[test]
fn doubling_a_torus_doubles_the_radius() {
    let t = ModelSpace::torus(vec![vec![1.0, 0.0], vec![0.3, 0.9]]).unwrap();
    let t2 = ModelSpace::torus(vec![vec![2.0, 0.0], vec![0.6, 1.8]]).unwrap();
    let b = Budget { restarts: 3, iterations: 100 };
    let r1 = max_packing_radius(&Arc::new(t), 7, b, 5).unwrap();
    let r2 = max_packing_radius(&Arc::new(t2), 7, b, 5).unwrap();
    assert!((r2.radius - 2.0 * r1.radius).abs() <= 1e-6, "{} vs {}", r2.radius, r1.radius);
}

#[test]
fn radii_do_not_increase_with_n() {
    let sp = Arc::new(ModelSpace::unit_square_torus());
    let fit = packing_constant_fit(&sp, &[2, 3, 4, 5, 6, 7, 8], Budget::default(), 3).unwrap();
    assert!(fit.monotone, "{:?}", fit.table);
    assert!((fit.table[0].radius - 2f64.sqrt() / 4.0).abs() <= 1e-9);
    // explicit constructions bound the optimum from below: the half-period
    // square for N = 4, the lattice spanned by (1, 2)/5 for N = 5
    assert!(fit.table[2].radius >= 0.25 - 1e-12);
    assert!(fit.table[3].radius >= 5f64.sqrt() / 10.0 - 1e-9);
}

#[test]
fn hexagonal_torus_small_counts_hit_the_lattice() {
    let hex = Arc::new(ModelSpace::hexagonal_torus(1.0).unwrap());
    let fit = packing_constant_fit(&hex, &[4, 9, 16], Budget::default(), 7).unwrap();
    let target = 1.0 / 12f64.sqrt();
    for row in &fit.table {
        assert!((row.normalized - target).abs() <= 1e-6 * target, "{:?}", row);
    }
}

//! Upper bound for the waist of the 2-sphere from perturbed latitude
//! sweepouts: the longest level curve, minimised over a coefficient ball.

use std::f64::consts::TAU;

use packspectra::geometry::{sweepout_max_length, sweepout_waist_upper, Icosphere, WaistParams};

fn main() -> packspectra::Result<()> {
    let mesh = Icosphere::new(5);
    for (name, c) in [
        ("latitudes", [0.0; 7]),
        ("tilted plane", [0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        ("x1 x2 twist", [0.0, 0.0, 0.15, 0.0, 0.0, 0.0, 0.0]),
    ] {
        let (len, level) = sweepout_max_length(&mesh, &c)?;
        println!("{name:>13}: longest level {len:.9} at f = {level:+.5} (2 pi = {TAU:.9})");
    }

    let start = std::time::Instant::now();
    let w = sweepout_waist_upper(&WaistParams::default())?;
    println!(
        "min-max over radius 0.2: {:.6} ({:.5} x 2 pi), restart {}, {} invalid evaluations, {:.1?}",
        w.min_max,
        w.ratio,
        w.restart,
        w.invalid_evaluations,
        start.elapsed()
    );
    println!("certificate coefficients: {:?}", w.coeffs);
    Ok(())
}

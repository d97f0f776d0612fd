//! Neighbourhood volumes of curves and the normalised lengths they give.

use std::f64::consts::PI;

use packspectra::geometry::polyline::circle_polygon;
use packspectra::geometry::{equator, tube_volume, TubeAmbient};

fn main() -> packspectra::Result<()> {
    let eq = equator(8)?;
    for (k, d) in [0.3, 0.15, 0.075].into_iter().enumerate() {
        let t = tube_volume(&eq, TubeAmbient::Sphere, d, 400_000, k as u64)?;
        println!("sphere band  delta {d:<6} area {:.5} +- {:.5} (exact {:.5})  Mink {:.5}", t.volume, t.std_error, 4.0 * PI * d.sin(), t.mink);
    }
    let ring = circle_polygon([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 256)?;
    let t = tube_volume(&ring, TubeAmbient::Euclidean, 0.1, 400_000, 0)?;
    println!("solid torus  volume {:.5} +- {:.5} (exact {:.5})", t.volume, t.std_error, 2.0 * PI * PI * 0.01);
    Ok(())
}

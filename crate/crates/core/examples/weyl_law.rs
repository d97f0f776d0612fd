//! Eigenvalue counting on a circle and a flat torus grows like `e^(n/2)`.

use packspectra::laplace::{laplace_spectrum, weyl_fit};
use packspectra::model_spaces::ModelSpace;

fn main() -> packspectra::Result<()> {
    let s = laplace_spectrum(&ModelSpace::unit_square_torus(), 64, 10)?;
    println!("torus, lowest: {:?}", s.eigenvalues.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>());
    for (space, m) in [(ModelSpace::circle(1.0)?, 1024), (ModelSpace::unit_square_torus(), 96)] {
        let fit = weyl_fit(&space, m, 100.0, 3000.0)?;
        println!(
            "{:<6} exponent {:.4} (n/2 = {}), prefactor {:.5} vs {:.5}",
            space.name(),
            fit.exponent,
            space.dim() as f64 / 2.0,
            fit.prefactor,
            fit.weyl_prefactor
        );
    }
    Ok(())
}

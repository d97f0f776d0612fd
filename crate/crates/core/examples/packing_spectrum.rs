//! Persistence barcodes of the packing energy for a few points on a circle.

use std::sync::Arc;

use packspectra::model_spaces::ModelSpace;
use packspectra::spectra::{format_polynomial, packing_spectrum, SpectrumParams};

fn main() -> packspectra::Result<()> {
    let circle = Arc::new(ModelSpace::circle(1.0)?);
    for (n, quotient) in [(2, true), (2, false), (3, true)] {
        let r = packing_spectrum(&circle, n, quotient, &SpectrumParams::default())?;
        println!("N = {n}, {}:", if quotient { "unordered" } else { "ordered" });
        for iv in &r.barcode.intervals {
            // Energies are -rho; radii are rho / 2.
            if iv.is_essential() {
                println!("  H{} born at radius {:.4}, essential", iv.dim, -iv.birth / 2.0);
            } else {
                println!("  H{} born at radius {:.4}, dies at {:.4}", iv.dim, -iv.birth / 2.0, -iv.death / 2.0);
            }
        }
        // Radius 0.05 is separation 0.1, energy -0.1.
        println!("  Poincare polynomial at radius 0.05: {}", format_polynomial(&r.barcode.poincare_at(-0.1)));
    }
    Ok(())
}

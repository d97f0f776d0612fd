//! Where the loop of three unordered points on a circle dies when two pair
//! energies are thresholded independently.

use std::sync::Arc;

use packspectra::model_spaces::ModelSpace;
use packspectra::spectra::{spectral_surface, SpectrumParams, TrackedClass};

fn main() -> packspectra::Result<()> {
    let circle = Arc::new(ModelSpace::circle(1.0)?);
    let axis: Vec<f64> = (0..13).map(|k| 2.7 + 0.6 * k as f64 / 12.0).collect();
    let g = spectral_surface(
        &circle,
        3,
        &[(0, 1), (1, 2)],
        TrackedClass::AllEssential { dim: 1 },
        &[axis.clone(), axis.clone()],
        &SpectrumParams::default(),
    )?;
    println!("rows: 1/d(x1,x2) <= e1, columns: 1/d(x2,x3) <= e2; # = class vanishes");
    for i in (0..axis.len()).rev() {
        let row: String = (0..axis.len()).map(|j| if g.get(&[i, j]) { '#' } else { '.' }).collect();
        println!("{:6.3} {row}", axis[i]);
    }
    println!("diagonal crossing at {:?}", g.diagonal_crossing());
    Ok(())
}

//! Normalised densities `N r^n / vol` on the hexagonal torus approach the
//! planar constant `1 / sqrt(12)`.

use std::sync::Arc;

use packspectra::extremal::{packing_constant_fit, Budget};
use packspectra::model_spaces::ModelSpace;

fn main() -> packspectra::Result<()> {
    let hex = Arc::new(ModelSpace::hexagonal_torus(1.0)?);
    let fit = packing_constant_fit(&hex, &[3, 4, 9, 12, 16], Budget::default(), 0)?;
    for row in &fit.table {
        println!("N={:<3} r = {:.6}  N r^2 / area = {:.6}", row.n, row.radius, row.normalized);
    }
    println!("fitted {:.6}, target {:.6}", fit.constant, 1.0 / 12f64.sqrt());
    Ok(())
}

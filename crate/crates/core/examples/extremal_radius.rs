//! Largest equal radii for N balls, checked against the exact answer in one
//! dimension.

use std::sync::Arc;

use packspectra::extremal::{exact_oracle_1d, max_packing_radius, Budget};
use packspectra::model_spaces::ModelSpace;

fn main() -> packspectra::Result<()> {
    for space in [ModelSpace::circle(1.0)?, ModelSpace::interval(1.0)?] {
        let space = Arc::new(space);
        for n in [2, 5, 16] {
            let r = max_packing_radius(&space, n, Budget::default(), 0)?;
            println!("{:<9} N={n:<3} r = {:.9}  exact {:.9}", space.name(), r.radius, exact_oracle_1d(&space, n)?);
        }
    }
    let torus = Arc::new(ModelSpace::unit_square_torus());
    for n in [2, 4, 7] {
        let r = max_packing_radius(&torus, n, Budget::default(), 0)?;
        println!("torus     N={n:<3} r = {:.6}", r.radius);
    }
    Ok(())
}

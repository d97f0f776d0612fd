//! `systole^2 / area` over flat tori; the hexagonal lattice is optimal.

use packspectra::model_spaces::{loewner_ratio, reduced_form_minimum, ModelSpace};

fn main() -> packspectra::Result<()> {
    for (name, t) in [
        ("square", ModelSpace::unit_square_torus()),
        ("hexagonal", ModelSpace::hexagonal_torus(1.0)?),
        ("skew", ModelSpace::torus(vec![vec![1.0, 0.0], vec![0.3, 0.9]])?),
    ] {
        println!("{name:<10} {:.15}", loewner_ratio(&t)?);
    }
    // x^2 + xy + y^2 as 2x^2 + 2xy + 2y^2 over 2: min 2, determinant 3.
    let (min, det) = reduced_form_minimum(2, 1, 2)?;
    println!("exact: min^2 / det = {}/{det}, so the ratio is 2/sqrt(3) = {:.15}", min * min, 2.0 / 3f64.sqrt());
    Ok(())
}

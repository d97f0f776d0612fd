//! `e_N` of a circle against the smallest first Neumann eigenvalue of the
//! pieces of a partition into N arcs.

use packspectra::laplace::{arcs_from_lengths, localization_check, random_arc_partition};
use packspectra::model_spaces::ModelSpace;
use packspectra::rng;

fn main() -> packspectra::Result<()> {
    let m = 512;
    let circle = ModelSpace::circle(1.0)?;
    let equal = arcs_from_lengths(1.0, m, &[0.25; 4])?;
    let r = localization_check(&circle, m, &equal)?;
    println!("four equal arcs: e_N = {:.4}, min e_1 = {:.4}", r.e_n, r.min_e1);
    let mut g = rng::stream(0, "example", 0);
    for pieces in [2, 3, 5, 8] {
        let part = random_arc_partition(m, pieces, &mut g)?;
        let r = localization_check(&circle, m, &part)?;
        println!("{pieces} random arcs: e_N = {:9.4} >= {:9.4}  {}", r.e_n, r.min_e1, r.pass);
    }
    Ok(())
}

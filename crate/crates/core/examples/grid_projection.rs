//! Pushes plane curves into the edges of a square grid and measures how far
//! points move compared with the curve length.

use packspectra::geometry::ff::corpus_constant;
use packspectra::geometry::{ff_project, is_grid_path, random_closed_curve, Polyline};
use packspectra::rng;

fn main() -> packspectra::Result<()> {
    let ring: Vec<[f64; 2]> = (0..64).map(|k| std::f64::consts::TAU * k as f64 / 64.0).map(|t| [t.cos(), t.sin()]).collect();
    let circle = Polyline::planar(&ring, true)?;
    let mut r = rng::stream(0, "example", 0);
    let blob = random_closed_curve(&mut r, 24)?;
    for (name, c) in [("circle", circle), ("random", blob)] {
        let p = ff_project(&[c.clone()], 2.0 * c.length())?;
        let on_grid = p.paths.iter().all(|q| is_grid_path(q, p.cell));
        println!("{name:<7} length {:.4}  sup move {:.4}  ratio {:.4}  grid path {on_grid}", c.length(), p.sup_displacement, p.ratio);
    }
    for corpus in 0..3 {
        println!("corpus {corpus}: displacement constant {:.4}", corpus_constant(0, corpus, 40, 2.0)?);
    }
    Ok(())
}

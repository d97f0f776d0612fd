//! Linking numbers three ways and the length bound for linked curves.
//!
//! Pass a directory to also write the Hopf pair used by the `gehring`
//! subcommand: `cargo run --example linking_gehring -- data`.

use packspectra::geometry::linking::perturbed_hopf;
use packspectra::geometry::polyline::{axis_loop, circle_polygon, hopf_link, torus_link_2_4};
use packspectra::geometry::{crossing_linking_number, gauss_linking_integral, gauss_map_degree, gehring_check, write_polylines, Polyline};
use packspectra::rng;

fn show(name: &str, w: &Polyline, wp: &Polyline) -> packspectra::Result<()> {
    let g = gehring_check(w, wp)?;
    println!(
        "{name:<16} integral {:+.9}  crossings {:+}  degree {:+}  length {:.6}  2 pi d {:.6}  {}",
        gauss_linking_integral(w, wp),
        crossing_linking_number(w, wp)?,
        gauss_map_degree(w, wp)?,
        g.length,
        g.bound,
        if g.pass { "ok" } else { "VIOLATED" }
    );
    Ok(())
}

fn main() -> packspectra::Result<()> {
    let (a, b) = hopf_link(64)?;
    show("hopf", &a, &b)?;
    let (c, d) = torus_link_2_4(128)?;
    show("torus (2,4)", &c, &d)?;
    // Equality case: a round circle around a straight line.
    let circle = circle_polygon([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 1024)?;
    show("circle and axis", &circle, &axis_loop(1e3)?)?;
    let mut r = rng::stream(0, "example", 0);
    for k in 0..3 {
        let (p, q) = perturbed_hopf(64, 0.05, &mut r)?;
        show(&format!("perturbed #{k}"), &p, &q)?;
    }
    if let Some(dir) = std::env::args().nth(1) {
        std::fs::create_dir_all(&dir)?;
        write_polylines(format!("{dir}/hopf_a.txt"), &[a])?;
        write_polylines(format!("{dir}/hopf_b.txt"), &[b])?;
        println!("wrote {dir}/hopf_a.txt and {dir}/hopf_b.txt");
    }
    Ok(())
}

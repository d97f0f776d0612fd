//! Bisects packed disks on the unit torus with trigonometric families of
//! growing dimension and fits how the zero-set length grows with N.

use packspectra::cycle_spectra::{volume_spectrum_scaling, ScalingParams};
use packspectra::model_spaces::FlatTorus;

fn main() -> packspectra::Result<()> {
    let torus = FlatTorus::rectangular(&[1.0, 1.0])?;
    let ns = [4, 9, 16, 25, 36];
    let t = std::time::Instant::now();
    let spectrum = volume_spectrum_scaling(&torus, &ns, &ScalingParams::default())?;
    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>10}", "N", "radius", "length", "N*2r", "L/sqrt(N)", "residual");
    for r in &spectrum.rows {
        println!(
            "{:>4} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.2e}",
            r.n, r.ball_radius, r.length, r.waist_bound, r.normalized, r.max_residual
        );
    }
    println!("exponent {:.4}, prefactor {:.4}", spectrum.exponent, spectrum.prefactor);
    eprintln!("{:.1?}", t.elapsed());
    Ok(())
}

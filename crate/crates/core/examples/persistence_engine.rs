//! Barcode of a hand-built filtration: a hollow triangle that gets filled.

use packspectra::spectra::{persistence_reduce, FilteredComplex, Simplex};

fn main() -> packspectra::Result<()> {
    let s = |v: &[u32], t: f64| Simplex::new(v.to_vec(), t);
    let fc = FilteredComplex::from_simplices(
        vec![s(&[0], 0.0), s(&[1], 0.0), s(&[2], 1.0), s(&[0, 1], 1.0), s(&[1, 2], 2.0), s(&[0, 2], 3.0), s(&[0, 1, 2], 5.0)],
        2,
    );
    let b = persistence_reduce(&fc)?;
    for iv in &b.intervals {
        println!("H{}: [{}, {})", iv.dim, iv.birth, iv.death);
    }
    for t in [0.0, 2.0, 4.0, 6.0] {
        println!("t = {t}: b0 = {}, b1 = {}", b.betti_at(t, 0), b.betti_at(t, 1));
    }
    Ok(())
}

//! Builds rook and queen weights on a 4 x 4 lattice and prints neighbour counts.
//!
//!     cargo run --example lattice_weights

use sarpanel::{Contiguity, SpatialWeights};

fn main() -> sarpanel::Result<()> {
    for scheme in [Contiguity::Rook, Contiguity::Queen] {
        let w = SpatialWeights::lattice(4, scheme)?.row_standardize()?;
        println!("{scheme}: {} locations", w.n_locations());
        for row in w.neighbour_counts().chunks(4) {
            println!("  {row:?}");
        }
        let sums: Vec<f64> = w.values().row_iter().map(|r| r.sum()).collect();
        println!("  row sums in [{:.3}, {:.3}]", sums.iter().cloned().fold(f64::INFINITY, f64::min), sums.iter().cloned().fold(0.0, f64::max));
    }
    Ok(())
}

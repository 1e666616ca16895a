//! A small estimation and size experiment over both contiguity schemes.
//!
//!     cargo run --release --example monte_carlo

use sarpanel::sim::{mc_estimation, mc_size, DgpConfig, ErrorLaw, RhoShape};
use sarpanel::Contiguity;

fn main() -> sarpanel::Result<()> {
    println!("scheme  amse_rho amse_b1  amse_b2  bias_b3  sd_b3    size_5%");
    for scheme in [Contiguity::Rook, Contiguity::Queen] {
        let cfg = DgpConfig::new(8, 5, scheme, RhoShape::Rho1, ErrorLaw::Normal).with_seed(11);
        let est = mc_estimation(&cfg, 40, 0)?;
        let size = mc_size(&cfg, 40, 100, &[0.05], 0)?;
        println!(
            "{:7} {:.5}  {:.5}  {:.5}  {:+.4}  {:.4}   {:.3}",
            scheme.to_string(),
            est.amse_rho, est.amse_beta1, est.amse_beta2, est.bias_beta3, est.sd_beta3, size.rates[0].1
        );
    }
    Ok(())
}

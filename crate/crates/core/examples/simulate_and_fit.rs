//! Draws one panel from the simulation design and compares the fit with the truth.
//!
//!     cargo run --release --example simulate_and_fit

use sarpanel::sim::{Dgp, DgpConfig, ErrorLaw, RhoShape};
use sarpanel::{fit, Contiguity, KernelSpec};

fn main() -> sarpanel::Result<()> {
    let cfg = DgpConfig::new(12, 10, Contiguity::Rook, RhoShape::Rho1, ErrorLaw::Normal).with_seed(7);
    let dgp = Dgp::new(cfg)?;
    let sim = dgp.generate(0)?;
    let f = fit(&sim.data, &DgpConfig::model_spec(), dgp.weights(), KernelSpec::Gaussian, None)?;

    println!("bandwidth {:.4}, RSS {:.3}", f.bandwidth.value(), f.rss);
    println!("beta3 {:.4} (true -5), beta4 {:.4} (true 5)", f.beta_c[0], f.beta_c[1]);
    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "tau", "rho", "rho_hat", "beta1", "b1_hat", "beta2", "b2_hat");
    for (t, tau) in sim.data.tau().iter().enumerate() {
        println!(
            "{tau:5.2} {:8.4} {:8.4} {:8.4} {:8.4} {:8.4} {:8.4}",
            sim.truth[(t, 0)],
            f.gamma_v[(t, 0)],
            sim.truth[(t, 1)],
            f.gamma_v[(t, 1)],
            sim.truth[(t, 2)],
            f.gamma_v[(t, 2)]
        );
    }
    Ok(())
}

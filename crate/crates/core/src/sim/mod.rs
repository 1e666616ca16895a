//! Simulation design and Monte-Carlo drivers.
//!
//! The design is an `m x m` lattice with four regressors (intercept, `x2`
//! time-varying; `x3`, `x4` constant under the null), a time-varying spatial
//! coefficient and mean-zero location effects.

mod dgp;
mod monte_carlo;

pub use dgp::{generate, Beta4Shape, Dgp, DgpConfig, ErrorLaw, RhoShape, SimulatedPanel};
pub use monte_carlo::{
    bias_sd, mc_estimation, mc_power, mc_size, rejection_rate, McSummary, RejectionSummary, ReplicateEstimate,
};

//! Estimation and specification testing for spatial autoregressive panels
//! whose coefficients vary smoothly over normalized time.
//!
//! The model for location `i` at period `t` is
//!
//! ```text
//! y_it = rho(tau_t) (W y_t)_i + x_it' beta(tau_t) + alpha_i + e_it,   tau_t = t / T
//! ```
//!
//! with row-standardized weights `W`, effects summing to zero and some of the
//! `beta` constant. [`estimator::fit`] gives the two-stage estimator,
//! [`gof::bootstrap_test`] tests the constant block against a fully
//! time-varying alternative and [`sim`] reproduces the simulation design.
//!
//! Panels are stacked period by period, so row `t * N + i` holds location `i`
//! at period `t`.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod gof;
pub mod panel;
pub mod rng;
pub mod sim;
pub mod smoothing;

pub use error::{Error, Result};
pub use estimator::{fit, fit_both, FitResult, TvFitResult};
pub use gof::{bootstrap_test, decide, Decision, TestConfig, TestResult};
pub use panel::{Contiguity, ModelSpec, PanelData, SpatialWeights};
pub use smoothing::{rot_bandwidth, Bandwidth, KernelSpec};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Kernel family. Weights are `K((tau_t - tau0) / h)` without the `1/h`
/// factor, which cancels in every weighted least-squares solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl KernelSpec {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            KernelSpec::Gaussian => (-0.5 * u * u).exp() * INV_SQRT_2PI,
            KernelSpec::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelSpec::Gaussian),
            "epanechnikov" => Ok(KernelSpec::Epanechnikov),
            other => Err(Error::InvalidSpec(format!("unknown kernel '{other}'"))),
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelSpec::Gaussian => f.write_str("gaussian"),
            KernelSpec::Epanechnikov => f.write_str("epanechnikov"),
        }
    }
}

/// Free-function form of [`KernelSpec::eval`].
pub fn kernel_eval(spec: KernelSpec, u: f64) -> f64 {
    spec.eval(u)
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 {
            Ok(Self(h))
        } else {
            Err(Error::InvalidBandwidth(h))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Rule-of-thumb bandwidth `h = s_tau (N T)^(-1/5)`, with `s_tau` the sample
/// standard deviation (denominator `T - 1`) of the grid `1/T, ..., 1`.
pub fn rot_bandwidth(n: usize, t_len: usize) -> Result<Bandwidth> {
    if t_len < 2 {
        return Err(Error::DegenerateGrid { t_len });
    }
    let t = t_len as f64;
    let mean = (t + 1.0) / (2.0 * t);
    let ss: f64 = (1..=t_len).map(|k| (k as f64 / t - mean).powi(2)).sum();
    let s_tau = (ss / (t - 1.0)).sqrt();
    Bandwidth::new(s_tau * ((n * t_len) as f64).powf(-0.2))
}

/// Per-period weights `K((tau_t - tau0) / h)`, length T.
pub fn period_weights(kernel: KernelSpec, tau: &[f64], tau0: f64, h: Bandwidth) -> Vec<f64> {
    tau.iter().map(|t| kernel.eval((t - tau0) / h.value())).collect()
}

/// The diagonal of `diag(K(...)) (x) I_N`, length NT.
pub fn kernel_weight_vector(
    kernel: KernelSpec,
    tau: &[f64],
    tau0: f64,
    h: Bandwidth,
    n: usize,
) -> DVector<f64> {
    let per = period_weights(kernel, tau, tau0, h);
    DVector::from_fn(n * tau.len(), |k, _| per[k / n])
}

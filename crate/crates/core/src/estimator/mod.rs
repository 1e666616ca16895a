//! Two-stage least-squares profile local-linear dummy-variable estimation.
//!
//! Stage 1 replaces the endogenous spatial lag `W Y` by its fit on the
//! instruments. Stage 2 profiles out the time-varying block with the
//! local-linear smoother, estimates the constant coefficients by least
//! squares on the doubly-swept data, then recovers the fixed effects and the
//! coefficient curves.

mod instruments;
mod stages;

pub use instruments::{build_instruments, InstrumentSet};
pub use stages::{fit_full_tv, stage1_fit, stage2_fit, FitResult, Stage1Fit, TvFitResult};

use crate::error::Result;
use crate::panel::{ModelSpec, PanelData, SpatialWeights};
use crate::smoothing::{rot_bandwidth, Bandwidth, KernelSpec};

/// Runs both stages. `h` defaults to the rule-of-thumb bandwidth.
pub fn fit(
    data: &PanelData,
    spec: &ModelSpec,
    w: &SpatialWeights,
    kernel: KernelSpec,
    h: Option<Bandwidth>,
) -> Result<FitResult> {
    let h = match h {
        Some(h) => h,
        None => rot_bandwidth(data.n_locations(), data.t_len())?,
    };
    let op = w.expand_over_time(data.t_len());
    let stage1 = stage1_fit(data, &op, h, kernel)?;
    stage2_fit(data, spec, &stage1, h, kernel)
}

/// The partially linear fit and the fully time-varying fit on the same data,
/// sharing the first stage.
pub fn fit_both(
    data: &PanelData,
    spec: &ModelSpec,
    w: &SpatialWeights,
    kernel: KernelSpec,
    h: Option<Bandwidth>,
) -> Result<(FitResult, TvFitResult)> {
    let pl = fit(data, spec, w, kernel, h)?;
    let tv = fit_full_tv(data, &pl.stage1, pl.bandwidth, kernel)?;
    Ok((pl, tv))
}

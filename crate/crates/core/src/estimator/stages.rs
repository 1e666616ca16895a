use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::instruments::{build_instruments, InstrumentSet};
use crate::error::{Error, Result};
use crate::panel::{complete_effects, FixedEffectsDesign, ModelSpec, PanelData, SpatialOperator};
use crate::smoothing::{build_smoother, equilibrated_inverse, Bandwidth, KernelSpec, LocalSmoother, RCOND_FLOOR};

/// First stage: local-linear dummy-variable regression of `W Y` on the
/// instruments, giving the fitted spatial lag `Y_w_hat`.
#[derive(Debug, Clone)]
pub struct Stage1Fit {
    /// `eta_hat(tau_t)`, T x (3p - 2).
    pub eta_curves: DMatrix<f64>,
    /// `psi_hat`, length N - 1.
    pub psi_hat: DVector<f64>,
    /// Observed spatial lag `W Y`.
    pub y_w: DVector<f64>,
    /// `S_H(h) Y_w`.
    pub b_hat: DVector<f64>,
    /// `B_hat + D psi_hat`.
    pub y_w_hat: DVector<f64>,
    pub smoother: Arc<LocalSmoother>,
    pub instruments: Arc<InstrumentSet>,
}

pub fn stage1_fit(data: &PanelData, op: &SpatialOperator, h: Bandwidth, kernel: KernelSpec) -> Result<Stage1Fit> {
    check_operator(data, op)?;
    let instruments = build_instruments(data.x(), op)?;
    let fe = FixedEffectsDesign::new(data.n_locations(), data.t_len());
    let smoother = build_smoother(instruments.matrix(), data.tau(), h, &fe, kernel)
        .map_err(|e| e.in_stage("stage 1 (instrument regression)"))?;
    stage1_with(Arc::new(smoother), Arc::new(instruments), op, &fe, data.y())
}

impl Stage1Fit {
    /// Re-runs the first stage for a new response on the same design. The
    /// instrument smoother does not depend on the response and is shared.
    pub fn refit(&self, op: &SpatialOperator, y: &DVector<f64>) -> Result<Stage1Fit> {
        let fe = FixedEffectsDesign::new(op.n_locations(), op.t_len());
        stage1_with(self.smoother.clone(), self.instruments.clone(), op, &fe, y)
    }
}

fn stage1_with(
    smoother: Arc<LocalSmoother>,
    instruments: Arc<InstrumentSet>,
    op: &SpatialOperator,
    fe: &FixedEffectsDesign,
    y: &DVector<f64>,
) -> Result<Stage1Fit> {
    let y_w = op.apply(y)?;
    let b_hat = smoother.apply(&y_w);
    let psi_hat = fe.estimate(&(&y_w - &b_hat))?;
    let y_w_hat = &b_hat + fe.apply(&psi_hat)?;
    let eta_curves = smoother.coefficients(&y_w);
    Ok(Stage1Fit {
        eta_curves,
        psi_hat,
        y_w,
        b_hat,
        y_w_hat,
        smoother,
        instruments,
    })
}

/// Partially linear fit: constant coefficients, time-varying curves, fixed
/// effects, residuals and `RSS_PL`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    /// `beta_c_hat`, length p - q, in `spec.constant_cols()` order.
    pub beta_c: DVector<f64>,
    /// Rows `(rho_hat(tau_t), beta_v_hat(tau_t))`, T x (q + 1).
    pub gamma_v: DMatrix<f64>,
    /// `alpha_hat` for locations 2..N as estimated.
    pub alpha_raw: DVector<f64>,
    /// All N effects, the first completed so that they sum to zero.
    pub alpha: Vec<f64>,
    /// `epsilon_PL`.
    pub residuals: DVector<f64>,
    pub rss: f64,
    pub bandwidth: Bandwidth,
    pub kernel: KernelSpec,
    /// Set when some `|rho_hat(tau_t)| >= 1`.
    pub rho_outside_unit: bool,
    pub stage1: Stage1Fit,
}

impl FitResult {
    pub fn rho(&self) -> Vec<f64> {
        self.gamma_v.column(0).iter().copied().collect()
    }

    pub fn max_abs_rho(&self) -> f64 {
        self.gamma_v.column(0).amax()
    }
}

pub fn stage2_fit(
    data: &PanelData,
    spec: &ModelSpec,
    stage1: &Stage1Fit,
    h: Bandwidth,
    kernel: KernelSpec,
) -> Result<FitResult> {
    spec.check_against(data)?;
    let fe = FixedEffectsDesign::new(data.n_locations(), data.t_len());
    let zv = lagged_design(&stage1.y_w_hat, &data.columns(spec.varying_cols()));
    let smoother = build_smoother(&zv, data.tau(), h, &fe, kernel)
        .map_err(|e| e.in_stage("stage 2 (partially linear)"))?;

    let y = data.y();
    let xc = data.columns(spec.constant_cols());
    let y_tilde = y - smoother.apply(y);
    let xc_tilde = &xc - smoother.apply_matrix(&xc);
    let y_bar = fe.annihilate(&y_tilde)?;
    let xc_bar = fe.annihilate_matrix(&xc_tilde)?;

    let beta_c = if xc.ncols() == 0 {
        DVector::zeros(0)
    } else {
        let gram = xc_bar.transpose() * &xc_bar;
        let (inv, rcond) = equilibrated_inverse(&gram).ok_or(Error::CollinearConstantBlock { rcond: 0.0 })?;
        if rcond < RCOND_FLOOR {
            return Err(Error::CollinearConstantBlock { rcond });
        }
        inv * (xc_bar.transpose() * &y_bar)
    };

    let alpha_raw = fe.estimate(&(&y_tilde - &xc_tilde * &beta_c))?;
    let gamma_v = smoother.coefficients(&(y - &xc * &beta_c));
    let residuals = &y_bar - &xc_bar * &beta_c;
    let rss = residuals.norm_squared();
    let rho_outside_unit = gamma_v.column(0).iter().any(|r| r.abs() >= 1.0);
    if rho_outside_unit {
        log::warn!(
            "estimated spatial coefficient leaves (-1, 1): max |rho| = {:.4}",
            gamma_v.column(0).amax()
        );
    }
    Ok(FitResult {
        spec: spec.clone(),
        beta_c,
        gamma_v,
        alpha: complete_effects(&alpha_raw),
        alpha_raw,
        residuals,
        rss,
        bandwidth: h,
        kernel,
        rho_outside_unit,
        stage1: stage1.clone(),
    })
}

/// Fully time-varying fit (every coefficient a curve): `epsilon_TV` and `RSS_TV`.
#[derive(Debug, Clone)]
pub struct TvFitResult {
    /// Rows `(rho_hat(tau_t), beta_hat(tau_t))`, T x (p + 1).
    pub gamma_full: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
}

pub fn fit_full_tv(data: &PanelData, stage1: &Stage1Fit, h: Bandwidth, kernel: KernelSpec) -> Result<TvFitResult> {
    let fe = FixedEffectsDesign::new(data.n_locations(), data.t_len());
    let z = lagged_design(&stage1.y_w_hat, data.x());
    let smoother = build_smoother(&z, data.tau(), h, &fe, kernel)
        .map_err(|e| e.in_stage("fully time-varying fit"))?;
    let y = data.y();
    let y_tilde = y - smoother.apply(y);
    let residuals = fe.annihilate(&y_tilde)?;
    let alpha = complete_effects(&fe.estimate(&y_tilde)?);
    Ok(TvFitResult {
        gamma_full: smoother.coefficients(y),
        alpha,
        rss: residuals.norm_squared(),
        residuals,
    })
}

/// `(y_w_hat, X)` column-concatenated.
fn lagged_design(y_w_hat: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(x.nrows(), x.ncols() + 1);
    z.set_column(0, y_w_hat);
    z.columns_mut(1, x.ncols()).copy_from(x);
    z
}

pub(crate) fn check_operator(data: &PanelData, op: &SpatialOperator) -> Result<()> {
    if op.n_locations() != data.n_locations() || op.t_len() != data.t_len() {
        return Err(Error::DimensionError {
            what: "spatial operator size",
            expected: data.n_obs(),
            found: op.dim(),
        });
    }
    Ok(())
}

//! Residual-bootstrap test of the partially linear model against the fully
//! time-varying one.
//!
//! The statistic compares the two residual sums of squares,
//! `W = (NT/2)(RSS_PL - RSS_TV) / RSS_TV`. Its null distribution is
//! approximated by regenerating responses from the fitted null model with
//! resampled, centred `epsilon_TV` residuals and refitting both models.

use nalgebra::{DMatrix, DVector, LU, Dyn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{fit_full_tv, stage2_fit, FitResult, TvFitResult};
use crate::panel::{FixedEffectsDesign, ModelSpec, PanelData, SpatialWeights};
use crate::rng::{replicate_rng, run_in_pool};
use crate::smoothing::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Bootstrap replicates `k`.
    pub n_bootstrap: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the caller's pool.
    pub workers: usize,
}

impl TestConfig {
    pub fn new(n_bootstrap: usize, seed: u64) -> Self {
        Self {
            n_bootstrap,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub w_observed: f64,
    pub w_bootstrap: Vec<f64>,
    pub p_value: f64,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Reject,
    FailToReject,
}

/// `W = (NT/2)(RSS_PL - RSS_TV) / RSS_TV`. Not truncated at zero.
pub fn w_statistic(rss_pl: f64, rss_tv: f64, n: usize, t_len: usize) -> Result<f64> {
    if !rss_tv.is_finite() || rss_tv <= 0.0 {
        return Err(Error::InvalidRss { rss: rss_tv });
    }
    Ok((n * t_len) as f64 / 2.0 * (rss_pl - rss_tv) / rss_tv)
}

/// `#{W*_j >= w} / k`.
pub fn bootstrap_p_value(w_observed: f64, w_bootstrap: &[f64]) -> f64 {
    if w_bootstrap.is_empty() {
        return f64::NAN;
    }
    let hits = w_bootstrap.iter().filter(|w| **w >= w_observed).count();
    hits as f64 / w_bootstrap.len() as f64
}

/// Reject iff `p < alpha`.
pub fn decide(result: &TestResult, alpha: f64) -> Decision {
    if result.p_value < alpha {
        Decision::Reject
    } else {
        Decision::FailToReject
    }
}

/// Per-period factorizations of `I - rho_hat(tau_t) W_N`.
struct NullDgp {
    n: usize,
    factors: Vec<LU<f64, Dyn, Dyn>>,
}

impl NullDgp {
    fn new(w: &SpatialWeights, rho: &[f64]) -> Result<Self> {
        let n = w.n_locations();
        let max_abs_rho = rho.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let factors = rho
            .iter()
            .map(|&r| {
                let a = DMatrix::identity(n, n) - w.values() * r;
                let lu = a.lu();
                let u = lu.u();
                let diag = u.diagonal();
                let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
                if lo.is_nan() || lo <= 1e-12 * hi {
                    return Err(Error::ExplosiveBootstrapDgp { max_abs_rho });
                }
                Ok(lu)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, factors })
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(rhs.len());
        for (t, lu) in self.factors.iter().enumerate() {
            let b = rhs.rows(t * self.n, self.n).into_owned();
            let sol = lu.solve(&b).expect("factorization checked non-singular");
            y.rows_mut(t * self.n, self.n).copy_from(&sol);
        }
        y
    }
}

/// Mean part of the fitted null model: `B(X_v, beta_v_hat) + X_c beta_c_hat + D alpha_hat`.
fn null_mean(data: &PanelData, fit: &FitResult) -> Result<DVector<f64>> {
    let n = data.n_locations();
    let spec = &fit.spec;
    let xv = data.columns(spec.varying_cols());
    let xc = data.columns(spec.constant_cols());
    let mut mean = &xc * &fit.beta_c;
    for k in 0..data.n_obs() {
        let t = k / n;
        for j in 0..xv.ncols() {
            mean[k] += xv[(k, j)] * fit.gamma_v[(t, j + 1)];
        }
    }
    let fe = FixedEffectsDesign::new(n, data.t_len());
    Ok(mean + fe.apply(&fit.alpha_raw)?)
}

pub fn bootstrap_test(
    data: &PanelData,
    spec: &ModelSpec,
    w: &SpatialWeights,
    kernel: KernelSpec,
    fit: &FitResult,
    tv: &TvFitResult,
    cfg: &TestConfig,
) -> Result<TestResult> {
    if cfg.n_bootstrap == 0 {
        return Err(Error::Precondition("bootstrap replicate count must be at least 1".into()));
    }
    let (n, t_len) = (data.n_locations(), data.t_len());
    let nt = data.n_obs();
    let w_observed = w_statistic(fit.rss, tv.rss, n, t_len)?;

    let pool = centred_pool(&tv.residuals);
    let mean = null_mean(data, fit)?;
    let dgp = NullDgp::new(w, &fit.rho())?;
    let op = w.expand_over_time(t_len);
    let h = fit.bandwidth;

    let replicate = |j: usize| -> Result<f64> {
        let mut rng = replicate_rng(cfg.seed, j as u64);
        let rhs = DVector::from_fn(nt, |k, _| mean[k] + pool[rng.random_range(0..nt)]);
        let y_star = dgp.solve(&rhs);
        let data_star = data.with_response(y_star)?;
        let s1 = fit.stage1.refit(&op, data_star.y())?;
        let pl = stage2_fit(&data_star, spec, &s1, h, kernel)?;
        let tv = fit_full_tv(&data_star, &s1, h, kernel)?;
        w_statistic(pl.rss, tv.rss, n, t_len)
    };
    let w_bootstrap = run_in_pool(cfg.workers, || {
        (0..cfg.n_bootstrap)
            .into_par_iter()
            .map(|j| replicate(j).map_err(|e| Error::Replicate { index: j, source: Box::new(e) }))
            .collect::<Result<Vec<f64>>>()
    })??;

    Ok(TestResult {
        p_value: bootstrap_p_value(w_observed, &w_bootstrap),
        w_observed,
        w_bootstrap,
        k: cfg.n_bootstrap,
        seed: cfg.seed,
    })
}

/// `epsilon - mean(epsilon)`.
pub fn centred_pool(residuals: &DVector<f64>) -> DVector<f64> {
    let m = residuals.mean();
    residuals.map(|e| e - m)
}

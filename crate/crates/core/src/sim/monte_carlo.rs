use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::dgp::{Dgp, DgpConfig};
use crate::error::{Error, Result};
use crate::estimator::{fit, fit_both};
use crate::gof::{bootstrap_test, TestConfig};
use crate::rng::{derive_seed, run_in_pool};
use crate::smoothing::KernelSpec;

/// Estimates from one Monte-Carlo replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateEstimate {
    pub index: usize,
    pub rho: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub beta3: f64,
    pub beta4: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub config: DgpConfig,
    pub n_sim: usize,
    pub amse_rho: f64,
    pub amse_beta1: f64,
    pub amse_beta2: f64,
    pub bias_beta3: f64,
    pub sd_beta3: f64,
    pub bias_beta4: f64,
    pub sd_beta4: f64,
    pub tau: Vec<f64>,
    /// T x 3 truth: `rho, beta1, beta2`.
    #[serde(skip)]
    pub truth_curves: DMatrix<f64>,
    /// T x 3 replicate means: `rho, beta1, beta2`.
    #[serde(skip)]
    pub mean_curves: DMatrix<f64>,
    pub replicates: Vec<ReplicateEstimate>,
}

fn check_n_sim(n_sim: usize) -> Result<()> {
    if n_sim == 0 {
        return Err(Error::Precondition("n_sim must be at least 1".into()));
    }
    Ok(())
}

/// Runs `body` over replicates `0..n_sim` in parallel, keeping index order.
fn replicate_loop<T: Send>(
    n_sim: usize,
    workers: usize,
    body: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    run_in_pool(workers, || {
        (0..n_sim)
            .into_par_iter()
            .map(|j| body(j).map_err(|e| Error::Replicate { index: j, source: Box::new(e) }))
            .collect::<Result<Vec<T>>>()
    })?
}

/// Estimation accuracy: AMSE of the curves, bias and SD of the constants.
pub fn mc_estimation(cfg: &DgpConfig, n_sim: usize, workers: usize) -> Result<McSummary> {
    check_n_sim(n_sim)?;
    let dgp = Dgp::new(cfg.clone())?;
    let spec = DgpConfig::model_spec();
    let replicates = replicate_loop(n_sim, workers, |j| {
        let sim = dgp.generate(j)?;
        let f = fit(&sim.data, &spec, dgp.weights(), KernelSpec::Gaussian, None)?;
        Ok(ReplicateEstimate {
            index: j,
            rho: f.gamma_v.column(0).iter().copied().collect(),
            beta1: f.gamma_v.column(1).iter().copied().collect(),
            beta2: f.gamma_v.column(2).iter().copied().collect(),
            beta3: f.beta_c[0],
            beta4: f.beta_c[1],
        })
    })?;

    let truth = dgp.truth();
    let t_len = cfg.t_len;
    let r = n_sim as f64;
    let mut mean_curves = DMatrix::zeros(t_len, 3);
    let mut amse = [0.0; 3];
    for est in &replicates {
        for (c, curve) in [&est.rho, &est.beta1, &est.beta2].into_iter().enumerate() {
            for t in 0..t_len {
                let d = curve[t] - truth[(t, c)];
                amse[c] += d * d;
                mean_curves[(t, c)] += curve[t] / r;
            }
        }
    }
    for a in &mut amse {
        *a /= r * t_len as f64;
    }
    let (bias_beta3, sd_beta3) = bias_sd(replicates.iter().map(|e| e.beta3), truth.column(3).mean());
    let (bias_beta4, sd_beta4) = bias_sd(replicates.iter().map(|e| e.beta4), truth.column(4).mean());

    Ok(McSummary {
        config: cfg.clone(),
        n_sim,
        amse_rho: amse[0],
        amse_beta1: amse[1],
        amse_beta2: amse[2],
        bias_beta3,
        sd_beta3,
        bias_beta4,
        sd_beta4,
        tau: crate::panel::time_grid(t_len).to_vec(),
        truth_curves: truth.columns(0, 3).into_owned(),
        mean_curves,
        replicates,
    })
}

/// Mean deviation from `target` and sample SD (n - 1; 0 for a single draw).
pub fn bias_sd(values: impl Iterator<Item = f64>, target: f64) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean - target, sd)
}

/// Fraction of p-values below `alpha`. A nominal level of 1 or more rejects
/// everything.
pub fn rejection_rate(p_values: &[f64], alpha: f64) -> f64 {
    if p_values.is_empty() {
        return f64::NAN;
    }
    if alpha >= 1.0 {
        return 1.0;
    }
    p_values.iter().filter(|p| **p < alpha).count() as f64 / p_values.len() as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectionSummary {
    pub config: DgpConfig,
    pub n_sim: usize,
    pub k: usize,
    pub p_values: Vec<f64>,
    /// `(alpha, rate)` pairs.
    pub rates: Vec<(f64, f64)>,
}

fn mc_rejections(cfg: &DgpConfig, n_sim: usize, k: usize, alphas: &[f64], workers: usize) -> Result<RejectionSummary> {
    check_n_sim(n_sim)?;
    if k == 0 {
        return Err(Error::Precondition("bootstrap replicate count must be at least 1".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::Precondition(format!("nominal level must be positive, got {a}")));
    }
    let dgp = Dgp::new(cfg.clone())?;
    let spec = DgpConfig::model_spec();
    let p_values = replicate_loop(n_sim, workers, |j| {
        let sim = dgp.generate(j)?;
        let (pl, tv) = fit_both(&sim.data, &spec, dgp.weights(), KernelSpec::Gaussian, None)?;
        let test_cfg = TestConfig::new(k, derive_seed(cfg.seed, j as u64));
        let res = bootstrap_test(&sim.data, &spec, dgp.weights(), KernelSpec::Gaussian, &pl, &tv, &test_cfg)?;
        Ok(res.p_value)
    })?;
    let rates = alphas.iter().map(|&a| (a, rejection_rate(&p_values, a))).collect();
    Ok(RejectionSummary {
        config: cfg.clone(),
        n_sim,
        k,
        p_values,
        rates,
    })
}

/// Empirical size under the null (`c = 0`).
pub fn mc_size(cfg: &DgpConfig, n_sim: usize, k: usize, alphas: &[f64], workers: usize) -> Result<RejectionSummary> {
    if cfg.c != 0.0 {
        return Err(Error::Precondition(format!("size requires c = 0, got {}", cfg.c)));
    }
    mc_rejections(cfg, n_sim, k, alphas, workers)
}

/// Empirical power under the alternative (`c > 0`).
pub fn mc_power(cfg: &DgpConfig, n_sim: usize, k: usize, alphas: &[f64], workers: usize) -> Result<RejectionSummary> {
    if cfg.c.is_nan() || cfg.c <= 0.0 {
        return Err(Error::Precondition(format!("power requires c > 0, got {}", cfg.c)));
    }
    mc_rejections(cfg, n_sim, k, alphas, workers)
}

mod common;

use common::oracle::dummy_design;
use common::random_panel;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sarpanel::estimator::{fit_full_tv, stage1_fit, stage2_fit};
use sarpanel::gof::bootstrap_p_value;
use sarpanel::panel::{time_grid, FixedEffectsDesign};
use sarpanel::smoothing::{
    build_smoother, local_design, local_linear_fit, period_weights, solve_with_weights, within_projection_apply,
};
use sarpanel::{rot_bandwidth, Bandwidth, Contiguity, KernelSpec, ModelSpec, SpatialWeights};

fn matrix(rows: usize, cols: usize, vals: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| vals[(i * cols + j) % vals.len()] + 0.01 * (i as f64).sin() * (j + 1) as f64)
}

fn regressors(n: usize, t_len: usize, r: usize, vals: &[f64]) -> DMatrix<f64> {
    let mut z = matrix(n * t_len, r, vals);
    z.column_mut(0).fill(1.0);
    z
}

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_annihilates_dummies(n in 2usize..7, t_len in 2usize..6, t0 in 0usize..5, psi in finite_vec(6)) {
        let fe = FixedEffectsDesign::new(n, t_len);
        let tau = time_grid(t_len);
        let h = rot_bandwidth(n, t_len).unwrap();
        let w = period_weights(KernelSpec::Gaussian, &tau, tau[t0 % t_len], h);
        let psi = DVector::from_fn(n - 1, |i, _| psi[i]);
        let dpsi = fe.apply(&psi).unwrap();
        let out = within_projection_apply(&fe, &w, &DMatrix::from_column_slice(n * t_len, 1, dpsi.as_slice())).unwrap();
        prop_assert!(out.amax() < 1e-9 * psi.amax().max(1e-300) + 1e-15);
    }

    #[test]
    fn projection_matches_dense(n in 2usize..5, t_len in 2usize..4, t0 in 0usize..3, vals in finite_vec(12)) {
        let fe = FixedEffectsDesign::new(n, t_len);
        let tau = time_grid(t_len);
        let h = rot_bandwidth(n, t_len).unwrap();
        let w = period_weights(KernelSpec::Gaussian, &tau, tau[t0 % t_len], h);
        let nt = n * t_len;
        let d = dummy_design(n, t_len);
        let wh = DMatrix::from_diagonal(&DVector::from_fn(nt, |k, _| w[k / n]));
        let kcal = DMatrix::identity(nt, nt) - &d * (d.transpose() * &wh * &d).try_inverse().unwrap() * d.transpose() * &wh;
        let v = matrix(nt, 2, &vals);
        let fast = within_projection_apply(&fe, &w, &v).unwrap();
        prop_assert!((fast - &kcal * &v).amax() < 1e-9 * v.amax().max(1.0));
    }

    #[test]
    fn smoother_annihilates_dummies(seed in 0u64..1000, psi in finite_vec(8)) {
        let (data, _) = random_panel(3, 4, 3, seed);
        let fe = FixedEffectsDesign::new(9, 4);
        let h = rot_bandwidth(9, 4).unwrap();
        let s = build_smoother(data.x(), data.tau(), h, &fe, KernelSpec::Gaussian).unwrap();
        let psi = DVector::from_column_slice(&psi);
        let dpsi = fe.apply(&psi).unwrap();
        let sd = s.apply(&dpsi);
        prop_assert!(sd.amax() < 1e-9 * psi.amax().max(1.0));
        // (I - P_D)(I - S) D alpha = 0
        let swept = fe.annihilate(&(&dpsi - &sd)).unwrap();
        prop_assert!(swept.amax() < 1e-9 * psi.amax().max(1.0));
    }

    #[test]
    fn weight_scale_invariance(seed in 0u64..1000, scale in 0.01f64..100.0, t0 in 0usize..4) {
        let (data, _) = random_panel(3, 4, 3, seed);
        let fe = FixedEffectsDesign::new(9, 4);
        let h = rot_bandwidth(9, 4).unwrap();
        let tau0 = data.tau()[t0];
        let w = period_weights(KernelSpec::Gaussian, data.tau(), tau0, h);
        let scaled: Vec<f64> = w.iter().map(|k| k * scale).collect();
        let a = solve_with_weights(data.x(), data.tau(), tau0, h, &fe, &w).unwrap();
        let b = solve_with_weights(data.x(), data.tau(), tau0, h, &fe, &scaled).unwrap();
        let ya = &a.coef_operator * data.y();
        let yb = &b.coef_operator * data.y();
        prop_assert!((&ya - &yb).amax() <= 1e-10 * ya.amax().max(1.0));
    }

    #[test]
    fn local_linear_exactness(r in 1usize..6, t0 in 0usize..6, vals in finite_vec(40), coef in finite_vec(10), psi in finite_vec(5)) {
        let (n, t_len) = (6, 6);
        let fe = FixedEffectsDesign::new(n, t_len);
        let tau = time_grid(t_len);
        let h = Bandwidth::new(0.3).unwrap();
        let z = regressors(n, t_len, r, &vals);
        let tau0 = tau[t0];
        let m = local_design(&z, &tau, tau0, h);
        let ab = DVector::from_fn(2 * r, |i, _| coef[i]);
        let psi = DVector::from_column_slice(&psi);
        let response = &m * &ab + fe.apply(&psi).unwrap();
        let (a, b) = local_linear_fit(&z, &response, &tau, tau0, h, &fe, KernelSpec::Gaussian).unwrap();
        prop_assert!((a - ab.rows(0, r)).amax() < 1e-8);
        prop_assert!((b - ab.rows(r, r)).amax() < 1e-8);
    }

    #[test]
    fn nesting_reduces_to_full_model(seed in 0u64..1000) {
        let (data, w) = random_panel(3, 5, 3, seed);
        let h = rot_bandwidth(9, 5).unwrap();
        let s1 = stage1_fit(&data, &w.expand_over_time(5), h, KernelSpec::Gaussian).unwrap();
        let pl = stage2_fit(&data, &ModelSpec::fully_varying(3), &s1, h, KernelSpec::Gaussian).unwrap();
        let tv = fit_full_tv(&data, &s1, h, KernelSpec::Gaussian).unwrap();
        prop_assert_eq!(pl.beta_c.len(), 0);
        prop_assert!((&pl.gamma_v - &tv.gamma_full).amax() < 1e-9 * tv.gamma_full.amax().max(1.0));
        prop_assert!((pl.rss - tv.rss).abs() < 1e-9 * tv.rss.max(1.0));
    }

    #[test]
    fn p_value_is_count_ratio(w in -10.0f64..10.0, boot in prop::collection::vec(-10.0f64..10.0, 1..50), dw in 0.0f64..5.0) {
        let p = bootstrap_p_value(w, &boot);
        prop_assert!((0.0..=1.0).contains(&p));
        let hits = boot.iter().filter(|b| **b >= w).count();
        prop_assert_eq!(p, hits as f64 / boot.len() as f64);
        prop_assert!(bootstrap_p_value(w + dw, &boot) <= p);
    }

    #[test]
    fn lattice_structure(m in 2usize..9) {
        let rook = SpatialWeights::lattice(m, Contiguity::Rook).unwrap();
        let queen = SpatialWeights::lattice(m, Contiguity::Queen).unwrap();
        prop_assert_eq!(rook.values(), &rook.values().transpose());
        prop_assert_eq!(queen.values(), &queen.values().transpose());
        for (r, q) in rook.values().iter().zip(queen.values().iter()) {
            prop_assert!(*r <= *q);
        }
    }

    #[test]
    fn expansion_is_blockwise(n in 2usize..9, t_len in 1usize..5, vals in finite_vec(64)) {
        let raw = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { vals[(i * n + j) % 64].abs() + 0.1 });
        let w = SpatialWeights::new(raw).unwrap();
        let y = DVector::from_fn(n * t_len, |k, _| vals[(k * 7) % 64]);
        let lag = w.expand_over_time(t_len).apply(&y).unwrap();
        for t in 0..t_len {
            let block = w.values() * y.rows(t * n, n);
            prop_assert!((lag.rows(t * n, n) - block).amax() < 1e-12);
        }
    }
}

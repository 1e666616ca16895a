#![allow(dead_code)]

pub mod oracle;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sarpanel::{Contiguity, PanelData, SpatialWeights};

/// Random panel with `m^2` locations: intercept plus `p - 1` normal
/// covariates, a random fixed effect and a spatially lagged response.
///
/// Uses rook weights for `m >= 3`. The 2 x 2 rook lattice is a 4-cycle on
/// which `W x + W^2 x` is constant within each period, so with T = 3 the
/// instrument design is exactly singular; `m = 2` gets random dense weights.
pub fn random_panel(m: usize, t_len: usize, p: usize, seed: u64) -> (PanelData, SpatialWeights) {
    let n = m * m;
    let nt = n * t_len;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = if m >= 3 {
        SpatialWeights::lattice(m, Contiguity::Rook).unwrap()
    } else {
        let raw = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.random_range(0.1..1.0) });
        SpatialWeights::new(raw).unwrap()
    }
    .row_standardize()
    .unwrap();
    let mut x = DMatrix::zeros(nt, p);
    x.column_mut(0).fill(1.0);
    for j in 1..p {
        for k in 0..nt {
            x[(k, j)] = rng.sample(StandardNormal);
        }
    }
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rho = rng.random_range(-0.5..0.5);
    let mut rhs = DVector::zeros(nt);
    for k in 0..nt {
        let tau = (k / n + 1) as f64 / t_len as f64;
        let e: f64 = rng.sample(StandardNormal);
        rhs[k] = alpha[k % n] + e + (0..p).map(|j| x[(k, j)] * beta[j] * (1.0 + tau * j as f64 / 2.0)).sum::<f64>();
    }
    let a = DMatrix::identity(n, n) - w.values() * rho;
    let lu = a.lu();
    let mut y = DVector::zeros(nt);
    for t in 0..t_len {
        let b = rhs.rows(t * n, n).into_owned();
        y.rows_mut(t * n, n).copy_from(&lu.solve(&b).unwrap());
    }
    (PanelData::new(y, x, n, t_len).unwrap(), w)
}

/// `max |a - b| <= tol * max(1, max |b|)`.
pub fn assert_close(what: &str, a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
    assert_eq!(a.shape(), b.shape(), "{what}: shape");
    let scale = b.amax().max(1.0);
    let err = (a - b).amax();
    assert!(err <= tol * scale, "{what}: max error {err:e} exceeds {tol:e} x {scale}");
}

pub fn vec_close(what: &str, a: &DVector<f64>, b: &DVector<f64>, tol: f64) {
    assert_close(what, &DMatrix::from_column_slice(a.len(), 1, a.as_slice()), &DMatrix::from_column_slice(b.len(), 1, b.as_slice()), tol);
}

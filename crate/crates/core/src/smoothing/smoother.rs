use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::kernel::{Bandwidth, KernelSpec};
use super::local::solve_local_system;
use crate::error::{Error, Result};
use crate::panel::FixedEffectsDesign;

/// The smoother `S(h)` for a regressor block `Z`, stored as T row-blocks.
///
/// Block `t` of `S(h)` is `Z_t Phi(tau_t)` where `Z_t` holds the N rows of
/// period `t` and `Phi(tau_t) = (I_r, 0)[M^T W* M]^{-1} M^T W*` is r x NT.
#[derive(Debug, Clone)]
pub struct LocalSmoother {
    z: DMatrix<f64>,
    tau: Vec<f64>,
    h: Bandwidth,
    kernel: KernelSpec,
    fe: FixedEffectsDesign,
    phi: Vec<DMatrix<f64>>,
}

pub fn build_smoother(
    z: &DMatrix<f64>,
    tau: &[f64],
    h: Bandwidth,
    fe: &FixedEffectsDesign,
    kernel: KernelSpec,
) -> Result<LocalSmoother> {
    if tau.len() != fe.t_len() {
        return Err(Error::DimensionError {
            what: "time grid",
            expected: fe.t_len(),
            found: tau.len(),
        });
    }
    let phi = tau
        .par_iter()
        .map(|&tau0| solve_local_system(z, tau, tau0, h, fe, kernel).map(|s| s.phi()))
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalSmoother {
        z: z.clone(),
        tau: tau.to_vec(),
        h,
        kernel,
        fe: *fe,
        phi,
    })
}

impl LocalSmoother {
    pub fn n_regressors(&self) -> usize {
        self.z.ncols()
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.h
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn regressors(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// `Phi(tau_t)`, r x NT.
    pub fn phi(&self, t: usize) -> &DMatrix<f64> {
        &self.phi[t]
    }

    /// Coefficient curves: row `t` is `Phi(tau_t) v`.
    pub fn coefficients(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let r = self.n_regressors();
        let mut out = DMatrix::zeros(self.tau.len(), r);
        for (t, phi) in self.phi.iter().enumerate() {
            let c = phi * v;
            out.row_mut(t).copy_from(&c.transpose());
        }
        out
    }

    /// `S(h) v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.fe.n_locations();
        let mut out = DVector::zeros(v.len());
        for (t, phi) in self.phi.iter().enumerate() {
            let coef = phi * v;
            let block = self.z.rows(t * n, n) * coef;
            out.rows_mut(t * n, n).copy_from(&block);
        }
        out
    }

    /// `S(h) V`.
    pub fn apply_matrix(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.fe.n_locations();
        let mut out = DMatrix::zeros(v.nrows(), v.ncols());
        for (t, phi) in self.phi.iter().enumerate() {
            let coef = phi * v;
            let block = self.z.rows(t * n, n) * coef;
            out.rows_mut(t * n, n).copy_from(&block);
        }
        out
    }

    /// Rows `t N .. (t+1) N` of `S(h)`, N x NT.
    pub fn row_block(&self, t: usize) -> DMatrix<f64> {
        let n = self.fe.n_locations();
        self.z.rows(t * n, n) * &self.phi[t]
    }

    /// Dense NT x NT smoother.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.fe.n_locations();
        let nt = self.fe.n_rows();
        let mut s = DMatrix::zeros(nt, nt);
        for t in 0..self.tau.len() {
            s.rows_mut(t * n, n).copy_from(&self.row_block(t));
        }
        s
    }
}

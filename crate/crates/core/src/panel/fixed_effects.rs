//! The dummy-variable design `D = 1_T (x) (-1_{N-1}, I_{N-1})^T`.
//!
//! Column `j` of `D` carries `-1` for location 0 and `+1` for location `j + 1`
//! in every period, so the effect of location 0 is minus the sum of the
//! others. Its column space is `{1_T (x) u : sum(u) = 0}`, which gives every
//! projection below a closed form:
//!
//! * `D^T D = T (I + J)` and `(I + J)^{-1} = I - J / N`
//! * `P_D v` replaces each entry by its location's time mean, centred across
//!   locations.

use nalgebra::{DMatrix, DVector};

use super::weights::check_len;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedEffectsDesign {
    n: usize,
    t_len: usize,
}

impl FixedEffectsDesign {
    pub fn new(n: usize, t_len: usize) -> Self {
        Self { n, t_len }
    }

    pub fn n_locations(&self) -> usize {
        self.n
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn n_rows(&self) -> usize {
        self.n * self.t_len
    }

    pub fn n_cols(&self) -> usize {
        self.n.saturating_sub(1)
    }

    /// `D psi` for an (N-1)-vector of effects.
    pub fn apply(&self, psi: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("fixed-effect vector", self.n_cols(), psi.len())?;
        let full = complete_effects(psi);
        Ok(self.broadcast(&full))
    }

    /// `D^T v` for an NT-vector.
    pub fn apply_transpose(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("fixed-effect transpose input", self.n_rows(), v.len())?;
        let sums = self.location_sums(v);
        Ok(DVector::from_fn(self.n_cols(), |j, _| sums[j + 1] - sums[0]))
    }

    /// `(D^T D)^{-1} u = (1/T)(I - J/N) u`.
    pub fn gram_inverse_apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("fixed-effect gram input", self.n_cols(), u.len())?;
        let shift = u.sum() / self.n as f64;
        let t = self.t_len as f64;
        Ok(u.map(|x| (x - shift) / t))
    }

    /// Least-squares effects `(D^T D)^{-1} D^T v`.
    pub fn estimate(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let dt = self.apply_transpose(v)?;
        self.gram_inverse_apply(&dt)
    }

    /// `P_D v`.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("fixed-effect projection input", self.n_rows(), v.len())?;
        let centred = self.centred_location_means(v);
        Ok(self.broadcast(&centred))
    }

    /// `(I - P_D) v`.
    pub fn annihilate(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(v - self.project(v)?)
    }

    /// `(I - P_D) X`, column by column.
    pub fn annihilate_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_len("fixed-effect projection input rows", self.n_rows(), x.nrows())?;
        let mut out = x.clone();
        for mut col in out.column_iter_mut() {
            let v = DVector::from_column_slice(col.as_slice());
            let centred = self.centred_location_means(&v);
            for (k, c) in col.iter_mut().enumerate() {
                *c -= centred[k % self.n];
            }
        }
        Ok(out)
    }

    /// Dense NT x (N-1) matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows(), self.n_cols());
        for t in 0..self.t_len {
            for j in 0..self.n_cols() {
                d[(t * self.n, j)] = -1.0;
                d[(t * self.n + j + 1, j)] = 1.0;
            }
        }
        d
    }

    fn location_sums(&self, v: &DVector<f64>) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (k, x) in v.iter().enumerate() {
            sums[k % self.n] += x;
        }
        sums
    }

    fn centred_location_means(&self, v: &DVector<f64>) -> Vec<f64> {
        let t = self.t_len as f64;
        let mut means: Vec<f64> = self.location_sums(v).into_iter().map(|s| s / t).collect();
        let grand = means.iter().sum::<f64>() / self.n as f64;
        for m in &mut means {
            *m -= grand;
        }
        means
    }

    fn broadcast(&self, per_location: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n_rows(), |k, _| per_location[k % self.n])
    }
}

/// Expands `(psi_2, ..., psi_N)` to all N effects with `psi_1 = -sum`.
pub fn complete_effects(psi: &DVector<f64>) -> Vec<f64> {
    let mut full = Vec::with_capacity(psi.len() + 1);
    full.push(-psi.sum());
    full.extend(psi.iter().copied());
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seq(n: usize, scale: f64) -> DVector<f64> {
        DVector::from_fn(n, |i, _| ((i * 7 + 3) % 11) as f64 * scale - 2.0)
    }

    #[test]
    fn columns_sum_to_zero() {
        for n in 2..7 {
            for t in 1..5 {
                let d = FixedEffectsDesign::new(n, t).to_dense();
                for col in d.column_iter() {
                    assert_eq!(col.sum(), 0.0);
                }
            }
        }
    }

    #[test]
    fn gram_matches_closed_form() {
        for n in 2..=6 {
            for t in 1..=4 {
                let fe = FixedEffectsDesign::new(n, t);
                let d = fe.to_dense();
                let gram = d.transpose() * &d;
                let expected = (DMatrix::identity(n - 1, n - 1)
                    + DMatrix::from_element(n - 1, n - 1, 1.0))
                    * t as f64;
                assert_abs_diff_eq!(gram, expected, epsilon = 1e-12);
                // (D^T D)^{-1} through the closed form
                let u = seq(n - 1, 0.3);
                let via_closed = fe.gram_inverse_apply(&u).unwrap();
                let via_dense = gram.clone().try_inverse().unwrap() * &u;
                assert_abs_diff_eq!(via_closed, via_dense, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn projection_matches_dense() {
        let fe = FixedEffectsDesign::new(5, 3);
        let d = fe.to_dense();
        let pd = &d * (d.transpose() * &d).try_inverse().unwrap() * d.transpose();
        let v = seq(15, 0.7);
        assert_abs_diff_eq!(fe.project(&v).unwrap(), &pd * &v, epsilon = 1e-12);
        assert_abs_diff_eq!(fe.apply_transpose(&v).unwrap(), d.transpose() * &v, epsilon = 1e-12);
        let psi = seq(4, 0.5);
        assert_abs_diff_eq!(fe.apply(&psi).unwrap(), &d * &psi, epsilon = 1e-12);
        let x = DMatrix::from_fn(15, 2, |i, j| ((i + 3 * j) % 4) as f64);
        let expected = &x - &pd * &x;
        assert_abs_diff_eq!(fe.annihilate_matrix(&x).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn estimate_recovers_effects() {
        let fe = FixedEffectsDesign::new(4, 3);
        let psi = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let v = fe.apply(&psi).unwrap();
        assert_abs_diff_eq!(fe.estimate(&v).unwrap(), psi, epsilon = 1e-12);
        assert_abs_diff_eq!(complete_effects(&psi).iter().sum::<f64>(), 0.0, epsilon = 1e-12);
    }
}

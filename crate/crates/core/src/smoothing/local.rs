//! Local-linear dummy-variable solves at a single grid point.
//!
//! With `W_h = diag(k_t) (x) I_N` and `D = 1_T (x) E`, the fixed-effects
//! concentration operator `K = I - D (D^T W_h D)^{-1} D^T W_h` reduces to
//! subtracting, for every location, its kernel-weighted time mean centred
//! across locations. Nothing of size NT x NT is ever formed.

use nalgebra::{DMatrix, DVector};

use super::kernel::{period_weights, Bandwidth, KernelSpec};
use crate::error::{Error, Result};
use crate::panel::FixedEffectsDesign;

/// Reciprocal-condition floor for the equilibrated local normal matrix.
pub const RCOND_FLOOR: f64 = 1e-12;

/// `K(tau0) v` for every column of `v`, given per-period weights (length T).
pub fn within_projection_apply(
    fe: &FixedEffectsDesign,
    period_weights: &[f64],
    v: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (n, total) = check_shapes(fe, period_weights, v.nrows())?;
    let mut out = v.clone();
    let mut wmean = vec![0.0; n];
    for mut col in out.column_iter_mut() {
        wmean.iter_mut().for_each(|m| *m = 0.0);
        for (k, x) in col.iter().enumerate() {
            wmean[k % n] += period_weights[k / n] * x;
        }
        let grand = wmean.iter().sum::<f64>() / n as f64;
        for (k, x) in col.iter_mut().enumerate() {
            *x -= (wmean[k % n] - grand) / total;
        }
    }
    Ok(out)
}

/// `K(tau0)^T u` for every column of `u`.
pub fn within_projection_transpose_apply(
    fe: &FixedEffectsDesign,
    period_weights: &[f64],
    u: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (n, total) = check_shapes(fe, period_weights, u.nrows())?;
    let mut out = u.clone();
    let mut sums = vec![0.0; n];
    for mut col in out.column_iter_mut() {
        sums.iter_mut().for_each(|m| *m = 0.0);
        for (k, x) in col.iter().enumerate() {
            sums[k % n] += x;
        }
        let grand = sums.iter().sum::<f64>() / n as f64;
        for (k, x) in col.iter_mut().enumerate() {
            *x -= period_weights[k / n] * (sums[k % n] - grand) / total;
        }
    }
    Ok(out)
}

fn check_shapes(fe: &FixedEffectsDesign, weights: &[f64], rows: usize) -> Result<(usize, f64)> {
    if weights.len() != fe.t_len() {
        return Err(Error::DimensionError {
            what: "period weights",
            expected: fe.t_len(),
            found: weights.len(),
        });
    }
    if rows != fe.n_rows() {
        return Err(Error::DimensionError {
            what: "projection input rows",
            expected: fe.n_rows(),
            found: rows,
        });
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::SingularWeights { tau0: f64::NAN });
    }
    Ok((fe.n_locations(), total))
}

/// `M(tau0) = [Z, ((tau - tau0)/h) o Z]`, the scale taken from each row's period.
pub fn local_design(z: &DMatrix<f64>, tau: &[f64], tau0: f64, h: Bandwidth) -> DMatrix<f64> {
    let (rows, r) = z.shape();
    let n = rows / tau.len();
    let mut m = DMatrix::zeros(rows, 2 * r);
    m.columns_mut(0, r).copy_from(z);
    for k in 0..rows {
        let s = (tau[k / n] - tau0) / h.value();
        for j in 0..r {
            m[(k, r + j)] = s * z[(k, j)];
        }
    }
    m
}

/// The solved local system at one grid point: `G = [M^T W* M]^{-1} M^T W*`
/// (2r x NT), so that `(a; b) = G v` for any response `v`.
#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub tau0: f64,
    pub coef_operator: DMatrix<f64>,
    pub rcond: f64,
}

impl LocalSolution {
    /// `Phi(tau0) = (I_r, 0) G`.
    pub fn phi(&self) -> DMatrix<f64> {
        let r = self.coef_operator.nrows() / 2;
        self.coef_operator.rows(0, r).into_owned()
    }
}

pub fn solve_local_system(
    z: &DMatrix<f64>,
    tau: &[f64],
    tau0: f64,
    h: Bandwidth,
    fe: &FixedEffectsDesign,
    kernel: KernelSpec,
) -> Result<LocalSolution> {
    if z.nrows() != fe.n_rows() {
        return Err(Error::DimensionError {
            what: "local regressor rows",
            expected: fe.n_rows(),
            found: z.nrows(),
        });
    }
    let weights = period_weights(kernel, tau, tau0, h);
    solve_with_weights(z, tau, tau0, h, fe, &weights)
}

/// As [`solve_local_system`] with caller-supplied per-period kernel weights.
/// The result is invariant to rescaling the weights by a positive constant.
pub fn solve_with_weights(
    z: &DMatrix<f64>,
    tau: &[f64],
    tau0: f64,
    h: Bandwidth,
    fe: &FixedEffectsDesign,
    weights: &[f64],
) -> Result<LocalSolution> {
    if z.nrows() != fe.n_rows() {
        return Err(Error::DimensionError {
            what: "local regressor rows",
            expected: fe.n_rows(),
            found: z.nrows(),
        });
    }
    let n = fe.n_locations();
    let m = local_design(z, tau, tau0, h);
    let km = within_projection_apply(fe, weights, &m).map_err(|e| with_tau(e, tau0))?;
    let mut wkm = km.clone();
    for (k, mut row) in wkm.row_iter_mut().enumerate() {
        row *= weights[k / n];
    }
    let normal = km.transpose() * &wkm;
    // M^T W* = (K^T W K M)^T
    let wstar_m = within_projection_transpose_apply(fe, weights, &wkm)?;
    let (inverse, rcond) = equilibrated_inverse(&normal).ok_or(Error::SingularLocalSystem {
        stage: "local fit",
        tau0,
        rcond: 0.0,
    })?;
    if rcond < RCOND_FLOOR {
        return Err(Error::SingularLocalSystem {
            stage: "local fit",
            tau0,
            rcond,
        });
    }
    Ok(LocalSolution {
        tau0,
        coef_operator: inverse * wstar_m.transpose(),
        rcond,
    })
}

/// Local-linear dummy-variable fit at `tau0`: returns `(a, b)`, the level and
/// `h` times the slope of the coefficient curve.
pub fn local_linear_fit(
    z: &DMatrix<f64>,
    response: &DVector<f64>,
    tau: &[f64],
    tau0: f64,
    h: Bandwidth,
    fe: &FixedEffectsDesign,
    kernel: KernelSpec,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if response.len() != z.nrows() {
        return Err(Error::DimensionError {
            what: "local response",
            expected: z.nrows(),
            found: response.len(),
        });
    }
    let sol = solve_local_system(z, tau, tau0, h, fe, kernel)?;
    let coef = &sol.coef_operator * response;
    let r = z.ncols();
    Ok((coef.rows(0, r).into_owned(), coef.rows(r, r).into_owned()))
}

/// Inverse of a symmetric positive semi-definite matrix via the SVD of its
/// unit-diagonal scaling, with the reciprocal condition number of that scaling.
pub(crate) fn equilibrated_inverse(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let d = a.nrows();
    if d == 0 {
        return Some((DMatrix::zeros(0, 0), 1.0));
    }
    let diag = a.diagonal();
    if diag.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let s = diag.map(|v| 1.0 / v.sqrt());
    let scaled = DMatrix::from_fn(d, d, |i, j| a[(i, j)] * s[i] * s[j]);
    let svd = scaled.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), v| (hi.max(*v), lo.min(*v)));
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if rcond <= 0.0 || !rcond.is_finite() {
        return Some((DMatrix::zeros(d, d), 0.0));
    }
    let u = svd.u.as_ref()?;
    let vt = svd.v_t.as_ref()?;
    let mut inv = vt.transpose();
    for (j, mut col) in inv.column_iter_mut().enumerate() {
        col /= sv[j];
    }
    let inv = inv * u.transpose();
    Some((DMatrix::from_fn(d, d, |i, j| inv[(i, j)] * s[i] * s[j]), rcond))
}

fn with_tau(e: Error, tau0: f64) -> Error {
    match e {
        Error::SingularWeights { .. } => Error::SingularWeights { tau0 },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pseudo(i: usize, j: usize) -> f64 {
        (((i * 31 + j * 17 + 7) % 23) as f64 - 11.0) / 7.0
    }

    #[test]
    fn design_second_block_vanishes_at_tau0() {
        let tau = [0.5, 1.0];
        let z = DMatrix::from_fn(4, 2, pseudo);
        let h = Bandwidth::new(0.25).unwrap();
        let m = local_design(&z, &tau, 0.5, h);
        for k in 0..2 {
            for j in 2..4 {
                assert_eq!(m[(k, j)], 0.0);
            }
        }
        // rows of period 2 scaled by (1 - 0.5)/0.25 = 2
        for k in 2..4 {
            for j in 0..2 {
                assert_eq!(m[(k, j + 2)], 2.0 * z[(k, j)]);
            }
        }
        let ones = DMatrix::from_element(4, 1, 1.0);
        let m1 = local_design(&ones, &tau, 1.0, h);
        assert_eq!(m1.column(1).iter().copied().collect::<Vec<_>>(), vec![-2.0, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn projection_annihilates_dummies_and_keeps_ones() {
        let fe = FixedEffectsDesign::new(4, 3);
        let w = [0.4, 1.0, 0.05];
        let psi = DVector::from_vec(vec![1.5, -0.3, 0.7]);
        let dpsi = DMatrix::from_column_slice(12, 1, fe.apply(&psi).unwrap().as_slice());
        let out = within_projection_apply(&fe, &w, &dpsi).unwrap();
        assert!(out.amax() < 1e-12);
        let ones = DMatrix::from_element(12, 1, 1.0);
        assert_abs_diff_eq!(within_projection_apply(&fe, &w, &ones).unwrap(), ones, epsilon = 1e-14);
    }

    #[test]
    fn zero_weights_are_singular() {
        let fe = FixedEffectsDesign::new(3, 2);
        let v = DMatrix::zeros(6, 1);
        assert!(matches!(
            within_projection_apply(&fe, &[0.0, 0.0], &v),
            Err(Error::SingularWeights { .. })
        ));
    }

    #[test]
    fn transpose_is_adjoint() {
        let fe = FixedEffectsDesign::new(3, 4);
        let w = [0.2, 0.9, 0.5, 0.1];
        let v = DMatrix::from_fn(12, 1, pseudo);
        let u = DMatrix::from_fn(12, 1, |i, j| pseudo(i + 5, j));
        let kv = within_projection_apply(&fe, &w, &v).unwrap();
        let ktu = within_projection_transpose_apply(&fe, &w, &u).unwrap();
        assert_abs_diff_eq!(u.dot(&kv), ktu.dot(&v), epsilon = 1e-12);
    }

    #[test]
    fn collinear_regressors_are_rejected() {
        let fe = FixedEffectsDesign::new(3, 3);
        let tau = [1.0 / 3.0, 2.0 / 3.0, 1.0];
        let mut z = DMatrix::from_fn(9, 2, pseudo);
        let c0 = z.column(0).into_owned();
        z.set_column(1, &(c0 * 2.0));
        let err = solve_local_system(&z, &tau, 0.5, Bandwidth::new(0.3).unwrap(), &fe, KernelSpec::Gaussian);
        assert!(matches!(err, Err(Error::SingularLocalSystem { .. })));
    }
}

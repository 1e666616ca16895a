use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A balanced spatial panel stacked location-fastest: row `t * N + i` holds
/// location `i` in period `t`. Column 0 of `x` is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    y: DVector<f64>,
    x: DMatrix<f64>,
    n: usize,
    t_len: usize,
    tau: Vec<f64>,
    names: Vec<String>,
}

impl PanelData {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, n: usize, t_len: usize) -> Result<Self> {
        if n == 0 || t_len == 0 {
            return Err(Error::InvalidPanel(format!(
                "panel needs at least one location and one period, got N={n}, T={t_len}"
            )));
        }
        let nt = n * t_len;
        if y.len() != nt {
            return Err(Error::DimensionError {
                what: "response length",
                expected: nt,
                found: y.len(),
            });
        }
        if x.nrows() != nt {
            return Err(Error::DimensionError {
                what: "design rows",
                expected: nt,
                found: x.nrows(),
            });
        }
        if x.ncols() < 2 {
            return Err(Error::InsufficientRegressors { p: x.ncols() });
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel("non-finite value in response or design".into()));
        }
        if x.column(0).iter().any(|v| *v != 1.0) {
            return Err(Error::MissingIntercept { col: 0 });
        }
        let names = (0..x.ncols())
            .map(|j| if j == 0 { "intercept".to_string() } else { format!("x{j}") })
            .collect();
        Ok(Self {
            y,
            x,
            n,
            t_len,
            tau: time_grid(t_len),
            names,
        })
    }

    /// Attaches column names (length p, the first names the intercept).
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.x.ncols() {
            return Err(Error::DimensionError {
                what: "column names",
                expected: self.x.ncols(),
                found: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    /// Same design, different response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.y.len() {
            return Err(Error::DimensionError {
                what: "response length",
                expected: self.y.len(),
                found: y.len(),
            });
        }
        Ok(Self { y, ..self.clone() })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n_locations(&self) -> usize {
        self.n
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn n_obs(&self) -> usize {
        self.n * self.t_len
    }

    pub fn n_regressors(&self) -> usize {
        self.x.ncols()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Selected columns of the design, in the given order.
    pub fn columns(&self, cols: &[usize]) -> DMatrix<f64> {
        self.x.select_columns(cols)
    }
}

/// `tau_t = t / T` for `t = 1..=T`.
pub fn time_grid(t_len: usize) -> Vec<f64> {
    (1..=t_len).map(|t| t as f64 / t_len as f64).collect()
}

/// Which design columns get time-varying coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    varying_cols: Vec<usize>,
    constant_cols: Vec<usize>,
    intercept_col: usize,
}

impl ModelSpec {
    /// `varying` and `constant` must partition `0..p`; the intercept (column
    /// 0) must be time-varying.
    pub fn new(p: usize, varying: Vec<usize>, constant: Vec<usize>) -> Result<Self> {
        if varying.is_empty() {
            return Err(Error::InvalidSpec("at least one time-varying column is required".into()));
        }
        let mut seen = vec![false; p];
        for &c in varying.iter().chain(constant.iter()) {
            if c >= p {
                return Err(Error::InvalidSpec(format!("column {c} out of range for p = {p}")));
            }
            if seen[c] {
                return Err(Error::InvalidSpec(format!("column {c} listed twice")));
            }
            seen[c] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidSpec(format!("column {missing} is not assigned to either block")));
        }
        if !varying.contains(&0) {
            return Err(Error::InvalidSpec("the intercept (column 0) must be time-varying".into()));
        }
        Ok(Self {
            varying_cols: varying,
            constant_cols: constant,
            intercept_col: 0,
        })
    }

    /// Every column time-varying (the unrestricted model).
    pub fn fully_varying(p: usize) -> Self {
        Self {
            varying_cols: (0..p).collect(),
            constant_cols: Vec::new(),
            intercept_col: 0,
        }
    }

    pub fn varying_cols(&self) -> &[usize] {
        &self.varying_cols
    }

    pub fn constant_cols(&self) -> &[usize] {
        &self.constant_cols
    }

    pub fn intercept_col(&self) -> usize {
        self.intercept_col
    }

    pub fn q(&self) -> usize {
        self.varying_cols.len()
    }

    pub fn p(&self) -> usize {
        self.varying_cols.len() + self.constant_cols.len()
    }

    pub(crate) fn check_against(&self, data: &PanelData) -> Result<()> {
        if self.p() != data.n_regressors() {
            return Err(Error::InvalidSpec(format!(
                "specification covers {} columns but the design has {}",
                self.p(),
                data.n_regressors()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(nt: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(nt, p, |i, j| if j == 0 { 1.0 } else { (i * j) as f64 })
    }

    #[test]
    fn grid_is_t_over_t() {
        assert_eq!(time_grid(4), vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn rejects_single_column_design() {
        let err = PanelData::new(DVector::zeros(6), DMatrix::from_element(6, 1, 1.0), 3, 2);
        assert!(matches!(err, Err(Error::InsufficientRegressors { p: 1 })));
    }

    #[test]
    fn rejects_non_finite_and_missing_intercept() {
        let mut x = design(6, 2);
        x[(2, 1)] = f64::NAN;
        assert!(PanelData::new(DVector::zeros(6), x, 3, 2).is_err());
        let mut x = design(6, 2);
        x[(0, 0)] = 2.0;
        assert!(matches!(
            PanelData::new(DVector::zeros(6), x, 3, 2),
            Err(Error::MissingIntercept { col: 0 })
        ));
    }

    #[test]
    fn spec_partition_rules() {
        assert!(ModelSpec::new(4, vec![0, 1], vec![2, 3]).is_ok());
        assert!(ModelSpec::new(4, vec![0, 1], vec![2]).is_err());
        assert!(ModelSpec::new(4, vec![0, 1, 2], vec![2, 3]).is_err());
        assert!(ModelSpec::new(4, vec![1], vec![0, 2, 3]).is_err());
        assert!(ModelSpec::new(4, vec![], vec![0, 1, 2, 3]).is_err());
        let full = ModelSpec::fully_varying(3);
        assert_eq!(full.q(), 3);
        assert!(full.constant_cols().is_empty());
    }
}

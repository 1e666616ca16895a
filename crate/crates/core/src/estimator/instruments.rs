use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::panel::SpatialOperator;

/// Instruments `H = (X, W X_(-1), W^2 X_(-1))` for the spatial lag, where
/// `X_(-1)` drops the intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSet {
    h_matrix: DMatrix<f64>,
    p: usize,
}

impl InstrumentSet {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h_matrix
    }

    /// Number of regressors the instruments were built from.
    pub fn p(&self) -> usize {
        self.p
    }

    /// `3p - 2`.
    pub fn n_instruments(&self) -> usize {
        self.h_matrix.ncols()
    }
}

pub fn build_instruments(x: &DMatrix<f64>, op: &SpatialOperator) -> Result<InstrumentSet> {
    let p = x.ncols();
    if p < 2 {
        return Err(Error::InsufficientRegressors { p });
    }
    if x.column(0).iter().any(|v| *v != 1.0) {
        return Err(Error::MissingIntercept { col: 0 });
    }
    let rest = x.columns(1, p - 1).into_owned();
    let wx = op.apply_matrix(&rest)?;
    let wwx = op.apply_matrix(&wx)?;
    let mut h = DMatrix::zeros(x.nrows(), 3 * p - 2);
    h.columns_mut(0, p).copy_from(x);
    h.columns_mut(p, p - 1).copy_from(&wx);
    h.columns_mut(2 * p - 1, p - 1).copy_from(&wwx);
    Ok(InstrumentSet { h_matrix: h, p })
}

//! Spatial contiguity matrices and their time-expanded block-diagonal form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Lattice adjacency rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contiguity {
    /// Cells sharing an edge.
    Rook,
    /// Cells sharing an edge or a corner.
    Queen,
}

impl std::str::FromStr for Contiguity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rook" => Ok(Contiguity::Rook),
            "queen" => Ok(Contiguity::Queen),
            other => Err(Error::InvalidSpec(format!(
                "unknown contiguity scheme '{other}' (expected rook or queen)"
            ))),
        }
    }
}

impl std::fmt::Display for Contiguity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Contiguity::Rook => f.write_str("rook"),
            Contiguity::Queen => f.write_str("queen"),
        }
    }
}

/// An N x N spatial weight matrix with zero diagonal and non-negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    values: DMatrix<f64>,
    standardized: bool,
}

impl SpatialWeights {
    /// Validates a raw weight matrix. The standardized flag is set when every
    /// row with a neighbour already sums to one.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = values.shape();
        if rows != cols {
            return Err(Error::InvalidWeights(format!(
                "matrix is {rows} x {cols}, must be square"
            )));
        }
        if rows == 0 {
            return Err(Error::InvalidWeights("matrix is empty".into()));
        }
        for i in 0..rows {
            let d = values[(i, i)];
            if d != 0.0 {
                return Err(Error::DiagonalNotZero { index: i, value: d });
            }
        }
        if let Some(((i, j), v)) = values
            .iter()
            .enumerate()
            .map(|(k, v)| ((k % rows, k / rows), *v))
            .find(|(_, v)| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidWeights(format!(
                "entry ({i},{j}) = {v} is negative or not finite"
            )));
        }
        let standardized = (0..rows).all(|i| {
            let s = values.row(i).sum();
            s == 0.0 || (s - 1.0).abs() <= ROW_SUM_TOL
        });
        Ok(Self {
            values,
            standardized,
        })
    }

    /// Binary contiguity matrix on an `m x m` lattice, cells numbered row-major.
    pub fn lattice(m: usize, scheme: Contiguity) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGrid { m });
        }
        let n = m * m;
        let mut values = DMatrix::zeros(n, n);
        for r in 0..m {
            for c in 0..m {
                let i = r * m + c;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        if scheme == Contiguity::Rook && dr != 0 && dc != 0 {
                            continue;
                        }
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if rr < 0 || cc < 0 || rr >= m as i64 || cc >= m as i64 {
                            continue;
                        }
                        values[(i, rr as usize * m + cc as usize)] = 1.0;
                    }
                }
            }
        }
        Ok(Self {
            values,
            standardized: false,
        })
    }

    /// Divides every row by its sum.
    pub fn row_standardize(&self) -> Result<Self> {
        let mut values = self.values.clone();
        for i in 0..values.nrows() {
            let s = values.row(i).sum();
            if s <= 0.0 {
                return Err(Error::IsolatedLocation { row: i });
            }
            values.row_mut(i).unscale_mut(s);
        }
        Ok(Self {
            values,
            standardized: true,
        })
    }

    pub fn n_locations(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Number of strictly positive entries in each row.
    pub fn neighbour_counts(&self) -> Vec<usize> {
        self.values
            .row_iter()
            .map(|r| r.iter().filter(|v| **v > 0.0).count())
            .collect()
    }

    /// The block-diagonal operator `I_T (x) W_N`.
    pub fn expand_over_time(&self, t_len: usize) -> SpatialOperator {
        SpatialOperator {
            w: self.values.clone(),
            t_len,
        }
    }
}

/// `I_T (x) W_N` applied blockwise; the NT x NT matrix is never formed.
#[derive(Debug, Clone)]
pub struct SpatialOperator {
    w: DMatrix<f64>,
    t_len: usize,
}

impl SpatialOperator {
    pub fn n_locations(&self) -> usize {
        self.w.nrows()
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn dim(&self) -> usize {
        self.w.nrows() * self.t_len
    }

    pub fn block(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// `y_w = W y`, i.e. `y_w[t N + i] = sum_j w_ij y[t N + j]`.
    pub fn apply(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("spatial lag input", self.dim(), y.len())?;
        let n = self.n_locations();
        let mut out = DVector::zeros(y.len());
        for t in 0..self.t_len {
            let block = &self.w * y.rows(t * n, n);
            out.rows_mut(t * n, n).copy_from(&block);
        }
        Ok(out)
    }

    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_len("spatial lag input rows", self.dim(), x.nrows())?;
        let n = self.n_locations();
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for t in 0..self.t_len {
            let block = &self.w * x.rows(t * n, n);
            out.rows_mut(t * n, n).copy_from(&block);
        }
        Ok(out)
    }

    /// Dense NT x NT materialization, for small problems and checks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n_locations();
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for t in 0..self.t_len {
            out.view_mut((t * n, t * n), (n, n)).copy_from(&self.w);
        }
        out
    }
}

/// Spatial lag `W Y` of a stacked panel response.
pub fn spatial_lag(op: &SpatialOperator, y: &DVector<f64>) -> Result<DVector<f64>> {
    op.apply(y)
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionError {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rook_two_by_two_has_two_neighbours_each() {
        let w = SpatialWeights::lattice(2, Contiguity::Rook).unwrap();
        assert_eq!(w.neighbour_counts(), vec![2; 4]);
        for i in 0..4 {
            assert_eq!(w.values().row(i).sum(), 2.0);
        }
    }

    #[test]
    fn queen_two_by_two_is_complete() {
        let w = SpatialWeights::lattice(2, Contiguity::Queen).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(w.values()[(i, j)], if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn queen_three_by_three_counts() {
        // corners 3, edges 5, centre 8
        let w = SpatialWeights::lattice(3, Contiguity::Queen).unwrap();
        assert_eq!(w.neighbour_counts(), vec![3, 5, 3, 5, 8, 5, 3, 5, 3]);
    }

    #[test]
    fn small_lattice_rejected() {
        assert!(matches!(
            SpatialWeights::lattice(1, Contiguity::Rook),
            Err(Error::InvalidGrid { m: 1 })
        ));
    }

    #[test]
    fn standardize_rook() {
        let w = SpatialWeights::lattice(2, Contiguity::Rook)
            .unwrap()
            .row_standardize()
            .unwrap();
        assert!(w.is_standardized());
        for v in w.values().iter().filter(|v| **v != 0.0) {
            assert_eq!(*v, 0.5);
        }
        let w3 = SpatialWeights::lattice(3, Contiguity::Rook)
            .unwrap()
            .row_standardize()
            .unwrap();
        assert_eq!(w3.values()[(0, 1)], 0.5);
        assert_eq!(w3.values()[(0, 3)], 0.5);
        for j in [1, 3, 5, 7] {
            assert_eq!(w3.values()[(4, j)], 0.25);
        }
    }

    #[test]
    fn standardize_is_idempotent() {
        let w = SpatialWeights::lattice(4, Contiguity::Queen)
            .unwrap()
            .row_standardize()
            .unwrap();
        let again = w.row_standardize().unwrap();
        assert_abs_diff_eq!(w.values(), again.values(), epsilon = 1e-15);
    }

    #[test]
    fn isolated_row_is_reported() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let w = SpatialWeights::new(m).unwrap();
        assert!(matches!(
            w.row_standardize(),
            Err(Error::IsolatedLocation { row: 2 })
        ));
    }

    #[test]
    fn nonzero_diagonal_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 1)] = 0.3;
        assert!(matches!(
            SpatialWeights::new(m),
            Err(Error::DiagonalNotZero { index: 1, .. })
        ));
    }

    #[test]
    fn single_period_operator_is_block() {
        let w = SpatialWeights::lattice(3, Contiguity::Rook).unwrap();
        let op = w.expand_over_time(1);
        assert_eq!(op.to_dense(), *w.values());
    }

    #[test]
    fn lag_of_constant_is_constant_when_standardized() {
        let w = SpatialWeights::lattice(3, Contiguity::Queen)
            .unwrap()
            .row_standardize()
            .unwrap();
        let op = w.expand_over_time(4);
        let y = DVector::from_element(36, 2.5);
        let lag = spatial_lag(&op, &y).unwrap();
        assert_abs_diff_eq!(lag, y, epsilon = 1e-14);
        let zero = spatial_lag(&op, &DVector::zeros(36)).unwrap();
        assert_eq!(zero, DVector::zeros(36));
    }

    #[test]
    fn lag_rejects_wrong_length() {
        let op = SpatialWeights::lattice(2, Contiguity::Rook)
            .unwrap()
            .expand_over_time(3);
        assert!(matches!(
            op.apply(&DVector::zeros(5)),
            Err(Error::DimensionError { expected: 12, found: 5, .. })
        ));
    }
}

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Real `rows x cols` matrix with finite entries.
///
/// Public constructors reject NaN and infinities. Results of arithmetic on
/// finite inputs are not re-validated; code that can diverge (the solver)
/// checks finiteness of the quantities it cares about.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    /// Builds a matrix from entries listed in row-major order.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        check_shape(rows, cols)?;
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "from_row_major",
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", entries.len()),
            });
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, entries))
    }

    /// Wraps an nalgebra matrix after checking that every entry is finite.
    pub fn from_nalgebra(m: DMatrix<f64>) -> Result<Self> {
        check_shape(m.nrows(), m.ncols())?;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if !m[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    pub(crate) fn from_raw(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "matrix dimensions must be positive");
        Self(DMatrix::identity(n, n))
    }

    /// Square diagonal matrix with the given diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        check_shape(n, n)?;
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        Self::from_nalgebra(m)
    }

    /// Builds a matrix by evaluating `f(i, j)` at every position.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_shape(rows, cols)?;
        Self::from_nalgebra(DMatrix::from_fn(rows, cols, f))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    /// Matrix product with a shape check.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                expected: format!("{} rows on the right", self.cols()),
                found: format!("{}", rhs.rows()),
            });
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest entrywise absolute difference; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff: shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows().min(self.cols())).map(|i| self.0[(i, i)]).collect()
    }

    /// `(A + Aᵀ) / 2`; the input must be square.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square(), "symmetrized: matrix is not square");
        Self((&self.0 + self.0.transpose()) * 0.5)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square(), "asymmetry: matrix is not square");
        let n = self.rows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        worst
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 {
        return Err(invalid("rows", 0.0, "must be positive"));
    }
    if cols == 0 {
        return Err(invalid("cols", 0.0, "must be positive"));
    }
    Ok(())
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix{}x{}{:?}", self.rows(), self.cols(), self.to_row_major())
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: Self) -> DenseMatrix {
        DenseMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: Self) -> DenseMatrix {
        DenseMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: Self) -> DenseMatrix {
        DenseMatrix(&self.0 * &rhs.0)
    }
}

impl Mul<f64> for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: f64) -> DenseMatrix {
        DenseMatrix(&self.0 * rhs)
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;
    fn neg(self) -> DenseMatrix {
        DenseMatrix(-&self.0)
    }
}

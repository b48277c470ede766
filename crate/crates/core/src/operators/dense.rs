use alloc::vec;
use alloc::vec::Vec;

use super::LinearOperator;
use crate::{Error, Result};

/// Maximum number of domain columns [`materialize_matrix`] will enumerate.
pub const MATERIALIZE_LIMIT: usize = 10_000;

/// A dense row-major matrix acting as a [`LinearOperator`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}

impl LinearOperator for DenseMatrix {
    fn domain_dim(&self) -> usize {
        self.cols
    }

    fn range_dim(&self) -> usize {
        self.rows
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = crate::linalg::dot(self.row(r), x);
        }
    }

    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                crate::linalg::axpy(yr, self.row(r), out);
            }
        }
    }
}

/// Enumerates `op` column by column: column `j` is `op.apply(e_j)`.
pub fn materialize_matrix(op: &dyn LinearOperator) -> Result<DenseMatrix> {
    let cols = op.domain_dim();
    if cols > MATERIALIZE_LIMIT {
        return Err(Error::TooLarge {
            columns: cols,
            limit: MATERIALIZE_LIMIT,
        });
    }
    let rows = op.range_dim();
    let mut m = DenseMatrix::zeros(rows, cols);
    let mut e = vec![0.0; cols];
    let mut col = vec![0.0; rows];
    for j in 0..cols {
        e[j] = 1.0;
        op.apply_into(&e, &mut col);
        e[j] = 0.0;
        for (r, &v) in col.iter().enumerate() {
            m.set(r, j, v);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_identity() {
        let id = DenseMatrix::from_diagonal(&[1.0]);
        let m = materialize_matrix(&id).unwrap();
        assert_eq!(m.data(), &[1.0]);
    }

    #[test]
    fn guard_rejects_wide_operators() {
        let wide = DenseMatrix::zeros(1, MATERIALIZE_LIMIT + 1);
        match materialize_matrix(&wide) {
            Err(Error::TooLarge { columns, limit }) => {
                assert_eq!(columns, MATERIALIZE_LIMIT + 1);
                assert_eq!(limit, MATERIALIZE_LIMIT);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn adjoint_is_transpose() {
        let a = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let at = materialize_matrix(&TransposeView(&a)).unwrap();
        assert_eq!(at, a.transpose());
    }

    struct TransposeView<'a>(&'a DenseMatrix);

    impl LinearOperator for TransposeView<'_> {
        fn domain_dim(&self) -> usize {
            self.0.range_dim()
        }
        fn range_dim(&self) -> usize {
            self.0.domain_dim()
        }
        fn apply_into(&self, x: &[f64], out: &mut [f64]) {
            self.0.apply_adjoint_into(x, out)
        }
        fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
            self.0.apply_into(y, out)
        }
    }
}

//! Linear forward operators.
//!
//! Every operator works on flat `f64` slices: the domain is a row-major
//! [`GridImage`](crate::GridImage) and the range is an angle-major
//! [`Sinogram`](crate::Sinogram) (or any vector of matching length).

mod dense;
mod norm;
mod radon;

pub use dense::{materialize_matrix, DenseMatrix, MATERIALIZE_LIMIT};
pub use norm::{estimate_operator_norm, NormEstimate};
pub use radon::{
    default_angles, default_bins, radon_adjoint, radon_forward, RadonGeometry, RadonTransform,
};

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A linear map with an exact adjoint.
///
/// Implementations must satisfy `<apply(u), v> == <u, apply_adjoint(v)>` up
/// to floating-point rounding.
pub trait LinearOperator {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;

    /// `out = A x`. `out` is overwritten.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// `out = A* y`. `out` is overwritten.
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.range_dim()];
        self.apply_into(x, &mut out);
        out
    }

    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain_dim()];
        self.apply_adjoint_into(y, &mut out);
        out
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }
    fn range_dim(&self) -> usize {
        (**self).range_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).apply_adjoint_into(y, out)
    }
}

pub(crate) fn check_domain(op: &dyn LinearOperator, len: usize, what: &'static str) -> Result<()> {
    if op.domain_dim() != len {
        return Err(Error::DimensionMismatch {
            what,
            expected: op.domain_dim(),
            found: len,
        });
    }
    Ok(())
}

pub(crate) fn check_range(op: &dyn LinearOperator, len: usize, what: &'static str) -> Result<()> {
    if op.range_dim() != len {
        return Err(Error::DimensionMismatch {
            what,
            expected: op.range_dim(),
            found: len,
        });
    }
    Ok(())
}

/// `factor · A`.
#[derive(Debug, Clone)]
pub struct ScaledOperator<T> {
    inner: T,
    factor: f64,
}

impl<T: LinearOperator> ScaledOperator<T> {
    pub fn new(inner: T, factor: f64) -> Self {
        ScaledOperator { inner, factor }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: LinearOperator> LinearOperator for ScaledOperator<T> {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.inner.range_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        crate::linalg::scale(self.factor, out);
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.apply_adjoint_into(y, out);
        crate::linalg::scale(self.factor, out);
    }
}

/// `M A` where `M` zeroes the range entries whose mask is `false`.
///
/// Used for limited-data problems: masked detector samples are neither
/// predicted nor back-projected.
#[derive(Debug, Clone)]
pub struct MaskedOperator<T> {
    inner: T,
    mask: Vec<bool>,
}

impl<T: LinearOperator> MaskedOperator<T> {
    pub fn new(inner: T, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != inner.range_dim() {
            return Err(Error::DimensionMismatch {
                what: "range mask",
                expected: inner.range_dim(),
                found: mask.len(),
            });
        }
        Ok(MaskedOperator { inner, mask })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Zeroes the masked entries of a range vector in place.
    pub fn mask_in_place(&self, y: &mut [f64]) {
        for (v, &keep) in y.iter_mut().zip(&self.mask) {
            if !keep {
                *v = 0.0;
            }
        }
    }
}

impl<T: LinearOperator> LinearOperator for MaskedOperator<T> {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.inner.range_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        self.mask_in_place(out);
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let masked: Vec<f64> = y
            .iter()
            .zip(&self.mask)
            .map(|(&v, &keep)| if keep { v } else { 0.0 })
            .collect();
        self.inner.apply_adjoint_into(&masked, out);
    }
}

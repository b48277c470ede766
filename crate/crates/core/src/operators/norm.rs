use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::LinearOperator;
use crate::linalg;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// Lower estimate of the largest singular value.
    pub value: f64,
    /// Set when the operator annihilated the iterate (the estimate is 0).
    pub zero_operator: bool,
}

/// Power iteration on `A* A` from a seeded Gaussian start vector.
///
/// Returns `sqrt(‖A*A x_k‖)` for the last unit iterate `x_k`. That sequence is
/// nondecreasing in `k` and bounded by `σ_max`; the running maximum is
/// reported so rounding cannot break monotonicity.
pub fn estimate_operator_norm(
    op: &dyn LinearOperator,
    iterations: usize,
    seed: u64,
) -> Result<NormEstimate> {
    if iterations == 0 {
        return Err(Error::invalid("iterations", 0.0, "must be at least 1"));
    }
    let n = op.domain_dim();
    if n == 0 {
        return Err(Error::Empty("operator domain"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nx = linalg::norm(&x);
    linalg::scale(1.0 / nx, &mut x);

    let mut ax = vec![0.0; op.range_dim()];
    let mut bx = vec![0.0; n];
    let mut best = 0.0_f64;
    for _ in 0..iterations {
        op.apply_into(&x, &mut ax);
        op.apply_adjoint_into(&ax, &mut bx);
        let nb = linalg::norm(&bx);
        if !(nb > 0.0) {
            return Ok(NormEstimate {
                value: 0.0,
                zero_operator: true,
            });
        }
        best = best.max(libm::sqrt(nb));
        core::mem::swap(&mut x, &mut bx);
        linalg::scale(1.0 / nb, &mut x);
    }
    Ok(NormEstimate {
        value: best,
        zero_operator: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DenseMatrix;

    #[test]
    fn diagonal_spectrum() {
        let d = DenseMatrix::from_diagonal(&[3.0, 1.0]);
        let est = estimate_operator_norm(&d, 100, 1).unwrap();
        assert!((est.value - 3.0).abs() < 1e-6);
        assert!(!est.zero_operator);
    }

    #[test]
    fn zero_operator_is_flagged() {
        let z = DenseMatrix::zeros(3, 3);
        let est = estimate_operator_norm(&z, 10, 0).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.zero_operator);
    }

    #[test]
    fn zero_iterations_rejected() {
        let d = DenseMatrix::from_diagonal(&[1.0]);
        assert!(estimate_operator_norm(&d, 0, 0).is_err());
    }

    #[test]
    fn estimate_is_nondecreasing_and_deterministic() {
        let d = DenseMatrix::new(3, 3, vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        let mut prev = 0.0;
        for it in 1..30 {
            let e = estimate_operator_norm(&d, it, 9).unwrap().value;
            assert!(e >= prev);
            prev = e;
        }
        assert_eq!(
            estimate_operator_norm(&d, 7, 5).unwrap(),
            estimate_operator_norm(&d, 7, 5).unwrap()
        );
    }
}

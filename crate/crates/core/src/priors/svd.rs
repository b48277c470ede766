//! Thin SVD by one-sided (Hestenes) Jacobi rotations.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, norm};

/// `A = W diag(σ) Vᵀ` for a tall matrix given by its columns.
pub(crate) struct ThinSvd {
    /// Left singular vectors, one per entry (length = column length).
    pub left: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    /// Right singular vectors, one per entry (length = column count).
    pub right: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 60;

/// SVD of the matrix whose columns are `cols` (all the same length `m`,
/// with `cols.len() <= m`). Singular triplets come back in decreasing order.
pub(crate) fn thin_svd(cols: &[Vec<f64>]) -> ThinSvd {
    let n = cols.len();
    let mut g: Vec<Vec<f64>> = cols.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&g[p], &g[p]);
                let beta = dot(&g[q], &g[q]);
                let gamma = dot(&g[p], &g[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut g, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = g.iter().map(|c| norm(c)).collect();
    order.sort_by(|&a, &b| {
        sig[b]
            .partial_cmp(&sig[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });

    let mut left = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in order {
        let s = sig[i];
        let w = if s > 0.0 {
            g[i].iter().map(|x| x / s).collect()
        } else {
            vec![0.0; g[i].len()]
        };
        left.push(w);
        sigma.push(s);
        right.push(core::mem::take(&mut v[i]));
    }
    ThinSvd { left, sigma, right }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{linalg, Error, GridImage, Result, Sinogram};

/// Zero-mean Gaussian noise of variance `sigma2`, drawn from a ChaCha8 stream
/// seeded with `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma2: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma2: f64, seed: u64) -> Result<Self> {
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid("sigma2", sigma2, "must be finite and >= 0"));
        }
        Ok(NoiseSpec { sigma2, seed })
    }
}

/// Returns `(y + e, ‖e‖)` with `e_j ~ N(0, σ²)` i.i.d.
///
/// The returned δ is measured from the perturbed data, never predicted from σ².
pub fn add_noise(y: &Sinogram, spec: NoiseSpec) -> Result<(Sinogram, f64)> {
    add_noise_masked(y, spec, None)
}

/// As [`add_noise`], but entries whose `mask` is `false` are left untouched
/// (and so contribute nothing to δ).
///
/// One sample is drawn per entry regardless of the mask, so the noise on an
/// observed entry does not depend on which other entries are observed.
pub fn add_noise_masked(
    y: &Sinogram,
    spec: NoiseSpec,
    mask: Option<&[bool]>,
) -> Result<(Sinogram, f64)> {
    let spec = NoiseSpec::new(spec.sigma2, spec.seed)?;
    if let Some(m) = mask {
        if m.len() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "noise mask",
                expected: y.len(),
                found: m.len(),
            });
        }
    }
    let sigma = libm::sqrt(spec.sigma2);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noisy: Vec<f64> = y
        .values()
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            if mask.is_none_or(|m| m[j]) {
                v + sigma * z
            } else {
                v
            }
        })
        .collect();
    let delta = linalg::distance(&noisy, y.values());
    Ok((y.with_values(noisy)?, delta))
}

/// `‖truth − rec‖ / ‖truth‖` (unsquared).
pub fn relative_error(truth: &GridImage, rec: &GridImage) -> Result<f64> {
    truth.check_geometry(rec, "reconstruction")?;
    let n = truth.norm();
    if !(n > 0.0) {
        return Err(Error::invalid("truth norm", n, "must be positive"));
    }
    Ok(truth.distance(rec) / n)
}

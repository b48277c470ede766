//! Prior information: sets of expert images, their aggregates, online
//! pruning, and the handcrafted operator `A = Y U⁺`.

mod svd;

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;
use crate::operators::{DenseMatrix, LinearOperator};
use crate::{Error, GridImage, Result, Sinogram};

/// Default relative cutoff for singular values of `U` in [`build_handcrafted_operator`].
pub const DEFAULT_SVD_REL_TOL: f64 = 1e-12;

/// An ordered set of prior images `u⁽ⁱ⁾`, optionally paired with their
/// sinograms `y⁽ⁱ⁾`, and an activity mask used by pruning.
///
/// The arithmetic mean is cached over the active images and refreshed on
/// every mask change. The geometric mean is computed once, over all images,
/// at construction; it is `None` when some image has a negative pixel.
#[derive(Debug, Clone)]
pub struct PriorSet {
    images: Vec<GridImage>,
    sinograms: Option<Vec<Sinogram>>,
    active: Vec<bool>,
    cached_mean: GridImage,
    cached_gm: Option<GridImage>,
}

impl PriorSet {
    pub fn new(images: Vec<GridImage>) -> Result<Self> {
        let first = images.first().ok_or(Error::Empty("prior set"))?;
        for img in &images[1..] {
            first.check_geometry(img, "prior images")?;
        }
        let active = vec![true; images.len()];
        let cached_mean = mean_of(&images, &active)?;
        let cached_gm = geometric_mean_of(&images, &active).ok();
        Ok(PriorSet {
            images,
            sinograms: None,
            active,
            cached_mean,
            cached_gm,
        })
    }

    /// Pairs each image with its sinogram (index-wise).
    pub fn with_sinograms(images: Vec<GridImage>, sinograms: Vec<Sinogram>) -> Result<Self> {
        if sinograms.len() != images.len() {
            return Err(Error::DimensionMismatch {
                what: "prior sinograms",
                expected: images.len(),
                found: sinograms.len(),
            });
        }
        if let Some(first) = sinograms.first() {
            if sinograms.iter().any(|s| !s.same_geometry(first)) {
                return Err(Error::GeometryMismatch(
                    "prior sinograms do not share one geometry".into(),
                ));
            }
        }
        let mut set = PriorSet::new(images)?;
        set.sinograms = Some(sinograms);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[GridImage] {
        &self.images
    }

    pub fn sinograms(&self) -> Option<&[Sinogram]> {
        self.sinograms.as_deref()
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
    }

    /// Mean over the active images.
    pub fn mean(&self) -> &GridImage {
        &self.cached_mean
    }

    /// Pixelwise geometric mean over all images (computed at construction).
    pub fn geometric_mean(&self) -> Option<&GridImage> {
        self.cached_gm.as_ref()
    }

    pub fn width(&self) -> usize {
        self.images[0].width()
    }

    pub fn height(&self) -> usize {
        self.images[0].height()
    }

    fn set_active(&mut self, active: Vec<bool>) -> Result<()> {
        self.cached_mean = mean_of(&self.images, &active)?;
        self.active = active;
        Ok(())
    }
}

fn mean_of(images: &[GridImage], active: &[bool]) -> Result<GridImage> {
    let mut acc = vec![0.0; images[0].len()];
    let mut n = 0usize;
    for (img, _) in images.iter().zip(active).filter(|(_, &a)| a) {
        linalg::axpy(1.0, img.values(), &mut acc);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("no active prior images"));
    }
    linalg::scale(1.0 / n as f64, &mut acc);
    images[0].with_values(acc)
}

fn geometric_mean_of(images: &[GridImage], active: &[bool]) -> Result<GridImage> {
    let chosen: Vec<(usize, &GridImage)> = images
        .iter()
        .enumerate()
        .zip(active)
        .filter_map(|(p, &a)| a.then_some(p))
        .collect();
    if chosen.is_empty() {
        return Err(Error::Empty("no active prior images"));
    }
    for &(i, img) in &chosen {
        if let Some((p, &v)) = img.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(Error::NegativePixel {
                image: i,
                pixel: p,
                value: v,
            });
        }
    }
    let n = chosen.len() as f64;
    let values = (0..images[0].len())
        .map(|p| {
            let mut log_sum = 0.0;
            for &(_, img) in &chosen {
                let v = img.values()[p];
                if v == 0.0 {
                    return 0.0;
                }
                log_sum += libm::log(v);
            }
            libm::exp(log_sum / n)
        })
        .collect();
    images[0].with_values(values)
}

/// Pixelwise arithmetic mean of the active images.
pub fn prior_mean(set: &PriorSet) -> Result<GridImage> {
    mean_of(&set.images, &set.active)
}

/// Pixelwise geometric mean `(∏ u⁽ⁱ⁾)^(1/n)` of the active images. A zero in
/// any image forces a zero at that pixel.
pub fn prior_geometric_mean(set: &PriorSet) -> Result<GridImage> {
    geometric_mean_of(&set.images, &set.active)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PruneOutcome {
    /// Indices deactivated by this call.
    pub removed: Vec<usize>,
    /// Every active image failed the tolerance; the nearest one was kept.
    pub kept_nearest: bool,
}

/// Deactivates every active prior at distance `>= tol` from `u_k`.
///
/// Pruning never reactivates an image. If every active image would be
/// removed, the single nearest one survives and `kept_nearest` is set.
pub fn prune_priors(set: &mut PriorSet, u_k: &GridImage, tol: f64) -> Result<PruneOutcome> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", tol, "must be positive"));
    }
    set.images[0].check_geometry(u_k, "pruning iterate")?;
    let dist: Vec<(usize, f64)> = set
        .active_indices()
        .map(|i| (i, set.images[i].distance(u_k)))
        .collect();
    let mut active = set.active.clone();
    let mut outcome = PruneOutcome::default();
    for &(i, d) in &dist {
        if d >= tol {
            active[i] = false;
            outcome.removed.push(i);
        }
    }
    if !active.iter().any(|&a| a) {
        let (nearest, _) =
            dist.iter()
                .copied()
                .fold((usize::MAX, f64::INFINITY), |best, (i, d)| {
                    if d < best.1 {
                        (i, d)
                    } else {
                        best
                    }
                });
        if nearest == usize::MAX {
            return Err(Error::Empty("no active prior images"));
        }
        active[nearest] = true;
        outcome.removed.retain(|&i| i != nearest);
        outcome.kept_nearest = true;
    }
    if !outcome.removed.is_empty() {
        set.set_active(active)?;
    }
    Ok(outcome)
}

/// Provenance of a fitted [`HandcraftedOperator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitProvenance {
    pub n_train: usize,
    pub svd_rank: usize,
    /// `‖A U − Y‖_F / ‖Y‖_F` on the training pairs.
    pub fit_residual: f64,
}

/// `A = Y U⁺`, the least-squares linear map sending each training image to
/// its sinogram.
#[derive(Debug, Clone)]
pub struct HandcraftedOperator {
    matrix: DenseMatrix,
    provenance: FitProvenance,
}

impl HandcraftedOperator {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn provenance(&self) -> FitProvenance {
        self.provenance
    }
}

impl LinearOperator for HandcraftedOperator {
    fn domain_dim(&self) -> usize {
        self.matrix.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.matrix.range_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.apply_into(x, out)
    }
    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.matrix.apply_adjoint_into(y, out)
    }
}

/// Fits `A = Y U⁺` from all images of `set` (the activity mask is ignored).
///
/// `U` (N×n) and `Y` (M×n) hold the images and sinograms columnwise. `U⁺`
/// comes from a thin SVD of `U`, dropping singular values below
/// `rel_tol · σ_max`.
pub fn build_handcrafted_operator(set: &PriorSet, rel_tol: f64) -> Result<HandcraftedOperator> {
    if !(rel_tol >= 0.0) {
        return Err(Error::invalid("rel_tol", rel_tol, "must be nonnegative"));
    }
    let sinos = set
        .sinograms()
        .ok_or(Error::Empty("prior set has no sinograms"))?;
    let n_pix = set.images[0].len();
    let n_meas = sinos[0].len();
    let u_cols: Vec<Vec<f64>> = set.images.iter().map(|i| i.values().to_vec()).collect();
    let y_cols: Vec<&[f64]> = sinos.iter().map(|s| s.values()).collect();

    // Jacobi needs at least as many rows as columns; for wide U use Uᵀ.
    let (w_vecs, sigma, v_vecs) = if u_cols.len() <= n_pix {
        let svd = svd::thin_svd(&u_cols);
        (svd.left, svd.sigma, svd.right)
    } else {
        let rows: Vec<Vec<f64>> = (0..n_pix)
            .map(|p| u_cols.iter().map(|c| c[p]).collect())
            .collect();
        let svd = svd::thin_svd(&rows);
        (svd.right, svd.sigma, svd.left)
    };

    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    if !(sigma_max > 0.0) {
        return Err(Error::RankDeficient);
    }
    let cutoff = rel_tol * sigma_max;
    let rank = sigma.iter().take_while(|&&s| s > cutoff).count();

    // A = Σ_k (Y v_k / σ_k) w_kᵀ
    let mut a = DenseMatrix::zeros(n_meas, n_pix);
    let mut yv = vec![0.0; n_meas];
    for k in 0..rank {
        yv.iter_mut().for_each(|x| *x = 0.0);
        for (col, &coef) in y_cols.iter().zip(&v_vecs[k]) {
            linalg::axpy(coef / sigma[k], col, &mut yv);
        }
        let w = &w_vecs[k];
        for (r, &yr) in yv.iter().enumerate() {
            if yr != 0.0 {
                linalg::axpy(yr, w, a.row_mut(r));
            }
        }
    }

    let mut num = 0.0;
    let mut den = 0.0;
    let mut au = vec![0.0; n_meas];
    for (u, y) in u_cols.iter().zip(&y_cols) {
        a.apply_into(u, &mut au);
        num += au
            .iter()
            .zip(y.iter())
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>();
        den += linalg::dot(y, y);
    }
    let fit_residual = if den > 0.0 {
        libm::sqrt(num / den)
    } else {
        libm::sqrt(num)
    };

    Ok(HandcraftedOperator {
        matrix: a,
        provenance: FitProvenance {
            n_train: set.len(),
            svd_rank: rank,
            fit_residual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(values: &[f64]) -> GridImage {
        GridImage::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn mean_of_single_image_is_itself() {
        let set = PriorSet::new(vec![img(&[1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(prior_mean(&set).unwrap().values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn mean_of_zero_and_two_is_one() {
        let set = PriorSet::new(vec![img(&[0.0, 0.0]), img(&[2.0, 2.0])]).unwrap();
        assert_eq!(set.mean().values(), &[1.0, 1.0]);
    }

    #[test]
    fn empty_set_rejected() {
        assert!(matches!(PriorSet::new(vec![]), Err(Error::Empty(_))));
    }

    #[test]
    fn mixed_geometry_rejected() {
        let a = GridImage::zeros(2, 2);
        let b = GridImage::zeros(4, 1);
        assert!(matches!(
            PriorSet::new(vec![a, b]),
            Err(Error::GeometryMismatch(_))
        ));
    }

    #[test]
    fn geometric_mean_cases() {
        let same = PriorSet::new(vec![img(&[0.3, 1.0, 0.0]); 4]).unwrap();
        let gm = prior_geometric_mean(&same).unwrap();
        for (g, e) in gm.values().iter().zip([0.3, 1.0, 0.0]) {
            assert!((g - e).abs() < 1e-14);
        }
        let pair = PriorSet::new(vec![img(&[1.0, 0.0]), img(&[4.0, 5.0])]).unwrap();
        let gm = prior_geometric_mean(&pair).unwrap();
        assert!((gm.values()[0] - 2.0).abs() < 1e-14);
        assert_eq!(gm.values()[1], 0.0);
    }

    #[test]
    fn geometric_mean_rejects_negative_pixels() {
        let set = PriorSet::new(vec![img(&[1.0, 1.0]), img(&[1.0, -0.5])]).unwrap();
        assert!(set.geometric_mean().is_none());
        assert_eq!(
            prior_geometric_mean(&set),
            Err(Error::NegativePixel {
                image: 1,
                pixel: 1,
                value: -0.5
            })
        );
    }

    fn ladder() -> (PriorSet, GridImage) {
        // Priors at distances 1..=5 from the zero iterate.
        let images = (1..=5).map(|d| img(&[d as f64, 0.0])).collect();
        (PriorSet::new(images).unwrap(), img(&[0.0, 0.0]))
    }

    #[test]
    fn prune_by_distance() {
        let (mut set, u) = ladder();
        let out = prune_priors(&mut set, &u, 3.2).unwrap();
        assert_eq!(out.removed, vec![3, 4]);
        assert!(!out.kept_nearest);
        assert_eq!(set.active_indices().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(set.mean().values(), &[2.0, 0.0]);
    }

    #[test]
    fn prune_boundary_removes_at_equality() {
        let (mut set, u) = ladder();
        prune_priors(&mut set, &u, 3.0).unwrap();
        assert_eq!(set.active_indices().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn prune_infinite_tol_is_noop() {
        let (mut set, u) = ladder();
        let out = prune_priors(&mut set, &u, f64::INFINITY).unwrap();
        assert!(out.removed.is_empty());
        assert_eq!(set.active_count(), 5);
    }

    #[test]
    fn prune_exact_match_survives_alone() {
        let (mut set, _) = ladder();
        let u = img(&[4.0, 0.0]);
        prune_priors(&mut set, &u, 1e-9).unwrap();
        assert_eq!(set.active_indices().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn prune_keeps_nearest_when_all_fail() {
        let (mut set, _) = ladder();
        let u = img(&[10.0, 0.0]);
        let out = prune_priors(&mut set, &u, 0.5).unwrap();
        assert!(out.kept_nearest);
        assert_eq!(set.active_indices().collect::<Vec<_>>(), vec![4]);
        assert_eq!(out.removed, vec![0, 1, 2, 3]);
    }

    #[test]
    fn prune_never_reactivates() {
        let (mut set, u) = ladder();
        prune_priors(&mut set, &u, 2.5).unwrap();
        prune_priors(&mut set, &img(&[5.0, 0.0]), 100.0).unwrap();
        assert_eq!(set.active_count(), 2);
    }

    #[test]
    fn handcrafted_rank_one_closed_form() {
        let u = img(&[1.0, 2.0, 2.0]);
        let y = Sinogram::new(vec![0.0], 2, vec![3.0, -1.0]).unwrap();
        let set = PriorSet::with_sinograms(vec![u.clone()], vec![y.clone()]).unwrap();
        let a = build_handcrafted_operator(&set, DEFAULT_SVD_REL_TOL).unwrap();
        // A = y uᵀ / ‖u‖² with ‖u‖² = 9
        for r in 0..2 {
            for c in 0..3 {
                let expect = y.values()[r] * u.values()[c] / 9.0;
                assert!((a.matrix().get(r, c) - expect).abs() < 1e-14);
            }
        }
        let au = a.apply(u.values());
        assert!((au[0] - 3.0).abs() < 1e-14 && (au[1] + 1.0).abs() < 1e-14);
        assert_eq!(a.provenance().svd_rank, 1);
    }

    #[test]
    fn handcrafted_requires_sinograms_and_rank() {
        let set = PriorSet::new(vec![img(&[1.0])]).unwrap();
        assert!(build_handcrafted_operator(&set, 1e-12).is_err());
        let y = Sinogram::new(vec![0.0], 1, vec![1.0]).unwrap();
        let zero = PriorSet::with_sinograms(vec![img(&[0.0, 0.0])], vec![y]).unwrap();
        assert_eq!(
            build_handcrafted_operator(&zero, 1e-12).unwrap_err(),
            Error::RankDeficient
        );
    }
}

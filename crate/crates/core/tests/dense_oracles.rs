use girli_core::operators::{
    estimate_operator_norm, materialize_matrix, DenseMatrix, LinearOperator, RadonTransform,
    ScaledOperator,
};
use girli_core::priors::{build_handcrafted_operator, PriorSet, DEFAULT_SVD_REL_TOL};
use girli_core::schemes::{run_scheme, LambdaSequence, SchemeConfig, SchemeInputs, StoppingRule};
use girli_core::{GridImage, Sinogram};
use nalgebra::DMatrix;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn sigma_max(m: &DenseMatrix) -> f64 {
    to_nalgebra(m).singular_values().max()
}

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[test]
fn norm_estimate_converges_to_dense_sigma_max() {
    for (n, angles) in [(4, 6), (4, 12), (6, 9)] {
        let op = RadonTransform::with_defaults(n, n, angles).unwrap();
        let oracle = sigma_max(&materialize_matrix(&op).unwrap());
        let est = estimate_operator_norm(&op, 500, 1).unwrap();
        assert!(!est.zero_operator);
        assert!(
            est.value <= oracle * (1.0 + 1e-6),
            "{} > {oracle}",
            est.value
        );
        assert!(oracle - est.value <= 1e-6, "{} vs {oracle}", est.value);
    }
}

#[test]
fn norm_estimate_never_exceeds_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..20 {
        let (r, c) = (2 + trial % 5, 2 + trial % 7);
        let m = DenseMatrix::new(r, c, gaussian(r * c, &mut rng)).unwrap();
        let oracle = sigma_max(&m);
        for iters in [1, 3, 10, 50] {
            let est = estimate_operator_norm(&m, iters, trial as u64).unwrap();
            assert!(est.value <= oracle * (1.0 + 1e-6));
        }
    }
}

fn random_pairs(
    n_pixels: usize,
    n_data: usize,
    count: usize,
    seed: u64,
) -> (Vec<GridImage>, Vec<Sinogram>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..n_pixels)
                .map(|_| StandardUniform.sample(&mut rng))
                .collect();
            GridImage::new(n_pixels, 1, v).unwrap()
        })
        .collect();
    let sinos = (0..count)
        .map(|_| Sinogram::new(vec![0.0], n_data, gaussian(n_data, &mut rng)).unwrap())
        .collect();
    (images, sinos)
}

fn check_against_pseudoinverse(n_pixels: usize, n_data: usize, count: usize, seed: u64) {
    let (images, sinos) = random_pairs(n_pixels, n_data, count, seed);
    let u = DMatrix::from_fn(n_pixels, count, |i, k| images[k].values()[i]);
    let y = DMatrix::from_fn(n_data, count, |j, k| sinos[k].values()[j]);
    let oracle = &y * u.clone().pseudo_inverse(1e-12).unwrap();

    let set = PriorSet::with_sinograms(images, sinos).unwrap();
    let a = build_handcrafted_operator(&set, DEFAULT_SVD_REL_TOL).unwrap();
    let got = to_nalgebra(a.matrix());
    assert_eq!(got.shape(), oracle.shape());
    let defect = (&got - &oracle).abs().max();
    assert!(defect <= 1e-8, "defect {defect}");

    // Least-squares optimality against random perturbations.
    let best = (&got * &u - &y).norm();
    assert!((a.provenance().fit_residual - best / y.norm()).abs() <= 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    for _ in 0..10 {
        let e = DMatrix::from_fn(n_data, n_pixels, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            1e-3 * z
        });
        assert!(best <= ((&got + e) * &u - &y).norm() + 1e-12);
    }
}

#[test]
fn handcrafted_operator_matches_dense_pseudoinverse() {
    // fewer pairs than pixels: exact fit
    check_against_pseudoinverse(9, 7, 4, 1);
    // more pairs than pixels: least squares
    check_against_pseudoinverse(5, 6, 12, 2);
    check_against_pseudoinverse(6, 6, 6, 3);
}

#[test]
fn handcrafted_operator_handles_rank_deficient_priors() {
    let (mut images, sinos) = random_pairs(6, 4, 5, 9);
    images[4] = images[0].clone();
    images[3] = images[1]
        .with_values(images[1].values().iter().map(|v| 2.0 * v).collect())
        .unwrap();
    let u = DMatrix::from_fn(6, 5, |i, k| images[k].values()[i]);
    let y = DMatrix::from_fn(4, 5, |j, k| sinos[k].values()[j]);
    let oracle = &y * u.pseudo_inverse(1e-10).unwrap();
    let set = PriorSet::with_sinograms(images, sinos).unwrap();
    let a = build_handcrafted_operator(&set, DEFAULT_SVD_REL_TOL).unwrap();
    assert_eq!(a.provenance().svd_rank, 3);
    assert!((to_nalgebra(a.matrix()) - oracle).abs().max() <= 1e-8);
}

/// Orthonormal basis of `null(M)` from the dense SVD.
fn null_basis(m: &DMatrix<f64>) -> Vec<nalgebra::DVector<f64>> {
    let n = m.ncols();
    let full = if m.nrows() < n {
        // pad with zero rows so the SVD yields all right singular vectors
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), m.shape()).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = full.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    (0..n)
        .filter(|&i| svd.singular_values[i] <= 1e-10 * smax)
        .map(|i| v_t.row(i).transpose())
        .collect()
}

#[test]
fn girli_limit_offset_is_orthogonal_to_the_null_space() {
    let (w, h) = (6, 6);
    let radon = RadonTransform::with_defaults(w, h, 3).unwrap();
    let norm = estimate_operator_norm(&radon, 200, 0).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let truth = GridImage::from_fn(w, h, |_, _| StandardUniform.sample(&mut rng));
    let y = radon.forward(&truth).unwrap();
    let priors = PriorSet::new(
        (0..4)
            .map(|_| GridImage::from_fn(w, h, |_, _| StandardUniform.sample(&mut rng)))
            .collect(),
    )
    .unwrap();
    let u0 = priors.mean().clone();
    let cfg = SchemeConfig::girli(
        0.9 / (norm * norm),
        LambdaSequence::geometric(0.01, 0.99).unwrap(),
        StoppingRule::new(1.1, 0.0).unwrap(),
    )
    .with_max_iterations(20_000);
    let out = run_scheme(
        &cfg,
        &SchemeInputs::new(&radon, &y, &u0).with_priors(&priors),
    )
    .unwrap();

    let m = to_nalgebra(&materialize_matrix(&radon).unwrap());
    let basis = null_basis(&m);
    assert!(!basis.is_empty());
    let offset = nalgebra::DVector::from_iterator(
        w * h,
        out.reconstruction
            .values()
            .iter()
            .zip(u0.values())
            .map(|(a, b)| a - b),
    );
    let proj: f64 = basis
        .iter()
        .map(|b| b.dot(&offset).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(proj <= 1e-6, "null-space component {proj}");
    assert!(out.trace.final_residual() < 1e-3);
}

#[test]
fn scaled_operator_norm_scales() {
    let op = RadonTransform::with_defaults(4, 4, 6).unwrap();
    let base = sigma_max(&materialize_matrix(&op).unwrap());
    let scaled = ScaledOperator::new(&op, 0.25);
    let got = sigma_max(&materialize_matrix(&scaled).unwrap());
    assert!((got - 0.25 * base).abs() <= 1e-12 * base);
    assert_eq!(scaled.domain_dim(), 16);
}

//! Convergence-analysis constants for the generalized iteratively
//! regularized Landweber iterations, and checks of their hypotheses.
//!
//! For a linear operator the tangential cone condition holds with `η = 0`,
//! and `L` is any upper bound of `‖R‖`. The iteration
//! `u − ω R*(R u − y)` is the unit-step iteration for `√ω R`, so callers that
//! use a step size should pass `L ≥ √ω ‖R‖` and a noise level `√ω δ`.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg;
use crate::operators::LinearOperator;
use crate::priors::PriorSet;
use crate::{Error, GridImage, Result};

/// Safety factor applied to a power-iteration estimate of `‖R‖` to obtain `L`.
pub const LIPSCHITZ_SAFETY: f64 = 1.01;

/// Default `κ`.
pub const DEFAULT_KAPPA: f64 = 0.5;

/// Relative tangential-cone defect below which `η = 0` is accepted.
pub const TCC_ZERO_TOL: f64 = 1e-10;

/// `c(ρ) = ρ (1 − λ + √(1 + λ(2 − λ) L²/κ²)) / (2 − λ)` at `λ = λ_max`.
pub fn compute_c_rho(rho: f64, lipschitz: f64, kappa: f64, lambda_max: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::invalid("rho", rho, "must be positive"));
    }
    if !(lipschitz >= 0.0) {
        return Err(Error::invalid("L", lipschitz, "must be nonnegative"));
    }
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", kappa, "must be positive"));
    }
    if !(0.0..1.0).contains(&lambda_max) {
        return Err(Error::invalid(
            "lambda_max",
            lambda_max,
            "must lie in [0, 1)",
        ));
    }
    let q = lipschitz * lipschitz / (kappa * kappa);
    let root = libm::sqrt(1.0 + lambda_max * (2.0 - lambda_max) * q);
    Ok(rho * (1.0 - lambda_max + root) / (2.0 - lambda_max))
}

/// `E = 2 − L² − 2η − 2λ(1 − η) − κ²`. A nonpositive value means the
/// hypotheses fail; it is returned, not rejected.
pub fn compute_e(lipschitz: f64, eta: f64, lambda: f64, kappa: f64) -> f64 {
    2.0 - lipschitz * lipschitz - 2.0 * eta - 2.0 * lambda * (1.0 - eta) - kappa * kappa
}

/// `τ_min = 2(1 − λ_max)(1 + η)/E`; any `τ > τ_min` is admissible.
pub fn compute_tau_min(lambda_max: f64, eta: f64, e: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::HypothesisViolated("E must be positive"));
    }
    Ok(2.0 * (1.0 - lambda_max) * (1.0 + eta) / e)
}

/// `D = E − 2(1 − λ)(1 + η)/τ`.
pub fn compute_d(e: f64, lambda: f64, eta: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", tau, "must be positive"));
    }
    Ok(e - 2.0 * (1.0 - lambda) * (1.0 + eta) / tau)
}

/// The constants `(ρ, L, η, κ, λ_max)` of the convergence analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub rho: f64,
    pub lipschitz: f64,
    pub eta: f64,
    pub kappa: f64,
    pub lambda_max: f64,
}

impl TheoryConstants {
    pub fn new(rho: f64, lipschitz: f64, eta: f64, kappa: f64, lambda_max: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::invalid("rho", rho, "must be positive"));
        }
        if !(lipschitz > 0.0) {
            return Err(Error::invalid("L", lipschitz, "must be positive"));
        }
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::invalid("eta", eta, "must lie in [0, 1/2)"));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::invalid("kappa", kappa, "must lie in (0, 1)"));
        }
        if !(lambda_max > 0.0 && lambda_max < 1.0) {
            return Err(Error::invalid(
                "lambda_max",
                lambda_max,
                "must lie in (0, 1)",
            ));
        }
        Ok(TheoryConstants {
            rho,
            lipschitz,
            eta,
            kappa,
            lambda_max,
        })
    }

    pub fn c_rho(&self) -> f64 {
        compute_c_rho(self.rho, self.lipschitz, self.kappa, self.lambda_max)
            .expect("validated constants")
    }

    /// `E` evaluated at `λ = λ_max`.
    pub fn e(&self) -> f64 {
        compute_e(self.lipschitz, self.eta, self.lambda_max, self.kappa)
    }

    /// `E` evaluated at a specific damping value `λ_k`.
    pub fn e_at(&self, lambda: f64) -> f64 {
        compute_e(self.lipschitz, self.eta, lambda, self.kappa)
    }

    pub fn tau_min(&self) -> Result<f64> {
        compute_tau_min(self.lambda_max, self.eta, self.e())
    }

    pub fn d(&self, tau: f64) -> Result<f64> {
        compute_d(self.e(), self.lambda_max, self.eta, tau)
    }

    /// Residual threshold `2(1 − λ_max)(1 + η)δ/E` above which one step keeps
    /// the iterate in `B_c(ρ)(u†)`.
    pub fn sufficient_residual(&self, delta: f64) -> Result<f64> {
        Ok(self.tau_min()? * delta)
    }

    /// `1 + L²/κ²`.
    fn q1(&self) -> f64 {
        1.0 + self.lipschitz * self.lipschitz / (self.kappa * self.kappa)
    }
}

/// Upper envelope `ρ²/D · [1 + 2(1 + L²/κ²) Σ_{k<k†} λ_k]` of the residual
/// sum up to the discrepancy stop.
pub fn residual_sum_bound(
    constants: &TheoryConstants,
    tau: f64,
    lambda_partial_sum: f64,
) -> Result<f64> {
    let d = constants.d(tau)?;
    if !(d > 0.0) {
        return Err(Error::HypothesisViolated("D must be positive"));
    }
    if !(lambda_partial_sum >= 0.0) {
        return Err(Error::invalid(
            "lambda_partial_sum",
            lambda_partial_sum,
            "must be nonnegative",
        ));
    }
    let rho2 = constants.rho * constants.rho;
    Ok(rho2 / d * (1.0 + 2.0 * constants.q1() * lambda_partial_sum))
}

/// Both sides of the residual-sum inequality
/// `k†(τδ)² < Σ_{k<k†} r_k² ≤ bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSumCheck {
    pub stop_index: usize,
    pub lower: f64,
    pub residual_sum: f64,
    pub upper: f64,
}

impl ResidualSumCheck {
    pub fn lower_holds(&self) -> bool {
        self.lower < self.residual_sum
    }

    pub fn upper_holds(&self) -> bool {
        self.residual_sum <= self.upper
    }
}

/// Evaluates the residual-sum inequality for a discrepancy-stopped run.
///
/// `residuals[k]` is `‖R u_k − y^δ‖` for `k = 0..=k†`; `lambdas[k]` the
/// damping used in step `k`.
pub fn check_residual_sum(
    constants: &TheoryConstants,
    tau: f64,
    delta: f64,
    residuals: &[f64],
    lambdas: &[f64],
) -> Result<ResidualSumCheck> {
    let stop_index = residuals
        .len()
        .checked_sub(1)
        .ok_or(Error::Empty("residual history"))?;
    if lambdas.len() < stop_index {
        return Err(Error::DimensionMismatch {
            what: "damping history",
            expected: stop_index,
            found: lambdas.len(),
        });
    }
    let residual_sum = residuals[..stop_index].iter().map(|r| r * r).sum();
    let lambda_sum = lambdas[..stop_index].iter().sum();
    Ok(ResidualSumCheck {
        stop_index,
        lower: stop_index as f64 * (tau * delta) * (tau * delta),
        residual_sum,
        upper: residual_sum_bound(constants, tau, lambda_sum)?,
    })
}

/// Diagnostic report on the convergence hypotheses for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub rho: f64,
    pub dist_truth_initial: f64,
    pub dist_truth_mean: f64,
    pub dist_truth_gm: Option<f64>,
    pub truth_in_initial_ball: bool,
    pub mean_within_rho: bool,
    pub gm_within_rho: Option<bool>,
    pub operator_norm: f64,
    pub lipschitz: f64,
    pub norm_within_lipschitz: bool,
    /// Largest relative tangential-cone defect over the sampled pairs.
    pub tcc_defect: f64,
    pub eta_zero_applies: bool,
    pub lambda_max_below_one: bool,
    pub e: f64,
    pub e_positive: bool,
    pub tau: f64,
    pub tau_min: Option<f64>,
    pub tau_admissible: bool,
    pub c_rho: f64,
}

impl AssumptionReport {
    /// Every checked hypothesis holds (the GM distance only when available).
    pub fn all_hold(&self) -> bool {
        self.truth_in_initial_ball
            && self.mean_within_rho
            && self.gm_within_rho.unwrap_or(true)
            && self.norm_within_lipschitz
            && self.eta_zero_applies
            && self.lambda_max_below_one
            && self.e_positive
            && self.tau_admissible
    }
}

/// Number of random pairs used for the tangential-cone check.
const TCC_PAIRS: usize = 8;

/// Checks the hypotheses of the convergence analysis on a synthetic instance
/// with known truth.
///
/// `operator_norm` is the estimate of `‖op‖`. The cone defect
/// `‖F(u) − F(v) − F'(u)(u − v)‖ / ‖F(u) − F(v)‖` is sampled on random pairs;
/// for a linear operator it is pure rounding.
#[allow(clippy::too_many_arguments)]
pub fn check_assumptions(
    priors: &PriorSet,
    truth: &GridImage,
    u0: &GridImage,
    constants: &TheoryConstants,
    op: &dyn LinearOperator,
    operator_norm: f64,
    tau: f64,
    seed: u64,
) -> Result<AssumptionReport> {
    truth.check_geometry(u0, "truth vs initial guess")?;
    truth.check_geometry(priors.mean(), "truth vs priors")?;
    crate::operators::check_domain(op, truth.len(), "operator domain")?;

    let rho = constants.rho;
    let dist_truth_initial = truth.distance(u0);
    let dist_truth_mean = truth.distance(priors.mean());
    let dist_truth_gm = priors.geometric_mean().map(|g| truth.distance(g));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.domain_dim();
    let mut tcc_defect = 0.0_f64;
    for _ in 0..TCC_PAIRS {
        let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let fu = op.apply(&u);
        let fv = op.apply(&v);
        let lin = op.apply(&linalg::sub(&u, &v));
        let diff = linalg::sub(&fu, &fv);
        let defect = linalg::norm(&linalg::sub(&diff, &lin));
        let scale = linalg::norm(&diff);
        if scale > 0.0 {
            tcc_defect = tcc_defect.max(defect / scale);
        }
    }

    let e = constants.e();
    let tau_min = constants.tau_min().ok();
    Ok(AssumptionReport {
        rho,
        dist_truth_initial,
        dist_truth_mean,
        dist_truth_gm,
        truth_in_initial_ball: dist_truth_initial < rho,
        mean_within_rho: dist_truth_mean < rho,
        gm_within_rho: dist_truth_gm.map(|d| d < rho),
        operator_norm,
        lipschitz: constants.lipschitz,
        norm_within_lipschitz: operator_norm <= constants.lipschitz,
        tcc_defect,
        eta_zero_applies: tcc_defect <= TCC_ZERO_TOL,
        lambda_max_below_one: constants.lambda_max < 1.0,
        e,
        e_positive: e > 0.0,
        tau,
        tau_min,
        tau_admissible: tau_min.is_some_and(|t| tau > t),
        c_rho: constants.c_rho(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn c_rho_collapses_without_damping() {
        assert!((compute_c_rho(2.0, 3.0, 0.5, 0.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn c_rho_scalar_example() {
        // (0.5 + √1.75) / 1.5
        let expect = (0.5 + 1.75_f64.sqrt()) / 1.5;
        let got = compute_c_rho(1.0, 1.0, 1.0, 0.5).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 1.21525).abs() < 1e-5);
    }

    #[test]
    fn c_rho_increases_with_lipschitz() {
        let mut prev = 0.0;
        for i in 0..50 {
            let l = 0.05 * i as f64;
            let c = compute_c_rho(1.0, l, 0.4, 0.2).unwrap();
            assert!(c >= prev);
            if i > 0 {
                assert!(c > prev);
            }
            prev = c;
        }
    }

    #[test]
    fn c_rho_rejects_bad_inputs() {
        assert!(compute_c_rho(0.0, 1.0, 0.5, 0.1).is_err());
        assert!(compute_c_rho(1.0, 1.0, 0.0, 0.1).is_err());
        assert!(compute_c_rho(1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn e_examples() {
        assert!((compute_e(1.0, 0.0, 0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((compute_e(0.5, 0.1, 0.05, 0.3) - 1.37).abs() < 1e-12);
        assert!(compute_e(2.0_f64.sqrt(), 0.0, 0.0, 0.0).abs() < 1e-15);
    }

    #[test]
    fn tau_min_examples() {
        let t = compute_tau_min(0.05, 0.1, 1.37).unwrap();
        assert!((t - 2.0 * 0.95 * 1.1 / 1.37).abs() < 1e-12);
        assert!((t - 1.5255).abs() < 1e-4);
        assert!(compute_tau_min(1.0 - 1e-12, 0.0, 1.0).unwrap() < 1e-11);
        assert_eq!(
            compute_tau_min(0.1, 0.0, 0.0),
            Err(Error::HypothesisViolated("E must be positive"))
        );
    }

    #[test]
    fn d_examples() {
        assert!((compute_d(1.37, 0.05, 0.1, 2.0).unwrap() - 0.325).abs() < 1e-12);
        assert!((compute_d(1.37, 0.05, 0.1, 1e15).unwrap() - 1.37).abs() < 1e-12);
        let tm = compute_tau_min(0.05, 0.1, 1.37).unwrap();
        assert!(compute_d(1.37, 0.05, 0.1, tm).unwrap().abs() < 1e-14);
    }

    #[test]
    fn residual_sum_bound_examples() {
        let c = TheoryConstants::new(1.0, 0.5, 0.1, 0.3, 0.05).unwrap();
        assert!((c.d(2.0).unwrap() - 0.325).abs() < 1e-12);
        let b = residual_sum_bound(&c, 2.0, 0.5).unwrap();
        let expect = (1.0 / 0.325) * (1.0 + 2.0 * (1.0 + 0.25 / 0.09) * 0.5);
        assert!((b - expect).abs() < 1e-12);
        assert!((b - 14.70085).abs() < 1e-4);
        let empty = residual_sum_bound(&c, 2.0, 0.0).unwrap();
        assert!((empty - 1.0 / 0.325).abs() < 1e-12);
        assert!(residual_sum_bound(&c, 2.0, 0.6).unwrap() > b);
        assert!(residual_sum_bound(&c, 1.0, 0.5).is_err());
    }

    #[test]
    fn lipschitz_two_breaks_e() {
        for &eta in &[0.0, 0.2, 0.45] {
            for &lam in &[0.01, 0.5, 0.9] {
                for &kappa in &[0.01, 0.5, 0.99] {
                    assert!(compute_e(2.0, eta, lam, kappa) < 0.0);
                }
            }
        }
    }

    #[test]
    fn residual_sum_check_sides() {
        let c = TheoryConstants::new(1.0, 0.5, 0.0, 0.5, 0.1).unwrap();
        let r = vec![0.9, 0.5, 0.3, 0.1];
        let chk = check_residual_sum(&c, 2.0, 0.06, &r, &[0.1, 0.05, 0.025]).unwrap();
        assert_eq!(chk.stop_index, 3);
        assert!((chk.residual_sum - (0.81 + 0.25 + 0.09)).abs() < 1e-15);
        assert!(chk.lower_holds() && chk.upper_holds());
    }

    #[test]
    fn constants_validation() {
        assert!(TheoryConstants::new(1.0, 1.0, 0.5, 0.5, 0.1).is_err());
        assert!(TheoryConstants::new(1.0, 1.0, 0.0, 1.0, 0.1).is_err());
        assert!(TheoryConstants::new(1.0, 1.0, 0.0, 0.5, 0.0).is_err());
        assert!(TheoryConstants::new(-1.0, 1.0, 0.0, 0.5, 0.1).is_err());
    }
}

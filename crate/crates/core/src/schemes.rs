//! Iteration schemes and the discrepancy-principle driver.
//!
//! With `g_k = R*(R u_k − y^δ)` the schemes are
//!
//! | scheme        | update                                                  |
//! |---------------|---------------------------------------------------------|
//! | Landweber     | `u_k − ω g_k`                                           |
//! | IRLI          | `u_k − ω g_k − λ_k (u_k − u⁽⁰⁾)`                        |
//! | IRLI-revised  | `u_k − ω g_k − μ (u_k − u⁽ⁱ⁾)`, `i ≡ k mod n`           |
//! | GIRLI         | `(1 − λ_k) u_k − ω g_k + λ_k mean(u⁽ⁱ⁾)`               |
//! | GIRLI-adapt   | GIRLI over the priors within `tol` of `u_k`, `k > k0`   |
//! | GIRLI-GM      | `(1 − λ_k) u_k − ω g_k + λ_k gm(u⁽ⁱ⁾)`                 |
//! | DDIRLI        | `u_k − ω g_k − β_k A*(A u_k − y^δ)`, `β_k = C‖R u_k − y^δ‖²` |
//!
//! IRLI-revised damps the noisy iterate `u_k` (the same quantity as every
//! other scheme).

use alloc::vec::Vec;

use crate::linalg;
use crate::operators::{check_domain, check_range, LinearOperator};
use crate::priors::{prune_priors, PriorSet};
use crate::theory::TheoryConstants;
use crate::{Error, GridImage, Result, Sinogram};

/// Default step size `ω`.
pub const DEFAULT_OMEGA: f64 = 1e-2;
/// Default DDIRLI coefficient `C`.
pub const DEFAULT_DDIRLI_C: f64 = 77e-6;
/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
/// Default GIRLI-adapt pruning start.
pub const DEFAULT_ADAPT_K0: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Landweber,
    Irli,
    IrliRevised,
    Girli,
    GirliAdapt,
    GirliGm,
    Ddirli,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 7] = [
        SchemeKind::Landweber,
        SchemeKind::Irli,
        SchemeKind::IrliRevised,
        SchemeKind::Girli,
        SchemeKind::GirliAdapt,
        SchemeKind::GirliGm,
        SchemeKind::Ddirli,
    ];

    /// Acronym as used in result tables.
    pub fn acronym(self) -> &'static str {
        match self {
            SchemeKind::Landweber => "LANDWEBER",
            SchemeKind::Irli => "IRLI",
            SchemeKind::IrliRevised => "IRLI-revised",
            SchemeKind::Girli => "GIRLI",
            SchemeKind::GirliAdapt => "GIRLI-adapt",
            SchemeKind::GirliGm => "GIRLI-GM",
            SchemeKind::Ddirli => "DDIRLI",
        }
    }

    pub fn from_acronym(s: &str) -> Option<SchemeKind> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.acronym().eq_ignore_ascii_case(s))
    }

    pub fn uses_lambda(self) -> bool {
        matches!(
            self,
            SchemeKind::Irli | SchemeKind::Girli | SchemeKind::GirliAdapt | SchemeKind::GirliGm
        )
    }
}

/// Damping sequence `λ_k` with `0 < λ_k ≤ λ_max < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSequence {
    Constant {
        lambda0: f64,
    },
    /// `λ_0 · ratio^k` with `ratio ∈ (0, 1)`.
    Geometric {
        lambda0: f64,
        ratio: f64,
    },
}

impl LambdaSequence {
    pub fn constant(lambda0: f64) -> Result<Self> {
        check_lambda0(lambda0)?;
        Ok(LambdaSequence::Constant { lambda0 })
    }

    pub fn geometric(lambda0: f64, ratio: f64) -> Result<Self> {
        check_lambda0(lambda0)?;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::invalid("ratio", ratio, "must lie in (0, 1)"));
        }
        Ok(LambdaSequence::Geometric { lambda0, ratio })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LambdaSequence::Constant { lambda0 } => LambdaSequence::constant(lambda0).map(|_| ()),
            LambdaSequence::Geometric { lambda0, ratio } => {
                LambdaSequence::geometric(lambda0, ratio).map(|_| ())
            }
        }
    }

    /// `λ_k`.
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            LambdaSequence::Constant { lambda0 } => lambda0,
            LambdaSequence::Geometric { lambda0, ratio } => lambda0 * libm::pow(ratio, k as f64),
        }
    }

    pub fn lambda_max(&self) -> f64 {
        match *self {
            LambdaSequence::Constant { lambda0 } | LambdaSequence::Geometric { lambda0, .. } => {
                lambda0
            }
        }
    }

    /// Whether `Σ λ_k < ∞`.
    pub fn summable(&self) -> bool {
        matches!(self, LambdaSequence::Geometric { .. })
    }

    /// `Σ_{k<count} λ_k`.
    pub fn partial_sum(&self, count: usize) -> f64 {
        (0..count).map(|k| self.at(k)).sum()
    }
}

fn check_lambda0(lambda0: f64) -> Result<()> {
    if !(lambda0 > 0.0 && lambda0 < 1.0) {
        return Err(Error::invalid("lambda0", lambda0, "must lie in (0, 1)"));
    }
    Ok(())
}

/// `λ_k` for sequence `seq`.
pub fn make_lambda(seq: &LambdaSequence, k: usize) -> f64 {
    seq.at(k)
}

/// Discrepancy principle: stop at the first `k` with `‖R u_k − y^δ‖ ≤ τδ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub tau: f64,
    pub delta: f64,
}

impl StoppingRule {
    pub fn new(tau: f64, delta: f64) -> Result<Self> {
        let rule = StoppingRule { tau, delta };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 1.0) || !self.tau.is_finite() {
            return Err(Error::invalid("tau", self.tau, "must be finite and > 1"));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(
                "delta",
                self.delta,
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Also requires `τ > τ_min` for the given constants.
    pub fn validate_against(&self, constants: &TheoryConstants) -> Result<()> {
        self.validate()?;
        let tau_min = constants.tau_min()?;
        if !(self.tau > tau_min) {
            return Err(Error::invalid("tau", self.tau, "must exceed tau_min"));
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        self.tau * self.delta
    }

    pub fn satisfied(&self, residual: f64) -> bool {
        residual <= self.threshold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    /// Pruning runs at every `k > k0`.
    pub k0: usize,
    /// Priors at distance `>= tol` from the iterate are dropped.
    pub tol: f64,
}

/// Full parameterization of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub omega: f64,
    /// Required by IRLI, GIRLI, GIRLI-adapt and GIRLI-GM.
    pub lambda: Option<LambdaSequence>,
    /// IRLI-revised damping `μ`.
    pub mu: Option<f64>,
    /// DDIRLI coefficient `C`.
    pub ddirli_c: Option<f64>,
    /// Required by GIRLI-adapt, forbidden otherwise.
    pub adapt: Option<AdaptConfig>,
    pub stop: StoppingRule,
    pub max_iterations: usize,
}

impl SchemeConfig {
    fn base(kind: SchemeKind, omega: f64, stop: StoppingRule) -> Self {
        SchemeConfig {
            kind,
            omega,
            lambda: None,
            mu: None,
            ddirli_c: None,
            adapt: None,
            stop,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn landweber(omega: f64, stop: StoppingRule) -> Self {
        SchemeConfig::base(SchemeKind::Landweber, omega, stop)
    }

    pub fn irli(omega: f64, lambda: LambdaSequence, stop: StoppingRule) -> Self {
        SchemeConfig {
            lambda: Some(lambda),
            ..SchemeConfig::base(SchemeKind::Irli, omega, stop)
        }
    }

    pub fn irli_revised(omega: f64, mu: f64, stop: StoppingRule) -> Self {
        SchemeConfig {
            mu: Some(mu),
            ..SchemeConfig::base(SchemeKind::IrliRevised, omega, stop)
        }
    }

    pub fn girli(omega: f64, lambda: LambdaSequence, stop: StoppingRule) -> Self {
        SchemeConfig {
            lambda: Some(lambda),
            ..SchemeConfig::base(SchemeKind::Girli, omega, stop)
        }
    }

    pub fn girli_adapt(
        omega: f64,
        lambda: LambdaSequence,
        adapt: AdaptConfig,
        stop: StoppingRule,
    ) -> Self {
        SchemeConfig {
            lambda: Some(lambda),
            adapt: Some(adapt),
            ..SchemeConfig::base(SchemeKind::GirliAdapt, omega, stop)
        }
    }

    pub fn girli_gm(omega: f64, lambda: LambdaSequence, stop: StoppingRule) -> Self {
        SchemeConfig {
            lambda: Some(lambda),
            ..SchemeConfig::base(SchemeKind::GirliGm, omega, stop)
        }
    }

    pub fn ddirli(omega: f64, c: f64, stop: StoppingRule) -> Self {
        SchemeConfig {
            ddirli_c: Some(c),
            ..SchemeConfig::base(SchemeKind::Ddirli, omega, stop)
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid(
                "omega",
                self.omega,
                "must be finite and > 0",
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", 0.0, "must be at least 1"));
        }
        self.stop.validate()?;
        if self.kind.uses_lambda() {
            self.lambda
                .ok_or(Error::Empty("damping sequence required by this scheme"))?
                .validate()?;
        }
        match (self.kind, self.adapt) {
            (SchemeKind::GirliAdapt, None) => {
                return Err(Error::Empty("GIRLI-adapt requires an adapt configuration"))
            }
            (SchemeKind::GirliAdapt, Some(a)) if !(a.tol > 0.0) => {
                return Err(Error::invalid("tol", a.tol, "must be positive"))
            }
            (SchemeKind::GirliAdapt, Some(_)) | (_, None) => {}
            (_, Some(_)) => {
                return Err(Error::invalid(
                    "adapt",
                    f64::NAN,
                    "only GIRLI-adapt accepts an adapt configuration",
                ))
            }
        }
        if self.kind == SchemeKind::IrliRevised {
            let mu = self.mu.ok_or(Error::Empty("IRLI-revised requires mu"))?;
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(Error::invalid("mu", mu, "must be finite and > 0"));
            }
        }
        if self.kind == SchemeKind::Ddirli {
            let c = self.ddirli_c.ok_or(Error::Empty("DDIRLI requires C"))?;
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::invalid("C", c, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// `Some(ω‖R‖²)` when it exceeds 1, the classical Landweber safety bound.
    pub fn step_size_warning(&self, operator_norm: f64) -> Option<f64> {
        let v = self.omega * operator_norm * operator_norm;
        (v > 1.0).then_some(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Discrepancy,
    MaxIter,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Discrepancy => "DISCREPANCY",
            StopReason::MaxIter => "MAX_ITER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub residual_norm: f64,
    pub error_norm: Option<f64>,
    pub active_prior_count: Option<usize>,
    /// Seconds since the start of the run, per the run's clock.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub stop_index: usize,
    pub stop_reason: StopReason,
    /// The empty-prune guard fired at least once (GIRLI-adapt).
    pub prune_guard_triggered: bool,
    /// Final activity mask of the prior set (GIRLI-adapt).
    pub final_active: Option<Vec<bool>>,
}

impl IterationTrace {
    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual_norm).collect()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual_norm)
    }
}

/// Source of elapsed time for trace records.
pub trait Clock {
    fn elapsed_secs(&self) -> f64;
}

/// A clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_secs(&self) -> f64 {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Update kernels. Every public step and the run engine go through these, so
// degenerate parameter choices reduce bitwise to Landweber.

fn landweber_update(u: &[f64], g: &[f64], omega: f64) -> Vec<f64> {
    u.iter().zip(g).map(|(&x, &gi)| x - omega * gi).collect()
}

fn girli_update(u: &[f64], g: &[f64], omega: f64, lambda: f64, prior: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(g)
        .zip(prior)
        .map(|((&x, &gi), &p)| (1.0 - lambda) * x - omega * gi + lambda * p)
        .collect()
}

fn anchored_update(u: &[f64], g: &[f64], omega: f64, lambda: f64, anchor: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(g)
        .zip(anchor)
        .map(|((&x, &gi), &a)| x - omega * gi - lambda * (x - a))
        .collect()
}

fn ddirli_update(u: &[f64], g: &[f64], omega: f64, beta: f64, h: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(g)
        .zip(h)
        .map(|((&x, &gi), &hi)| x - omega * gi - beta * hi)
        .collect()
}

/// `(R u − y, R*(R u − y))`.
fn residual_and_gradient(op: &dyn LinearOperator, u: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut r = op.apply(u);
    r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
    let g = op.apply_adjoint(&r);
    (r, g)
}

fn check_problem(op: &dyn LinearOperator, u: &GridImage, y: &Sinogram) -> Result<()> {
    check_domain(op, u.len(), "iterate vs operator domain")?;
    check_range(op, y.len(), "data vs operator range")
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::invalid("omega", omega, "must be finite and >= 0"));
    }
    Ok(())
}

fn check_damping(name: &'static str, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(name, lambda, "must lie in (0, 1)"));
    }
    Ok(())
}

/// One Landweber step `u_k − ω R*(R u_k − y^δ)`.
pub fn step_landweber(
    u_k: &GridImage,
    op: &dyn LinearOperator,
    y_d: &Sinogram,
    omega: f64,
) -> Result<GridImage> {
    check_problem(op, u_k, y_d)?;
    check_omega(omega)?;
    let (_, g) = residual_and_gradient(op, u_k.values(), y_d.values());
    u_k.with_values(landweber_update(u_k.values(), &g, omega))
}

/// One GIRLI step `(1 − λ_k) u_k − ω R*(R u_k − y^δ) + λ_k · prior_mean`.
pub fn step_girli(
    u_k: &GridImage,
    op: &dyn LinearOperator,
    y_d: &Sinogram,
    omega: f64,
    lambda_k: f64,
    prior_mean: &GridImage,
) -> Result<GridImage> {
    check_problem(op, u_k, y_d)?;
    check_omega(omega)?;
    check_damping("lambda_k", lambda_k)?;
    u_k.check_geometry(prior_mean, "prior mean")?;
    let (_, g) = residual_and_gradient(op, u_k.values(), y_d.values());
    u_k.with_values(girli_update(
        u_k.values(),
        &g,
        omega,
        lambda_k,
        prior_mean.values(),
    ))
}

/// One GIRLI-GM step; identical to [`step_girli`] with the pixelwise
/// geometric mean of the priors as the stabilizing image.
pub fn step_girli_gm(
    u_k: &GridImage,
    op: &dyn LinearOperator,
    y_d: &Sinogram,
    omega: f64,
    lambda_k: f64,
    prior_gm: &GridImage,
) -> Result<GridImage> {
    step_girli(u_k, op, y_d, omega, lambda_k, prior_gm)
}

/// One IRLI step `u_k − ω R*(R u_k − y^δ) − λ_k (u_k − u⁽⁰⁾)`.
pub fn step_irli(
    u_k: &GridImage,
    op: &dyn LinearOperator,
    y_d: &Sinogram,
    omega: f64,
    lambda_k: f64,
    u0_ref: &GridImage,
) -> Result<GridImage> {
    check_problem(op, u_k, y_d)?;
    check_omega(omega)?;
    check_damping("lambda_k", lambda_k)?;
    u_k.check_geometry(u0_ref, "IRLI anchor")?;
    let (_, g) = residual_and_gradient(op, u_k.values(), y_d.values());
    u_k.with_values(anchored_update(
        u_k.values(),
        &g,
        omega,
        lambda_k,
        u0_ref.values(),
    ))
}

/// One IRLI-revised step `u_k − ω R*(R u_k − y^δ) − μ_k (u_k − u⁽ⁱ⁾)`; the
/// caller selects `prior_i` with `i ≡ k mod n` (see [`revised_prior_index`]).
pub fn step_irli_revised(
    u_k: &GridImage,
    op: &dyn LinearOperator,
    y_d: &Sinogram,
    omega: f64,
    mu_k: f64,
    prior_i: &GridImage,
) -> Result<GridImage> {
    check_problem(op, u_k, y_d)?;
    check_omega(omega)?;
    if !(mu_k > 0.0) || !mu_k.is_finite() {
        return Err(Error::invalid("mu_k", mu_k, "must be finite and > 0"));
    }
    u_k.check_geometry(prior_i, "IRLI-revised prior")?;
    let (_, g) = residual_and_gradient(op, u_k.values(), y_d.values());
    u_k.with_values(anchored_update(
        u_k.values(),
        &g,
        omega,
        mu_k,
        prior_i.values(),
    ))
}

/// Index of the prior used by IRLI-revised at iteration `k` among `n` priors.
pub fn revised_prior_index(k: usize, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Empty("prior set"));
    }
    Ok(k % n)
}

/// One DDIRLI step
/// `u_k − ω R*(R u_k − y^δ) − β_k A*(A u_k − y^δ)` with
/// `β_k = C ‖R u_k − y^δ‖²`.
pub fn step_ddirli(
    u_k: &GridImage,
    op: &dyn LinearOperator,
    y_d: &Sinogram,
    omega: f64,
    a_op: &dyn LinearOperator,
    c_coef: f64,
) -> Result<GridImage> {
    check_problem(op, u_k, y_d)?;
    check_omega(omega)?;
    check_handcrafted(op, a_op)?;
    if !(c_coef >= 0.0) || !c_coef.is_finite() {
        return Err(Error::invalid("C", c_coef, "must be finite and >= 0"));
    }
    let (r, g) = residual_and_gradient(op, u_k.values(), y_d.values());
    let beta = c_coef * linalg::dot(&r, &r);
    let (_, h) = residual_and_gradient(a_op, u_k.values(), y_d.values());
    u_k.with_values(ddirli_update(u_k.values(), &g, omega, beta, &h))
}

fn check_handcrafted(op: &dyn LinearOperator, a_op: &dyn LinearOperator) -> Result<()> {
    if op.domain_dim() != a_op.domain_dim() || op.range_dim() != a_op.range_dim() {
        return Err(Error::GeometryMismatch(alloc::format!(
            "handcrafted operator is {}x{}, forward operator is {}x{}",
            a_op.range_dim(),
            a_op.domain_dim(),
            op.range_dim(),
            op.domain_dim()
        )));
    }
    Ok(())
}

/// Everything a run reads besides its configuration.
#[derive(Clone, Copy)]
pub struct SchemeInputs<'a> {
    pub op: &'a dyn LinearOperator,
    pub data: &'a Sinogram,
    /// `u_0`. IRLI also uses it as its anchor `u⁽⁰⁾`.
    pub initial: &'a GridImage,
    /// Required by IRLI-revised and the GIRLI family.
    pub priors: Option<&'a PriorSet>,
    /// The handcrafted operator `A`, required by DDIRLI.
    pub handcrafted: Option<&'a dyn LinearOperator>,
    /// Ground truth for error tracking.
    pub truth: Option<&'a GridImage>,
}

impl<'a> SchemeInputs<'a> {
    pub fn new(op: &'a dyn LinearOperator, data: &'a Sinogram, initial: &'a GridImage) -> Self {
        SchemeInputs {
            op,
            data,
            initial,
            priors: None,
            handcrafted: None,
            truth: None,
        }
    }

    pub fn with_priors(mut self, priors: &'a PriorSet) -> Self {
        self.priors = Some(priors);
        self
    }

    pub fn with_handcrafted(mut self, a: &'a dyn LinearOperator) -> Self {
        self.handcrafted = Some(a);
        self
    }

    pub fn with_truth(mut self, truth: &'a GridImage) -> Self {
        self.truth = Some(truth);
        self
    }
}

#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub reconstruction: GridImage,
    pub trace: IterationTrace,
}

/// Runs one scheme with the discrepancy principle, without timing.
pub fn run_scheme(config: &SchemeConfig, inputs: &SchemeInputs<'_>) -> Result<SchemeOutcome> {
    run_scheme_with_clock(config, inputs, &NoClock)
}

/// Runs one scheme until `‖R u_k − y^δ‖ ≤ τδ` (checked before each step, so
/// `k* = 0` is possible) or until `k = max_iterations − 1`.
///
/// GIRLI-adapt prunes its prior set against `u_k` at every `k > k0`, before
/// the stopping check, and steps with the mean of the survivors.
pub fn run_scheme_with_clock(
    config: &SchemeConfig,
    inputs: &SchemeInputs<'_>,
    clock: &dyn Clock,
) -> Result<SchemeOutcome> {
    config.validate()?;
    let op = inputs.op;
    let y = inputs.data.values();
    check_problem(op, inputs.initial, inputs.data)?;
    if let Some(t) = inputs.truth {
        inputs.initial.check_geometry(t, "truth")?;
    }

    let needs_priors = matches!(
        config.kind,
        SchemeKind::IrliRevised | SchemeKind::Girli | SchemeKind::GirliAdapt | SchemeKind::GirliGm
    );
    let priors = match inputs.priors {
        Some(p) => {
            inputs.initial.check_geometry(p.mean(), "prior images")?;
            Some(p)
        }
        None if needs_priors => return Err(Error::Empty("this scheme requires a prior set")),
        None => None,
    };
    let mut adapt_set = match config.kind {
        SchemeKind::GirliAdapt => priors.cloned(),
        _ => None,
    };
    let gm = match config.kind {
        SchemeKind::GirliGm => Some(
            priors
                .and_then(|p| p.geometric_mean())
                .ok_or(Error::Empty(
                    "geometric mean unavailable (negative prior pixels)",
                ))?
                .clone(),
        ),
        _ => None,
    };
    let handcrafted = match config.kind {
        SchemeKind::Ddirli => {
            let a = inputs
                .handcrafted
                .ok_or(Error::Empty("DDIRLI requires a handcrafted operator"))?;
            check_handcrafted(op, a)?;
            Some(a)
        }
        _ => None,
    };
    // Active images for IRLI-revised, in index order.
    let revised: Vec<&GridImage> = match (config.kind, priors) {
        (SchemeKind::IrliRevised, Some(p)) => p.active_indices().map(|i| &p.images()[i]).collect(),
        _ => Vec::new(),
    };
    if config.kind == SchemeKind::IrliRevised && revised.is_empty() {
        return Err(Error::Empty("prior set"));
    }

    let omega = config.omega;
    let anchor = inputs.initial.values().to_vec();
    let mut u = inputs.initial.values().to_vec();
    let mut records = Vec::new();
    let mut guard = false;
    let mut k = 0usize;
    let stop_reason = loop {
        let (r, g) = residual_and_gradient(op, &u, y);
        let residual_norm = linalg::norm(&r);

        if let (Some(set), Some(a)) = (adapt_set.as_mut(), config.adapt) {
            if k > a.k0 {
                let current = inputs.initial.with_values(u.clone())?;
                guard |= prune_priors(set, &current, a.tol)?.kept_nearest;
            }
        }

        records.push(IterationRecord {
            k,
            residual_norm,
            error_norm: inputs.truth.map(|t| linalg::distance(&u, t.values())),
            active_prior_count: adapt_set.as_ref().map(|s| s.active_count()),
            wall_time: clock.elapsed_secs(),
        });

        if config.stop.satisfied(residual_norm) {
            break StopReason::Discrepancy;
        }
        if k + 1 >= config.max_iterations {
            break StopReason::MaxIter;
        }

        u = match config.kind {
            SchemeKind::Landweber => landweber_update(&u, &g, omega),
            SchemeKind::Irli => {
                let lam = config.lambda.expect("validated").at(k);
                anchored_update(&u, &g, omega, lam, &anchor)
            }
            SchemeKind::IrliRevised => {
                let prior = revised[k % revised.len()];
                anchored_update(&u, &g, omega, config.mu.expect("validated"), prior.values())
            }
            SchemeKind::Girli => {
                let lam = config.lambda.expect("validated").at(k);
                let mean = priors.expect("checked").mean();
                girli_update(&u, &g, omega, lam, mean.values())
            }
            SchemeKind::GirliAdapt => {
                let lam = config.lambda.expect("validated").at(k);
                let mean = adapt_set.as_ref().expect("cloned").mean();
                girli_update(&u, &g, omega, lam, mean.values())
            }
            SchemeKind::GirliGm => {
                let lam = config.lambda.expect("validated").at(k);
                girli_update(&u, &g, omega, lam, gm.as_ref().expect("checked").values())
            }
            SchemeKind::Ddirli => {
                let beta = config.ddirli_c.expect("validated") * residual_norm * residual_norm;
                let (_, h) = residual_and_gradient(handcrafted.expect("checked"), &u, y);
                ddirli_update(&u, &g, omega, beta, &h)
            }
        };
        k += 1;
    };

    Ok(SchemeOutcome {
        reconstruction: inputs.initial.with_values(u)?,
        trace: IterationTrace {
            stop_index: k,
            stop_reason,
            records,
            prune_guard_triggered: guard,
            final_active: adapt_set.map(|s| s.active_mask().to_vec()),
        },
    })
}

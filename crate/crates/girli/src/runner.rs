//! Wires data, operator, priors and schemes into one experiment.

use std::time::Instant;

use girli_core::data::{
    add_noise_masked, generate_phantoms, relative_error, DataSource, Dataset, NoiseSpec,
};
use girli_core::operators::{
    default_angles, default_bins, estimate_operator_norm, LinearOperator, MaskedOperator,
    RadonGeometry, RadonTransform, ScaledOperator,
};
use girli_core::priors::{build_handcrafted_operator, PriorSet, DEFAULT_SVD_REL_TOL};
use girli_core::schemes::{
    run_scheme_with_clock, Clock, IterationTrace, SchemeConfig, SchemeInputs, SchemeKind,
    StoppingRule,
};
use girli_core::theory::{check_assumptions, AssumptionReport, TheoryConstants, LIPSCHITZ_SAFETY};
use girli_core::{GridImage, Sinogram};

use crate::config::{Coefficient, DatasetConfig, ExperimentConfig, InitialGuessMode, SchemeSpec};
use crate::error::{Result, RunError};
use crate::io;

/// Damping assumed by the hypothesis check for schemes without `λ`.
const FALLBACK_LAMBDA_MAX: f64 = 0.01;

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: String,
    pub sigma2: f64,
    pub delta: f64,
    pub tau: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub rel_error_l2: f64,
    pub stop_reason: String,
    pub assumption_report: Option<AssumptionReport>,
}

/// Everything one scheme produced.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub label: String,
    pub kind: SchemeKind,
    pub config: SchemeConfig,
    pub initial: GridImage,
    pub reconstruction: GridImage,
    pub trace: IterationTrace,
    pub record: RunRecord,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SchemeFailure {
    pub label: String,
    pub error: String,
}

/// The shared inputs and per-scheme results of one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub truth: GridImage,
    pub target_label: Option<u8>,
    pub priors: PriorSet,
    pub clean: Sinogram,
    pub data: Sinogram,
    pub delta: f64,
    /// Observed detector samples (all `true` without an angle window).
    pub observed: Vec<bool>,
    pub operator_norm: f64,
    pub runs: Vec<SchemeRun>,
    pub failures: Vec<SchemeFailure>,
    pub warnings: Vec<String>,
}

impl Experiment {
    pub fn records(&self) -> Vec<RunRecord> {
        self.runs.iter().map(|r| r.record.clone()).collect()
    }

    pub fn run(&self, label: &str) -> Option<&SchemeRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub fn load_dataset(config: &DatasetConfig) -> Result<Dataset> {
    let dataset = match config {
        DatasetConfig::Phantom(p) => generate_phantoms(&p.spec(), p.seed)?,
        DatasetConfig::Idx(idx) => {
            let mut train = io::read_idx_images(&idx.train_images)?;
            let mut train_labels = io::read_idx_labels(&idx.train_labels)?;
            let mut validation = io::read_idx_images(&idx.validation_images)?;
            let mut validation_labels = io::read_idx_labels(&idx.validation_labels)?;
            if let Some(n) = idx.max_train {
                train.truncate(n);
                train_labels.truncate(n);
            }
            if let Some(n) = idx.max_validation {
                validation.truncate(n);
                validation_labels.truncate(n);
            }
            Dataset {
                train,
                train_labels,
                validation,
                validation_labels,
                source: DataSource::Idx {
                    images: idx.train_images.display().to_string(),
                    labels: Some(idx.train_labels.display().to_string()),
                },
            }
        }
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Index (into `dataset.validation`) of the configured target.
pub fn target_index(config: &ExperimentConfig, dataset: &Dataset) -> Result<usize> {
    let t = &config.target;
    let candidates: Vec<usize> = match t.class {
        Some(c) => dataset.validation_of_class(c).map(|(i, _)| i).collect(),
        None => (0..dataset.validation.len()).collect(),
    };
    candidates.get(t.index).copied().ok_or_else(|| {
        RunError::Config(format!(
            "target index {} out of range ({} candidates)",
            t.index,
            candidates.len()
        ))
    })
}

/// Training images used as priors.
pub fn select_priors(config: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<GridImage>> {
    let p = &config.priors;
    let mut images: Vec<GridImage> = match p.class {
        Some(c) => dataset
            .train_of_class(c)
            .map(|(_, img)| img.clone())
            .collect(),
        None => dataset.train.clone(),
    };
    if let Some(n) = p.count {
        if images.len() < n {
            return Err(RunError::Config(format!(
                "{n} priors requested, only {} available",
                images.len()
            )));
        }
        images.truncate(n);
    }
    if images.is_empty() {
        return Err(RunError::Config("prior set is empty".into()));
    }
    Ok(images)
}

/// Initial guess `u_0` for a scheme.
///
/// LANDWEBER, IRLI and IRLI-revised start from a validation image of the
/// target's class other than the target; DDIRLI from zero; GIRLI and
/// GIRLI-adapt from the prior mean; GIRLI-GM from the prior geometric mean.
/// [`InitialGuessMode::Shared`] gives every scheme the same-class image.
/// Without a same-class candidate the prior mean is used and a warning is
/// returned.
pub fn select_initial_guess(
    kind: SchemeKind,
    mode: InitialGuessMode,
    priors: &PriorSet,
    dataset: &Dataset,
    target: usize,
) -> Result<(GridImage, Option<String>)> {
    let same_class = || {
        let label = dataset.validation_labels[target];
        match dataset
            .validation_of_class(label)
            .find(|&(i, img)| i != target && img != &dataset.validation[target])
        {
            Some((_, img)) => (img.clone(), None),
            None => (
                priors.mean().clone(),
                Some(format!(
                    "no other validation image of class {label}; using the prior mean"
                )),
            ),
        }
    };
    if mode == InitialGuessMode::Shared {
        return Ok(same_class());
    }
    Ok(match kind {
        SchemeKind::Landweber | SchemeKind::Irli | SchemeKind::IrliRevised => same_class(),
        SchemeKind::Ddirli => (GridImage::zeros(priors.width(), priors.height()), None),
        SchemeKind::Girli | SchemeKind::GirliAdapt => (priors.mean().clone(), None),
        SchemeKind::GirliGm => (
            priors
                .geometric_mean()
                .ok_or(girli_core::Error::Empty("geometric mean of the priors"))?
                .clone(),
            None,
        ),
    })
}

/// Slack for angles that land on a window edge after the radian round trip.
const WINDOW_EDGE_TOL_DEG: f64 = 1e-9;

/// Samples whose angle lies in `[lo, hi)` degrees.
pub fn window_mask(angles: &[f64], bins: usize, window_deg: Option<[f64; 2]>) -> Vec<bool> {
    angles
        .iter()
        .flat_map(|&theta| {
            let d = theta.to_degrees();
            let keep = window_deg.is_none_or(|[lo, hi]| {
                d >= lo - WINDOW_EDGE_TOL_DEG && d < hi - WINDOW_EDGE_TOL_DEG
            });
            std::iter::repeat_n(keep, bins)
        })
        .collect()
}

/// Runs every configured scheme on one shared noisy data set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let dataset = load_dataset(&config.dataset)?;
    let target = target_index(config, &dataset)?;
    let truth = dataset.validation[target].clone();
    let priors = PriorSet::new(select_priors(config, &dataset)?)?;
    let (w, h) = (truth.width(), truth.height());

    let angles = default_angles(config.geometry.angles);
    let bins = config.geometry.bins.unwrap_or_else(|| default_bins(w, h));
    let radon = RadonTransform::new(RadonGeometry::new(w, h, angles.clone(), bins)?);
    let observed = window_mask(&angles, bins, config.geometry.window_deg);
    let op = MaskedOperator::new(radon, observed.clone())?;
    let op: &dyn LinearOperator = &op;

    let clean = Sinogram::new(angles, bins, op.apply(truth.values()))?;
    let noise = NoiseSpec::new(config.noise.sigma2, config.noise.seed)?;
    let (data, delta) = add_noise_masked(&clean, noise, Some(&observed))?;
    let operator_norm = estimate_operator_norm(op, config.norm_iterations, 0)?.value;

    let mut experiment = Experiment {
        config: config.clone(),
        truth,
        target_label: dataset.validation_labels.get(target).copied(),
        priors,
        clean,
        data,
        delta,
        observed,
        operator_norm,
        runs: Vec::new(),
        failures: Vec::new(),
        warnings: Vec::new(),
    };
    if let DataSource::Idx { .. } = dataset.source {
        if config.priors.class.is_none() && config.priors.count.is_none() {
            experiment
                .warnings
                .push("using every training image as a prior".into());
        }
    }

    for spec in &config.schemes {
        match run_one(config, spec, &experiment, &dataset, target, op) {
            Ok(run) => experiment.runs.push(run),
            Err(e) => experiment.failures.push(SchemeFailure {
                label: spec.label().to_string(),
                error: e.to_string(),
            }),
        }
    }
    Ok(experiment)
}

fn scheme_error(spec: &SchemeSpec) -> impl Fn(girli_core::Error) -> RunError + '_ {
    move |source| RunError::Scheme {
        method: spec.label().to_string(),
        source,
    }
}

fn run_one(
    config: &ExperimentConfig,
    spec: &SchemeSpec,
    ex: &Experiment,
    dataset: &Dataset,
    target: usize,
    op: &dyn LinearOperator,
) -> Result<SchemeRun> {
    let err = scheme_error(spec);
    let kind = spec.kind()?;
    let mut warnings = Vec::new();
    let (initial, warning) =
        select_initial_guess(kind, config.initial_guess, &ex.priors, dataset, target)?;
    warnings.extend(warning);

    let omega = match spec.omega {
        Coefficient::Absolute(v) => v,
        Coefficient::Relative(f) => f / (ex.operator_norm * ex.operator_norm),
    };
    let stop = StoppingRule::new(spec.tau, ex.delta).map_err(&err)?;
    let lambda = spec
        .lambda
        .map(|l| l.sequence())
        .transpose()
        .map_err(&err)?;
    let max_iterations = spec.max_iterations.unwrap_or(config.max_iterations);

    let clock = WallClock(Instant::now());
    let mut handcrafted = None;
    let mut ddirli_c = None;
    if kind == SchemeKind::Ddirli {
        let sinograms = ex
            .priors
            .images()
            .iter()
            .map(|img| ex.data.with_values(op.apply(img.values())))
            .collect::<girli_core::Result<Vec<_>>>()
            .map_err(&err)?;
        let set = PriorSet::with_sinograms(ex.priors.images().to_vec(), sinograms).map_err(&err)?;
        let a = build_handcrafted_operator(&set, DEFAULT_SVD_REL_TOL).map_err(&err)?;
        ddirli_c = Some(match spec.c_or_default() {
            Coefficient::Absolute(c) => c,
            Coefficient::Relative(g) => {
                let a_norm = estimate_operator_norm(&a, config.norm_iterations, 0)
                    .map_err(&err)?
                    .value;
                let mut r = op.apply(initial.values());
                r.iter_mut()
                    .zip(ex.data.values())
                    .for_each(|(ri, yi)| *ri -= yi);
                let r2: f64 = r.iter().map(|v| v * v).sum();
                if !(a_norm > 0.0 && r2 > 0.0) {
                    return Err(RunError::Config(format!(
                        "{}: relative C needs a nonzero handcrafted operator and initial residual",
                        spec.label()
                    )));
                }
                g / (a_norm * a_norm * r2)
            }
        });
        handcrafted = Some(a);
    }

    let scheme = SchemeConfig {
        kind,
        omega,
        lambda,
        mu: spec.mu,
        ddirli_c,
        adapt: spec.adapt.map(Into::into),
        stop,
        max_iterations,
    };
    if let Some(v) = scheme.step_size_warning(ex.operator_norm) {
        warnings.push(format!("omega * |R|^2 = {v:.4} exceeds 1"));
    }

    let mut inputs = SchemeInputs::new(op, &ex.data, &initial)
        .with_priors(&ex.priors)
        .with_truth(&ex.truth);
    if let Some(a) = &handcrafted {
        inputs = inputs.with_handcrafted(a);
    }
    let outcome = run_scheme_with_clock(&scheme, &inputs, &clock).map_err(&err)?;
    let wall_time_s = clock.elapsed_secs();
    if outcome.trace.prune_guard_triggered {
        warnings.push("every prior failed the tolerance; kept the nearest".into());
    }

    let assumption_report = match assumption_report(config, ex, &scheme, &initial, op) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("assumption check skipped: {e}"));
            None
        }
    };

    let record = RunRecord {
        method: spec.label().to_string(),
        sigma2: config.noise.sigma2,
        delta: ex.delta,
        tau: spec.tau,
        iterations: outcome.trace.stop_index,
        wall_time_s,
        rel_error_l2: relative_error(&ex.truth, &outcome.reconstruction).map_err(&err)?,
        stop_reason: outcome.trace.stop_reason.as_str().to_string(),
        assumption_report,
    };
    Ok(SchemeRun {
        label: spec.label().to_string(),
        kind,
        config: scheme,
        initial,
        reconstruction: outcome.reconstruction,
        trace: outcome.trace,
        record,
        warnings,
    })
}

/// Checks the convergence hypotheses for the unit-step operator `√ω R`.
fn assumption_report(
    config: &ExperimentConfig,
    ex: &Experiment,
    scheme: &SchemeConfig,
    initial: &GridImage,
    op: &dyn LinearOperator,
) -> girli_core::Result<AssumptionReport> {
    let sqrt_omega = scheme.omega.sqrt();
    let scaled_norm = sqrt_omega * ex.operator_norm;
    let lambda_max = config
        .theory
        .lambda_max
        .or(scheme.lambda.map(|l| l.lambda_max()))
        .unwrap_or(FALLBACK_LAMBDA_MAX);
    let rho = config
        .theory
        .rho
        .unwrap_or_else(|| 1.1 * ex.truth.distance(initial))
        .max(f64::MIN_POSITIVE);
    let constants = TheoryConstants::new(
        rho,
        LIPSCHITZ_SAFETY * scaled_norm,
        0.0,
        config.theory.kappa,
        lambda_max,
    )?;
    let scaled = ScaledOperator::new(op, sqrt_omega);
    check_assumptions(
        &ex.priors,
        &ex.truth,
        initial,
        &constants,
        &scaled,
        scaled_norm,
        scheme.stop.tau,
        config.noise.seed,
    )
}

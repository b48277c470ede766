//! Experiment configuration, read from JSON.

use std::fs;
use std::path::{Path, PathBuf};

use girli_core::data::PhantomSpec;
use girli_core::schemes::{
    AdaptConfig, LambdaSequence, SchemeKind, DEFAULT_DDIRLI_C, DEFAULT_MAX_ITERATIONS,
    DEFAULT_OMEGA,
};
use girli_core::theory::DEFAULT_KAPPA;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RunError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub theory: TheoryConfig,
    #[serde(default)]
    pub initial_guess: InitialGuessMode,
    pub schemes: Vec<SchemeSpec>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Power iterations used to estimate operator norms.
    #[serde(default = "default_norm_iterations")]
    pub norm_iterations: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}

fn default_norm_iterations() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Phantom(PhantomConfig),
    Idx(IdxConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomConfig {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<u8>,
    pub train_per_class: usize,
    pub validation_per_class: usize,
    pub seed: u64,
    #[serde(default)]
    pub max_rotation: Option<f64>,
    #[serde(default)]
    pub scale_jitter: Option<f64>,
    #[serde(default)]
    pub max_shear: Option<f64>,
    #[serde(default)]
    pub max_shift: Option<f64>,
    #[serde(default)]
    pub stroke_width: Option<f64>,
}

impl PhantomConfig {
    pub fn spec(&self) -> PhantomSpec {
        let mut spec = PhantomSpec::new(self.width, self.height, self.classes.clone());
        spec.train_per_class = self.train_per_class;
        spec.validation_per_class = self.validation_per_class;
        let set = |field: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *field = v;
            }
        };
        set(&mut spec.max_rotation, self.max_rotation);
        set(&mut spec.scale_jitter, self.scale_jitter);
        set(&mut spec.max_shear, self.max_shear);
        set(&mut spec.max_shift, self.max_shift);
        set(&mut spec.stroke_width, self.stroke_width);
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub validation_images: PathBuf,
    pub validation_labels: PathBuf,
    /// Keep only the first `max_train` training images.
    #[serde(default)]
    pub max_train: Option<usize>,
    #[serde(default)]
    pub max_validation: Option<usize>,
}

/// The reconstruction target: the `index`-th validation image (of `class`,
/// when given).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default)]
    pub class: Option<u8>,
    #[serde(default)]
    pub index: usize,
}

/// The prior set: the first `count` training images (of `class`, when given).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default)]
    pub class: Option<u8>,
    #[serde(default)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Number of equally spaced angles in `[0, π)`.
    pub angles: usize,
    /// Detector bins per angle; defaults to `ceil(√2 · max(width, height))`.
    #[serde(default)]
    pub bins: Option<usize>,
    /// Observed angular window `[lo, hi)` in degrees; other angles are
    /// unobserved.
    #[serde(default)]
    pub window_deg: Option<[f64; 2]>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            angles: 180,
            bins: None,
            window_deg: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma2: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    /// Defaults to `1.1 ‖u† − u_0‖`.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Defaults to the scheme's `λ_0` (or 0.01 for schemes without damping).
    #[serde(default)]
    pub lambda_max: Option<f64>,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            rho: None,
            kappa: DEFAULT_KAPPA,
            lambda_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuessMode {
    /// Each scheme uses its own customary initial guess.
    #[default]
    PerScheme,
    /// Every scheme starts from the same validation image of the target's
    /// class.
    Shared,
}

/// A step or coefficient, either absolute or relative to an operator scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Absolute(f64),
    /// For `omega`: `f / ‖R‖²`. For `c`: `g / (‖A‖² ‖R u_0 − y^δ‖²)`, so
    /// that `β_0 ‖A‖² = g`.
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpec {
    Constant(f64),
    Geometric { lambda0: f64, ratio: f64 },
}

impl LambdaSpec {
    pub fn sequence(&self) -> girli_core::Result<LambdaSequence> {
        match *self {
            LambdaSpec::Constant(l) => LambdaSequence::constant(l),
            LambdaSpec::Geometric { lambda0, ratio } => LambdaSequence::geometric(lambda0, ratio),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptSpec {
    pub k0: usize,
    pub tol: f64,
}

impl From<AdaptSpec> for AdaptConfig {
    fn from(a: AdaptSpec) -> Self {
        AdaptConfig {
            k0: a.k0,
            tol: a.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    /// One of LANDWEBER, IRLI, IRLI-revised, GIRLI, GIRLI-adapt, GIRLI-GM,
    /// DDIRLI.
    pub method: String,
    /// Row name in the outputs; defaults to `method`.
    #[serde(default)]
    pub label: Option<String>,
    pub tau: f64,
    #[serde(default = "default_omega")]
    pub omega: Coefficient,
    #[serde(default)]
    pub lambda: Option<LambdaSpec>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub c: Option<Coefficient>,
    #[serde(default)]
    pub adapt: Option<AdaptSpec>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

fn default_omega() -> Coefficient {
    Coefficient::Absolute(DEFAULT_OMEGA)
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, tau: f64) -> Self {
        SchemeSpec {
            method: kind.acronym().to_string(),
            label: None,
            tau,
            omega: default_omega(),
            lambda: None,
            mu: None,
            c: None,
            adapt: None,
            max_iterations: None,
        }
    }

    pub fn kind(&self) -> Result<SchemeKind> {
        SchemeKind::from_acronym(&self.method)
            .ok_or_else(|| RunError::Config(format!("unknown method `{}`", self.method)))
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.method)
    }

    /// `C`, defaulting to the absolute value `77e-6`.
    pub fn c_or_default(&self) -> Coefficient {
        self.c.unwrap_or(Coefficient::Absolute(DEFAULT_DDIRLI_C))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let config = ExperimentConfig::from_json(&text).map_err(|source| RunError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RunError::Config(msg));
        match &self.dataset {
            DatasetConfig::Phantom(p) => p.spec().validate()?,
            DatasetConfig::Idx(idx) => {
                for path in [
                    &idx.train_images,
                    &idx.train_labels,
                    &idx.validation_images,
                    &idx.validation_labels,
                ] {
                    if !path.is_file() {
                        return bad(format!("dataset file {} does not exist", path.display()));
                    }
                }
            }
        }
        if self.geometry.angles == 0 {
            return bad("geometry.angles must be positive".into());
        }
        if self.geometry.bins == Some(0) {
            return bad("geometry.bins must be positive".into());
        }
        if let Some([lo, hi]) = self.geometry.window_deg {
            if !(0.0..180.0).contains(&lo) || !(hi > lo && hi <= 180.0) {
                return bad(format!(
                    "angle window [{lo}, {hi}) must lie inside [0, 180) with lo < hi"
                ));
            }
            let step = 180.0 / self.geometry.angles as f64;
            if !(0..self.geometry.angles).any(|k| (lo..hi).contains(&(k as f64 * step))) {
                return bad("angle window contains no angle".into());
            }
        }
        if !(self.noise.sigma2 >= 0.0) || !self.noise.sigma2.is_finite() {
            return bad("noise.sigma2 must be finite and >= 0".into());
        }
        if !(self.theory.kappa > 0.0 && self.theory.kappa < 1.0) {
            return bad("theory.kappa must lie in (0, 1)".into());
        }
        if self.max_iterations == 0 || self.norm_iterations == 0 {
            return bad("iteration counts must be positive".into());
        }
        if self.priors.count == Some(0) {
            return bad("priors.count must be positive".into());
        }
        for spec in &self.schemes {
            let kind = spec.kind()?;
            let need = |present: bool, what: &str| {
                if present {
                    Ok(())
                } else {
                    Err(RunError::Config(format!(
                        "{} requires `{what}`",
                        spec.label()
                    )))
                }
            };
            if kind.uses_lambda() {
                need(spec.lambda.is_some(), "lambda")?;
            }
            if kind == SchemeKind::IrliRevised {
                need(spec.mu.is_some(), "mu")?;
            }
            if kind == SchemeKind::GirliAdapt {
                need(spec.adapt.is_some(), "adapt")?;
            } else if spec.adapt.is_some() {
                return bad(format!(
                    "{}: only GIRLI-adapt accepts `adapt`",
                    spec.label()
                ));
            }
            if let Some(l) = &spec.lambda {
                l.sequence()?;
            }
            let positive = |c: Coefficient| match c {
                Coefficient::Absolute(v) | Coefficient::Relative(v) => v > 0.0 && v.is_finite(),
            };
            if !positive(spec.omega) || !positive(spec.c_or_default()) {
                return bad(format!("{}: omega and c must be positive", spec.label()));
            }
            if !(spec.tau > 1.0) {
                return bad(format!("{}: tau must exceed 1", spec.label()));
            }
        }
        let mut labels: Vec<&str> = self.schemes.iter().map(|s| s.label()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("scheme labels must be unique (set `label`)".into());
        }
        Ok(())
    }

    /// Noise seed, with the phantom seed derived from the same override.
    pub fn override_seed(&mut self, seed: u64) {
        self.noise.seed = seed;
        if let DatasetConfig::Phantom(p) = &mut self.dataset {
            p.seed = seed;
        }
    }

    pub fn override_max_iterations(&mut self, max: usize) {
        self.max_iterations = max;
        for s in &mut self.schemes {
            s.max_iterations = None;
        }
    }
}

//! The seven reference experiments at desk scale on synthetic digits.
//!
//! All presets use 28×28 phantoms of the ten digit classes (15 training and
//! 3 validation images per class), 180 angles, the discrepancy principle
//! and a cap of 1000 iterations. Steps are relative to the operator scale:
//! `ω = 0.3/‖R‖²`, and DDIRLI's `C` makes `β_0 ‖A‖² = 0.5`.

use girli_core::schemes::SchemeKind;

use crate::config::{
    AdaptSpec, Coefficient, DatasetConfig, ExperimentConfig, GeometryConfig, InitialGuessMode,
    LambdaSpec, NoiseConfig, PhantomConfig, PriorConfig, SchemeSpec, TargetConfig, TheoryConfig,
};
use crate::error::{Result, RunError};

pub const PRESET_TESTS: std::ops::RangeInclusive<u8> = 1..=7;

/// Relative step `ω‖R‖²`.
pub const OMEGA_FACTOR: f64 = 0.3;
/// Relative DDIRLI coefficient `β_0 ‖A‖²`.
pub const DDIRLI_FACTOR: f64 = 0.5;
/// Constant damping of the prior-driven schemes.
pub const LAMBDA: f64 = 0.01;
/// Pruning tolerance of GIRLI-adapt for 28×28 binary phantoms.
pub const ADAPT_TOL: f64 = 9.0;
/// Pruning starts after this iteration.
pub const ADAPT_K0: usize = 10;
/// Observed window of the limited-data tests, in degrees.
pub const LIMITED_WINDOW_DEG: [f64; 2] = [0.0, 120.0];
/// Digit class of the targets (and of the class-specific priors).
pub const TARGET_CLASS: u8 = 3;
/// Number of class-specific priors in Tests 5 to 7.
pub const CLASS_PRIORS: usize = 14;

fn scheme(kind: SchemeKind, tau: f64) -> SchemeSpec {
    let mut s = SchemeSpec::new(kind, tau);
    s.omega = Coefficient::Relative(OMEGA_FACTOR);
    match kind {
        SchemeKind::Irli | SchemeKind::Girli | SchemeKind::GirliAdapt | SchemeKind::GirliGm => {
            s.lambda = Some(LambdaSpec::Constant(LAMBDA));
        }
        SchemeKind::IrliRevised => s.mu = Some(0.001),
        SchemeKind::Ddirli => s.c = Some(Coefficient::Relative(DDIRLI_FACTOR)),
        SchemeKind::Landweber => {}
    }
    if kind == SchemeKind::GirliAdapt {
        s.adapt = Some(AdaptSpec {
            k0: ADAPT_K0,
            tol: ADAPT_TOL,
        });
    }
    s
}

fn base(name: &str, sigma2: f64, schemes: Vec<SchemeSpec>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        dataset: DatasetConfig::Phantom(PhantomConfig {
            width: 28,
            height: 28,
            classes: (0..=9).collect(),
            train_per_class: 15,
            validation_per_class: 3,
            seed: 2024,
            max_rotation: None,
            scale_jitter: None,
            max_shear: None,
            max_shift: None,
            stroke_width: None,
        }),
        target: TargetConfig {
            class: Some(TARGET_CLASS),
            index: 0,
        },
        priors: PriorConfig::default(),
        geometry: GeometryConfig::default(),
        noise: NoiseConfig { sigma2, seed: 7 },
        theory: TheoryConfig::default(),
        initial_guess: InitialGuessMode::PerScheme,
        schemes,
        max_iterations: 1000,
        norm_iterations: 100,
        output: Some(format!("out/{name}").into()),
    }
}

fn class_priors(mut c: ExperimentConfig) -> ExperimentConfig {
    c.priors = PriorConfig {
        class: Some(TARGET_CLASS),
        count: Some(CLASS_PRIORS),
    };
    c
}

/// Preset for test `n` (1 to 7).
pub fn preset(n: u8) -> Result<ExperimentConfig> {
    use SchemeKind::*;
    let full = |tau| {
        vec![
            scheme(Girli, tau),
            scheme(Ddirli, tau),
            scheme(Irli, tau),
            scheme(Landweber, tau),
        ]
    };
    let with_adapt = |tau| {
        let mut v = vec![scheme(GirliAdapt, tau)];
        v.extend(full(tau));
        v
    };
    let limited = |mut c: ExperimentConfig| {
        c.geometry.window_deg = Some(LIMITED_WINDOW_DEG);
        c
    };
    let config = match n {
        1 => base("test1", 0.5, full(1.1)),
        2 => base("test2", 0.5, with_adapt(1.1)),
        3 => limited(base("test3", 0.03, full(5.0))),
        4 => limited(base("test4", 0.03, with_adapt(5.0))),
        5 => {
            let mut gm_strong = scheme(GirliGm, 1.1);
            gm_strong.lambda = Some(LambdaSpec::Constant(0.05));
            gm_strong.label = Some("GIRLI-GM-0.05".into());
            class_priors(base(
                "test5",
                0.5,
                vec![scheme(Girli, 1.1), scheme(GirliGm, 1.1), gm_strong],
            ))
        }
        6 => {
            let mut c = class_priors(base(
                "test6",
                0.5,
                vec![scheme(Girli, 1.1), scheme(GirliGm, 1.1)],
            ));
            c.initial_guess = InitialGuessMode::Shared;
            c
        }
        7 => class_priors(base(
            "test7",
            0.5,
            vec![scheme(Girli, 1.1), scheme(IrliRevised, 1.1)],
        )),
        _ => {
            return Err(RunError::Config(format!(
                "no preset for test {n}; choose 1 to 7"
            )))
        }
    };
    Ok(config)
}

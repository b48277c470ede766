use std::path::PathBuf;

use girli::config::{Coefficient, DatasetConfig, ExperimentConfig, LambdaSpec};
use girli::presets::{preset, PRESET_TESTS};
use girli::RunError;

const SMALL: &str = r#"{
    "name": "small",
    "dataset": {"phantom": {"width": 12, "height": 12, "classes": [1, 3],
                            "train_per_class": 4, "validation_per_class": 2, "seed": 5}},
    "target": {"class": 3},
    "geometry": {"angles": 20},
    "noise": {"sigma2": 0.01, "seed": 1},
    "schemes": [
        {"method": "GIRLI", "tau": 1.5, "omega": {"relative": 0.5}, "lambda": {"constant": 0.01}},
        {"method": "LANDWEBER", "tau": 1.5}
    ]
}"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_json(SMALL).unwrap()
}

fn config_error(c: &ExperimentConfig) -> String {
    match c.validate() {
        Err(RunError::Config(msg)) => msg,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn json_defaults_are_filled_in() {
    let c = small();
    c.validate().unwrap();
    assert_eq!(c.max_iterations, 1000);
    assert_eq!(c.geometry.bins, None);
    assert_eq!(c.schemes[1].omega, Coefficient::Absolute(1e-2));
    assert_eq!(c.schemes[0].lambda, Some(LambdaSpec::Constant(0.01)));
    assert_eq!(c.schemes[1].label(), "LANDWEBER");
}

#[test]
fn presets_validate_and_round_trip_through_json() {
    for n in PRESET_TESTS {
        let c = preset(n).unwrap();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }
    assert!(preset(0).is_err());
    assert!(preset(8).is_err());
}

#[test]
fn unknown_fields_are_rejected() {
    let text = SMALL.replace(r#""name": "small","#, r#""name": "small", "colour": 1,"#);
    assert!(ExperimentConfig::from_json(&text).is_err());
}

#[test]
fn scheme_requirements_are_checked() {
    let mut c = small();
    c.schemes[0].lambda = None;
    assert!(config_error(&c).contains("lambda"));

    let mut c = small();
    c.schemes[0].method = "NEWTON".into();
    assert!(config_error(&c).contains("NEWTON"));

    let mut c = small();
    c.schemes[1].tau = 1.0;
    assert!(config_error(&c).contains("tau"));

    let mut c = small();
    c.schemes[1].method = "GIRLI".into();
    c.schemes[1].lambda = Some(LambdaSpec::Constant(0.01));
    assert!(config_error(&c).contains("unique"));

    let mut c = small();
    c.schemes[0].lambda = Some(LambdaSpec::Constant(1.0));
    assert!(c.validate().is_err());
}

#[test]
fn geometry_and_noise_are_checked() {
    let mut c = small();
    c.geometry.window_deg = Some([120.0, 30.0]);
    assert!(config_error(&c).contains("window"));

    let mut c = small();
    c.geometry.angles = 4;
    c.geometry.window_deg = Some([1.0, 40.0]);
    assert!(config_error(&c).contains("no angle"));

    let mut c = small();
    c.noise.sigma2 = -1.0;
    assert!(config_error(&c).contains("sigma2"));
}

#[test]
fn missing_idx_files_are_reported() {
    let mut c = small();
    let p = PathBuf::from("/nonexistent/train-images.idx");
    c.dataset = DatasetConfig::Idx(girli::config::IdxConfig {
        train_images: p.clone(),
        train_labels: p.clone(),
        validation_images: p.clone(),
        validation_labels: p,
        max_train: None,
        max_validation: None,
    });
    assert!(config_error(&c).contains("does not exist"));
}

#[test]
fn seed_override_reaches_noise_and_phantoms() {
    let mut c = small();
    c.override_seed(42);
    assert_eq!(c.noise.seed, 42);
    let DatasetConfig::Phantom(p) = &c.dataset else {
        panic!("phantom dataset expected")
    };
    assert_eq!(p.seed, 42);
}

#[test]
fn load_reports_the_path_of_broken_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{").unwrap();
    match ExperimentConfig::load(&path) {
        Err(RunError::Json { path: p, .. }) => assert_eq!(p, path),
        other => panic!("unexpected {other:?}"),
    }
}

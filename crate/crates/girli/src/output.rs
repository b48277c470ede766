//! Writes experiment artifacts.
//!
//! | file                  | content                                              |
//! |-----------------------|------------------------------------------------------|
//! | `results.csv`         | one [`RunRecord`] per scheme                         |
//! | `trace_<label>.csv`   | `k,residual,error,active_priors` per iteration       |
//! | `truth.pgm`, `data.pgm`, `rec_<label>.pgm`, `init_<label>.pgm` | images   |
//! | `prior_mean.pgm`, `prior_gm.pgm`, `priors/prior_NNN.pgm`       | priors   |
//! | `run.json`            | config echo, seeds, δ, norms, assumption reports     |
//!
//! With `png` set, every PGM also gets a PNG sibling.

use std::fs;
use std::path::{Path, PathBuf};

use girli_core::theory::AssumptionReport;
use girli_core::GridImage;
use serde_json::{json, Value};

use crate::error::{Result, RunError};
use crate::io;
use crate::runner::{Experiment, RunRecord};

pub const RESULTS_HEADER: [&str; 8] = [
    "method",
    "sigma2",
    "delta",
    "tau",
    "iterations",
    "wall_time_s",
    "rel_error_l2",
    "stop_reason",
];

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> RunError + '_ {
    move |source| RunError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_results_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(RESULTS_HEADER).map_err(&err)?;
    for r in records {
        w.write_record([
            r.method.clone(),
            r.sigma2.to_string(),
            r.delta.to_string(),
            r.tau.to_string(),
            r.iterations.to_string(),
            r.wall_time_s.to_string(),
            r.rel_error_l2.to_string(),
            r.stop_reason.clone(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn write_trace_csv(path: &Path, trace: &girli_core::schemes::IterationTrace) -> Result<()> {
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(["k", "residual", "error", "active_priors"])
        .map_err(&err)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for rec in &trace.records {
        w.write_record([
            rec.k.to_string(),
            rec.residual_norm.to_string(),
            opt(rec.error_norm.map(|e| e.to_string())),
            opt(rec.active_prior_count.map(|c| c.to_string())),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// File-name-safe form of a scheme label.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn report_json(r: &AssumptionReport) -> Value {
    json!({
        "rho": r.rho,
        "dist_truth_initial": r.dist_truth_initial,
        "dist_truth_mean": r.dist_truth_mean,
        "dist_truth_gm": r.dist_truth_gm,
        "truth_in_initial_ball": r.truth_in_initial_ball,
        "mean_within_rho": r.mean_within_rho,
        "gm_within_rho": r.gm_within_rho,
        "operator_norm": r.operator_norm,
        "lipschitz": r.lipschitz,
        "norm_within_lipschitz": r.norm_within_lipschitz,
        "tcc_defect": r.tcc_defect,
        "eta_zero_applies": r.eta_zero_applies,
        "lambda_max_below_one": r.lambda_max_below_one,
        "e": r.e,
        "e_positive": r.e_positive,
        "tau": r.tau,
        "tau_min": r.tau_min,
        "tau_admissible": r.tau_admissible,
        "c_rho": r.c_rho,
        "all_hold": r.all_hold(),
    })
}

/// Metadata document written to `run.json`.
pub fn run_metadata(ex: &Experiment) -> Value {
    let schemes: Vec<Value> = ex
        .runs
        .iter()
        .map(|run| {
            json!({
                "label": run.label,
                "method": run.kind.acronym(),
                "omega": run.config.omega,
                "lambda0": run.config.lambda.map(|l| l.lambda_max()),
                "lambda_summable": run.config.lambda.map(|l| l.summable()),
                "mu": run.config.mu,
                "ddirli_c": run.config.ddirli_c,
                "adapt": run.config.adapt.map(|a| json!({"k0": a.k0, "tol": a.tol})),
                "max_iterations": run.config.max_iterations,
                "stop_index": run.trace.stop_index,
                "stop_reason": run.trace.stop_reason.as_str(),
                "final_residual": run.trace.final_residual(),
                "rel_error_l2": run.record.rel_error_l2,
                "prune_guard_triggered": run.trace.prune_guard_triggered,
                "final_active_priors": run.trace.final_active.as_ref().map(|m| {
                    m.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect::<Vec<_>>()
                }),
                "assumption_report": run.record.assumption_report.as_ref().map(report_json),
                "warnings": run.warnings,
            })
        })
        .collect();
    let dataset_seed = match &ex.config.dataset {
        crate::config::DatasetConfig::Phantom(p) => Some(p.seed),
        crate::config::DatasetConfig::Idx(_) => None,
    };
    json!({
        "name": ex.config.name,
        "config": serde_json::to_value(&ex.config).expect("configuration serializes"),
        "seeds": {
            "noise": ex.config.noise.seed,
            "dataset": dataset_seed,
            "norm_estimate": 0,
            "prng": "ChaCha8",
        },
        "grid": [ex.truth.width(), ex.truth.height()],
        "target_label": ex.target_label,
        "prior_count": ex.priors.len(),
        "observed_samples": ex.observed.iter().filter(|&&o| o).count(),
        "delta": ex.delta,
        "operator_norm_estimate": ex.operator_norm,
        "schemes": schemes,
        "failures": ex.failures.iter().map(|f| json!({"label": f.label, "error": f.error})).collect::<Vec<_>>(),
        "warnings": ex.warnings,
    })
}

struct ImageWriter {
    png: bool,
    written: Vec<PathBuf>,
}

impl ImageWriter {
    fn write(&mut self, dir: &Path, stem: &str, image: &GridImage) -> Result<()> {
        let pgm = dir.join(format!("{stem}.pgm"));
        io::write_pgm(&pgm, image)?;
        self.written.push(pgm);
        if self.png {
            #[cfg(feature = "png")]
            {
                let png = dir.join(format!("{stem}.png"));
                io::write_png(&png, image)?;
                self.written.push(png);
            }
        }
        Ok(())
    }
}

/// Scales an image to `[0, 1]` by its maximum (for display only).
fn normalized(image: &GridImage) -> GridImage {
    let max = image.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return image.clone();
    }
    image
        .with_values(image.values().iter().map(|v| v / max).collect())
        .expect("same length")
}

/// Writes every artifact of `ex` into `outdir`; returns the written paths.
///
/// Requesting PNG output without the `png` feature is an error.
pub fn emit_outputs(ex: &Experiment, outdir: &Path, png: bool) -> Result<Vec<PathBuf>> {
    if png && !cfg!(feature = "png") {
        return Err(RunError::Config("built without PNG support".into()));
    }
    fs::create_dir_all(outdir).map_err(|e| RunError::io(outdir, e))?;
    let priors_dir = outdir.join("priors");
    fs::create_dir_all(&priors_dir).map_err(|e| RunError::io(&priors_dir, e))?;
    let mut images = ImageWriter {
        png,
        written: Vec::new(),
    };
    let mut written = Vec::new();

    let results = outdir.join("results.csv");
    write_results_csv(&results, &ex.records())?;
    written.push(results);

    for run in &ex.runs {
        let stem = file_stem(&run.label);
        let trace = outdir.join(format!("trace_{stem}.csv"));
        write_trace_csv(&trace, &run.trace)?;
        written.push(trace);
        images.write(outdir, &format!("rec_{stem}"), &run.reconstruction)?;
        images.write(outdir, &format!("init_{stem}"), &run.initial)?;
    }

    images.write(outdir, "truth", &ex.truth)?;
    let sino = |s: &girli_core::Sinogram| {
        GridImage::new(s.bins(), s.angles().len(), s.values().to_vec()).expect("sinogram layout")
    };
    images.write(outdir, "data", &normalized(&sino(&ex.data)))?;
    images.write(outdir, "data_clean", &normalized(&sino(&ex.clean)))?;
    images.write(outdir, "prior_mean", ex.priors.mean())?;
    if let Some(gm) = ex.priors.geometric_mean() {
        images.write(outdir, "prior_gm", gm)?;
    }
    for (i, prior) in ex.priors.images().iter().enumerate() {
        images.write(&priors_dir, &format!("prior_{i:03}"), prior)?;
    }

    let meta = outdir.join("run.json");
    let text = serde_json::to_string_pretty(&run_metadata(ex)).expect("metadata serializes");
    fs::write(&meta, text).map_err(|e| RunError::io(&meta, e))?;
    written.push(meta);
    written.extend(images.written);
    Ok(written)
}

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use girli::config::ExperimentConfig;
use girli::output::{emit_outputs, run_metadata};
use girli::presets::preset;
use girli::runner::run_experiment;

#[derive(Parser)]
#[command(
    name = "girli",
    version,
    about = "Regularized Landweber reconstructions from Radon data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run one of the built-in experiments (tests 1 to 7).
    Demo {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7))]
        test: u8,
        /// Print the preset config as JSON instead of running it.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a config and print only the hypothesis reports.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    /// Seed for noise and phantom generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration cap for every scheme.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Also write PNG images.
    #[arg(long)]
    png: bool,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.override_seed(seed);
        }
        if let Some(out) = &self.out {
            config.output = Some(out.clone());
        }
        if let Some(max) = self.max_iter {
            config.override_max_iterations(max);
        }
    }
}

fn execute(mut config: ExperimentConfig, overrides: &Overrides) -> anyhow::Result<()> {
    overrides.apply(&mut config);
    let experiment = run_experiment(&config)?;
    let outdir = config
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&config.name));
    emit_outputs(&experiment, &outdir, overrides.png)
        .with_context(|| format!("writing outputs to {}", outdir.display()))?;

    println!(
        "{}: delta = {:.6}, |R| ~ {:.4}",
        config.name, experiment.delta, experiment.operator_norm
    );
    println!(
        "{:<16} {:>10} {:>12} {:>13} {:>12}",
        "method", "iterations", "wall_time_s", "rel_error_l2", "stop_reason"
    );
    for r in experiment.records() {
        println!(
            "{:<16} {:>10} {:>12.4} {:>13.4} {:>12}",
            r.method, r.iterations, r.wall_time_s, r.rel_error_l2, r.stop_reason
        );
    }
    for run in &experiment.runs {
        for w in &run.warnings {
            eprintln!("warning: {}: {w}", run.label);
        }
    }
    for w in &experiment.warnings {
        eprintln!("warning: {w}");
    }
    for f in &experiment.failures {
        eprintln!("error: {}: {}", f.label, f.error);
    }
    println!("outputs written to {}", outdir.display());
    if !experiment.failures.is_empty() {
        bail!("{} scheme(s) failed", experiment.failures.len());
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => execute(ExperimentConfig::load(&config)?, &overrides),
        Command::Demo {
            test,
            print_config,
            overrides,
        } => {
            let mut config = preset(test)?;
            if print_config {
                overrides.apply(&mut config);
                println!("{}", config.to_json());
                return Ok(());
            }
            execute(config, &overrides)
        }
        Command::Check { config, overrides } => {
            let mut config = ExperimentConfig::load(&config)?;
            overrides.apply(&mut config);
            let experiment = run_experiment(&config)?;
            let meta = run_metadata(&experiment);
            let reports: Vec<_> = meta["schemes"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|s| {
                    serde_json::json!({
                        "label": s["label"],
                        "assumption_report": s["assumption_report"],
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&reports)?);
            Ok(())
        }
    }
}

//! Command-line front end: each subcommand reads an experiment file, runs
//! one harness experiment and writes CSV/JSON results.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::seq::index::sample;
use serde_json::json;

use crate::analysis::{convergence_bound, BoundInputs};
use crate::config::{DatasetSource, ExperimentConfig};
use crate::error::{Error, Result};
use crate::fl::{load_mnist_dir, prepare_data, run_pilot, FederatedData, ModelShape, RunConfig};
use crate::harness::table::format_float;
use crate::harness::{
    compare_convergence_with, estimate_coefficient_moments, experiment_geometry, resolve_workers, sweep, write_trace_csv,
    DeviceRole, Executor, TrialContext,
};
use crate::schemes::{SchemeId, Strategy};
use crate::stats::RngStream;

/// `|z|` above which a moment estimate counts as biased.
pub const MOMENT_Z_LIMIT: f64 = 4.0;

/// Relative closed-form mismatch tolerated by `mse-sweep --check`, on top
/// of four standard errors.
pub const MSE_REL_TOLERANCE: f64 = 0.02;

#[derive(Debug, Parser)]
#[command(name = "airfl-sim", version, about = "RIS-aided over-the-air federated learning simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo moments of every aggregation and interference coefficient.
    Moments(CommonArgs),
    /// Empirical and closed-form normalized MSE along one sweep axis.
    MseSweep(CommonArgs),
    /// Paired training runs, one trace per aggregator and seed.
    Train(CommonArgs),
    /// Convergence-bound constants of both unbiased schemes.
    Bound(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment file (JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated seeds, overriding `seeds`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Monte Carlo trials, overriding `trials`.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Worker threads; falls back to AIRFL_SIM_WORKERS, then all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Exit with status 1 when the results contradict the analysis.
    #[arg(long)]
    pub check: bool,
}

/// Whether a `--check` run found a contradiction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    CheckFailed,
}

struct Prepared {
    config: ExperimentConfig,
    out: PathBuf,
    exec: Executor,
    check: bool,
}

fn prepare(args: &CommonArgs) -> Result<Prepared> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &args.seeds {
        config.seeds = s.clone();
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    config.validate()?;
    let out = args.out.clone().unwrap_or_else(|| config.output_dir.clone());
    fs::create_dir_all(&out)?;
    let exec = Executor::new(resolve_workers(args.workers)?)?;
    Ok(Prepared { config, out, exec, check: args.check })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| crate::harness::table::NOT_DEFINED.to_owned(), format_float)
}

fn seeded(config: &ExperimentConfig, seed: u64) -> Result<crate::channel::SystemConfig> {
    let mut s = config.system_config()?;
    s.seed = seed;
    Ok(s)
}

pub const MOMENTS_HEADER: [&str; 11] = [
    "seed", "scheme", "role", "device", "mean", "variance", "stderr", "trials", "target", "z_score", "variance_target",
];

fn cmd_moments(p: &Prepared) -> Result<Outcome> {
    let path = p.out.join("moments.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_io)?;
    w.write_record(MOMENTS_HEADER).map_err(csv_io)?;
    let mut worst = 0.0f64;
    for &seed in &p.config.seeds {
        let system = seeded(&p.config, seed)?;
        for &strategy in &p.config.strategies {
            let ctx = TrialContext::new(&system, strategy)?
                .with_impairment(p.config.impairment)
                .with_lambda_scale(p.config.lambda_scale)?;
            for m in estimate_coefficient_moments(&ctx, p.config.trials, &p.exec)? {
                let e = &m.estimate;
                if let Some(z) = e.z_score {
                    worst = worst.max(z.abs());
                }
                let role = match m.role {
                    DeviceRole::Target => "target",
                    DeviceRole::Interferer => "interferer",
                };
                w.write_record([
                    seed.to_string(),
                    strategy.name().to_owned(),
                    role.to_owned(),
                    m.device.to_string(),
                    format_float(e.mean),
                    format_float(e.variance),
                    format_float(e.stderr),
                    e.trials.to_string(),
                    opt(e.target),
                    opt(e.z_score),
                    opt(m.variance_target),
                ])
                .map_err(csv_io)?;
            }
        }
    }
    w.flush()?;
    log::info!("wrote {}", path.display());
    write_json(&p.out.join("moments.json"), &json!({ "config": p.config }))?;
    println!("moments: largest |z| = {worst:.3}");
    Ok(if p.check && worst > MOMENT_Z_LIMIT { Outcome::CheckFailed } else { Outcome::Passed })
}

fn cmd_mse_sweep(p: &Prepared) -> Result<Outcome> {
    let mut failures = 0usize;
    for &seed in &p.config.seeds {
        let system = seeded(&p.config, seed)?;
        let table = sweep(&system, p.config.sweep.axis, &p.config.sweep.values, &p.config.sweep_settings(), &p.exec)?;
        for r in &table.rows {
            if let Some(cf) = r.closed_form {
                let tol = (MSE_REL_TOLERANCE * cf).max(4.0 * r.stderr);
                if (r.empirical - cf).abs() > tol {
                    failures += 1;
                    log::warn!("{} at {} = {}: empirical {} vs closed form {cf}", r.scheme, table.axis_name, r.axis, r.empirical);
                }
            }
        }
        let stem = format!("mse_sweep_{}_seed{seed}", table.axis_name);
        table.write_files(&p.out, &stem)?;
        log::info!("wrote {stem}.csv");
    }
    println!("mse-sweep: {failures} closed-form mismatches");
    Ok(if p.check && failures > 0 { Outcome::CheckFailed } else { Outcome::Passed })
}

/// Client data for a seeded run, from the configured dataset source.
fn dataset_for(source: &DatasetSource, run: &RunConfig) -> Result<FederatedData> {
    match source {
        DatasetSource::Synthetic(_) => prepare_data(run),
        DatasetSource::Mnist { dir, labels_per_client, train_per_client, test_samples } => {
            let train = load_mnist_dir(dir, true)?;
            let test = load_mnist_dir(dir, false)?;
            let root = RngStream::root(run.system.seed);
            let keep = sample(&mut root.child("test", 0).rng(), test.len(), (*test_samples).min(test.len())).into_vec();
            let test = test.subset(&keep, "mnist-test")?;
            FederatedData::from_pool(
                &train,
                test,
                run.system.targets,
                *labels_per_client,
                *train_per_client,
                &root.child("partition", 0),
            )
        }
    }
}

fn cmd_train(p: &Prepared) -> Result<Outcome> {
    let runs = p.config.run_configs()?;
    let source = &p.config.training.dataset;
    let report = compare_convergence_with(&runs, &p.config.seeds, &p.exec, |r| dataset_for(source, r))?;
    for trace in &report.traces {
        let path = p.out.join(format!("trace_{}_seed{}.csv", trace.label, trace.seed));
        write_trace_csv(trace, fs::File::create(&path)?)?;
        log::info!("wrote {}", path.display());
    }
    let path = p.out.join("train_summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_io)?;
    w.write_record(["label", "ris_elements", "seeds", "mean_final_accuracy", "sd_final_accuracy"])
        .map_err(csv_io)?;
    for s in &report.summary {
        w.write_record([
            s.label.clone(),
            s.ris_elements.to_string(),
            s.seeds.to_string(),
            format_float(s.mean_final_accuracy),
            format_float(s.sd_final_accuracy),
        ])
        .map_err(csv_io)?;
        println!("{:<18} final accuracy {:.4} ± {:.4}", s.label, s.mean_final_accuracy, s.sd_final_accuracy);
    }
    w.flush()?;
    let gradient_bounds: Vec<_> = report.traces.iter().map(|t| json!({"label": t.label, "seed": t.seed, "gradient_bound": t.gradient_bound})).collect();
    write_json(&p.out.join("train.json"), &json!({ "config": p.config, "gradient_bounds": gradient_bounds }))?;
    Ok(Outcome::Passed)
}

fn cmd_bound(p: &Prepared) -> Result<Outcome> {
    let seed = p.config.seeds[0];
    let runs = p.config.run_configs()?;
    let run = RunConfig { system: seeded(&p.config, seed)?, ..runs[0].clone() };
    let b = &p.config.bound;
    let data = dataset_for(&p.config.training.dataset, &run)?;
    let dim = ModelShape { kind: run.model, inputs: data.test.dim(), classes: data.test.classes() }.parameters();
    let needs_pilot = b.smoothness.is_none() || b.dissimilarity.is_none() || b.sgd_variance.is_none() || b.initial_gap.is_none();
    let pilot_rounds = b.pilot_rounds.or(run.pilot_rounds).unwrap_or(50);
    let pilot = if needs_pilot || run.pilot_rounds.is_some() { Some(run_pilot(&run, &data, pilot_rounds)?) } else { None };
    let mut system = run.system.clone();
    if let (Some(pl), Some(_)) = (&pilot, run.pilot_rounds) {
        system.gradient_bound = pl.gradient_bound;
    }
    let pick = |given: Option<f64>, measured: fn(&crate::fl::PilotStats) -> f64| -> f64 {
        given.unwrap_or_else(|| measured(pilot.as_ref().expect("pilot runs when a constant is missing")))
    };
    let inputs = BoundInputs {
        smoothness: pick(b.smoothness, |s| s.smoothness),
        dissimilarity: pick(b.dissimilarity, |s| s.dissimilarity),
        sgd_variance: pick(b.sgd_variance, |s| s.sgd_variance),
        initial_gap: pick(b.initial_gap, |s| s.initial_gap),
        rounds: b.rounds.unwrap_or(run.rounds as u64),
    };
    let beta = experiment_geometry(&system)?;
    let mut schemes = serde_json::Map::new();
    let mut varpi = Vec::new();
    for (strategy, id) in [(Strategy::SchemeI, SchemeId::SchemeI), (Strategy::SchemeII, SchemeId::SchemeII)] {
        let bound = convergence_bound(id, &system, &beta, dim, &inputs)?;
        println!(
            "{:<10} varpi {:.6}  epsilon {:.6e}  bound(T={}) {:.6e}",
            strategy.name(), bound.varpi, bound.epsilon_bias, inputs.rounds, bound.bound_at_t
        );
        varpi.push(bound.varpi);
        schemes.insert(strategy.name().to_owned(), serde_json::to_value(bound)?);
    }
    write_json(
        &p.out.join("bound.json"),
        &json!({
            "config": p.config,
            "seed": seed,
            "dim": dim,
            "gradient_bound": system.gradient_bound,
            "inputs": inputs,
            "schemes": schemes,
        }),
    )?;
    Ok(if p.check && varpi[0] > varpi[1] { Outcome::CheckFailed } else { Outcome::Passed })
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Moments(a) => cmd_moments(&prepare(a)?),
        Command::MseSweep(a) => cmd_mse_sweep(&prepare(a)?),
        Command::Train(a) => cmd_train(&prepare(a)?),
        Command::Bound(a) => cmd_bound(&prepare(a)?),
    }
}

/// Exit status for `args`: 0 on success, 1 when `--check` finds a
/// contradiction, 2 on usage, configuration or runtime errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(Outcome::Passed) => 0,
        Ok(Outcome::CheckFailed) => {
            eprintln!("check failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

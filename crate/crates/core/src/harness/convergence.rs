//! Paired multi-seed training comparisons.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fl::{prepare_data, train_on, FederatedData, RunConfig, RunTrace};
use crate::harness::table::format_float;
use crate::harness::Executor;

/// Final test accuracy of one configuration across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub label: String,
    pub ris_elements: usize,
    pub seeds: usize,
    pub mean_final_accuracy: f64,
    pub sd_final_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Traces ordered by configuration, then seed.
    pub traces: Vec<RunTrace>,
    /// One entry per configuration.
    pub summary: Vec<ConvergenceSummary>,
}

/// Trains every configuration under every seed. Runs sharing a seed share
/// data, partition, initialization and channel draws; only the aggregator
/// and system parameters differ.
pub fn compare_convergence(configs: &[RunConfig], seeds: &[u64], exec: &Executor) -> Result<ConvergenceReport> {
    compare_convergence_with(configs, seeds, exec, prepare_data)
}

/// [`compare_convergence`] with client data built by `data` from each
/// seeded configuration.
pub fn compare_convergence_with<D>(configs: &[RunConfig], seeds: &[u64], exec: &Executor, data: D) -> Result<ConvergenceReport>
where
    D: Fn(&RunConfig) -> Result<FederatedData> + Sync + Send,
{
    if seeds.is_empty() || configs.is_empty() {
        return Err(invalid("need at least one configuration and one seed"));
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let traces = exec.map(jobs, |(c, seed)| {
        let mut cfg = configs[c].clone();
        cfg.system.seed = seed;
        train_on(&cfg, &data(&cfg)?)
    })?;
    let summary = configs
        .iter()
        .zip(traces.chunks(seeds.len()))
        .map(|(cfg, runs)| {
            let acc: Vec<f64> = runs.iter().map(RunTrace::final_accuracy).collect();
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let sd = if acc.len() > 1 {
                (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            ConvergenceSummary {
                label: cfg.aggregator.label(),
                ris_elements: cfg.system.ris_elements,
                seeds: runs.len(),
                mean_final_accuracy: mean,
                sd_final_accuracy: sd,
            }
        })
        .collect();
    Ok(ConvergenceReport { traces, summary })
}

pub const TRACE_HEADER: [&str; 5] = ["round", "train_loss", "test_accuracy", "global_grad_norm", "error_sq"];

/// One CSV record per round.
pub fn write_trace_csv<W: Write>(trace: &RunTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::Error::Io(std::io::Error::other(e));
    w.write_record(TRACE_HEADER).map_err(io)?;
    for r in &trace.records {
        w.write_record([
            r.round.to_string(),
            format_float(r.train_loss),
            format_float(r.test_accuracy),
            format_float(r.global_grad_norm),
            format_float(r.error_sq),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

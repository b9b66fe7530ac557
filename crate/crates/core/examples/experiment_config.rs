//! Runs the sweep described by an experiment file, by default the bundled
//! RIS-size preset, and prints its result table.

use std::path::PathBuf;

use airfl_sim::config::ExperimentConfig;
use airfl_sim::harness::{resolve_workers, sweep, Executor};

fn main() -> airfl_sim::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/mse_vs_ris_elements.json"));
    let mut config = ExperimentConfig::load(&path)?;
    if let Some(trials) = std::env::args().nth(2).and_then(|s| s.parse().ok()) {
        config.trials = trials;
    }
    let exec = Executor::new(resolve_workers(None)?)?;
    let table = sweep(&config.system_config()?, config.sweep.axis, &config.sweep.values, &config.sweep_settings(), &exec)?;
    table.write_csv(std::io::stdout())?;
    Ok(())
}

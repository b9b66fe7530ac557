//! MSE against the number of RIS elements, with log-log slopes of each error
//! component. Pass an output directory to also write the CSV and JSON tables.

use std::path::PathBuf;

use airfl_sim::aircomp::InterferenceMode;
use airfl_sim::channel::SystemConfig;
use airfl_sim::harness::{
    resolve_workers, sweep, table_loglog_slope, Executor, Metric, SweepAxis, SweepSettings, SyntheticGradients,
};
use airfl_sim::ris::PhaseImpairment;
use airfl_sim::schemes::Strategy;

fn main() -> airfl_sim::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let exec = Executor::new(resolve_workers(None)?)?;
    let settings = SweepSettings {
        strategies: Strategy::ALL.to_vec(),
        impairment: PhaseImpairment::Ideal,
        interference: InterferenceMode::RandomUnit,
        gradients: SyntheticGradients::default(),
        trials: 10_000,
        lambda_scale: 1.0,
    };
    let values = [64.0, 128.0, 256.0, 512.0, 1024.0];
    let table = sweep(&SystemConfig::default(), SweepAxis::RisElements, &values, &settings, &exec)?;
    println!("{:>6} {:<18} {:>12} {:>12}", "N", "strategy", "empirical", "closed form");
    for r in &table.rows {
        let cf = r.closed_form.map_or("-".to_owned(), |v| format!("{v:.4e}"));
        println!("{:>6} {:<18} {:>12.4e} {:>12}", r.axis, r.scheme, r.empirical, cf);
    }
    println!("log-log slopes against N");
    for s in Strategy::ALL {
        let slope = |m| table_loglog_slope(&table, s.name(), m);
        println!(
            "  {:<18} total {:>7.3}  computation+interference {:>7.3}  noise {:>7.3}",
            s.name(),
            slope(Metric::Empirical)?,
            slope(Metric::ComputationPlusInterference)?,
            slope(Metric::Noise)?
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        table.write_files(&dir, "mse_vs_ris_elements")?;
        println!("wrote {}", dir.join("mse_vs_ris_elements.csv").display());
    }
    Ok(())
}

//! Every strategy side by side in an interference-dominated and a
//! computation-dominated regime, under each interference model.

use airfl_sim::aircomp::InterferenceMode;
use airfl_sim::channel::{dbm_to_watts, SystemConfig};
use airfl_sim::harness::{correlated_gradients, empirical_mse, resolve_workers, Executor, GradientSource, TrialContext};
use airfl_sim::schemes::Strategy;
use airfl_sim::stats::RngStream;

fn main() -> airfl_sim::Result<()> {
    let exec = Executor::new(resolve_workers(None)?)?;
    let regimes = [
        ("interference dominated", SystemConfig { interferers: 20, interferer_power: Some(dbm_to_watts(10.0)), ..SystemConfig::default() }),
        ("computation dominated", SystemConfig { interferers: 0, ris_elements: 1024, ..SystemConfig::default() }),
    ];
    for (name, system) in regimes {
        println!("{name}: K = {}, M = {}, N = {}", system.targets, system.interferers, system.ris_elements);
        let grads = correlated_gradients(system.targets, 210, system.gradient_bound, 0.3, &RngStream::root(system.seed).child("gradients", 0))?;
        let source = GradientSource::Fixed(grads);
        println!("  {:<18} {:>12} {:>12} {:>12}", "strategy", "random", "constant", "attack");
        for strategy in Strategy::ALL {
            let ctx = TrialContext::new(&system, strategy)?;
            let mut row = Vec::new();
            for mode in [InterferenceMode::RandomUnit, InterferenceMode::ConstantUnit, InterferenceMode::ZeroGradientAttack] {
                row.push(empirical_mse(&ctx, &source, mode, 5_000, &exec)?.total.mean);
            }
            println!("  {:<18} {:>12.4e} {:>12.4e} {:>12.4e}", strategy.name(), row[0], row[1], row[2]);
        }
    }
    Ok(())
}

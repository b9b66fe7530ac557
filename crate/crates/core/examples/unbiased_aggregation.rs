//! Mean and variance of every device's aggregation coefficient under each
//! strategy. Targets of the unbiased schemes average to `1/K`, interferers
//! to zero.

use airfl_sim::channel::SystemConfig;
use airfl_sim::harness::{estimate_coefficient_moments, resolve_workers, DeviceRole, Executor, TrialContext};
use airfl_sim::schemes::Strategy;

fn main() -> airfl_sim::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let exec = Executor::new(resolve_workers(None)?)?;
    let system = SystemConfig { targets: 8, interferers: 4, ris_elements: 64, ..SystemConfig::default() };
    println!("K = {}, M = {}, N = {}, {trials} rounds", system.targets, system.interferers, system.ris_elements);
    for strategy in Strategy::ALL {
        let ctx = TrialContext::new(&system, strategy)?;
        println!("{strategy}");
        for m in estimate_coefficient_moments(&ctx, trials, &exec)? {
            let role = match m.role {
                DeviceRole::Target => "target",
                DeviceRole::Interferer => "interferer",
            };
            let fmt = |x: Option<f64>| x.map_or("-".to_owned(), |v| format!("{v:.4e}"));
            println!(
                "  {role:<10} {:>2}  mean {:>11.4e} (target {:>10}, z {:>7})  variance {:.4e} (closed form {})",
                m.device,
                m.estimate.mean,
                fmt(m.estimate.target),
                m.estimate.z_score.map_or("-".to_owned(), |z| format!("{z:.2}")),
                m.estimate.variance,
                fmt(m.variance_target)
            );
        }
    }
    Ok(())
}

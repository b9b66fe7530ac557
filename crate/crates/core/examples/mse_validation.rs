//! Empirical normalized MSE of both unbiased schemes against the closed-form
//! decomposition at the default system configuration.

use airfl_sim::aircomp::InterferenceMode;
use airfl_sim::channel::SystemConfig;
use airfl_sim::harness::{correlated_gradients, empirical_mse, resolve_workers, Executor, GradientSource, TrialContext};
use airfl_sim::schemes::Strategy;
use airfl_sim::stats::RngStream;

fn main() -> airfl_sim::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let exec = Executor::new(resolve_workers(None)?)?;
    println!("{:>5} {:<10} {:>12} {:>12} {:>8} {:>10}", "N", "scheme", "empirical", "closed", "rel.err", "z");
    for n in [64, 256] {
        let system = SystemConfig { ris_elements: n, ..SystemConfig::default() };
        let grads = correlated_gradients(system.targets, 210, system.gradient_bound, 0.0, &RngStream::root(system.seed).child("gradients", 0))?;
        for strategy in [Strategy::SchemeI, Strategy::SchemeII] {
            let ctx = TrialContext::new(&system, strategy)?;
            let est = empirical_mse(&ctx, &GradientSource::Fixed(grads.clone()), InterferenceMode::RandomUnit, trials, &exec)?;
            let cf = est.closed_form.expect("unbiased schemes have closed forms");
            println!(
                "{:>5} {:<10} {:>12.5e} {:>12.5e} {:>8.4} {:>10.3}",
                n,
                strategy.name(),
                est.total.mean,
                cf.total,
                est.total.mean / cf.total - 1.0,
                est.total.z_score.unwrap_or(f64::NAN)
            );
            println!(
                "      components  emp {:.4e} {:.4e} {:.4e}  closed {:.4e} {:.4e} {:.4e}",
                est.computation, est.interference, est.noise, cf.computation, cf.interference, cf.noise
            );
        }
    }
    Ok(())
}

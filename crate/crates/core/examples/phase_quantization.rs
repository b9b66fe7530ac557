//! Sensitivity of the aggregation MSE to finite phase resolution and to
//! random phase errors.

use airfl_sim::aircomp::InterferenceMode;
use airfl_sim::channel::SystemConfig;
use airfl_sim::harness::{correlated_gradients, empirical_mse, resolve_workers, Executor, GradientSource, TrialContext};
use airfl_sim::ris::PhaseImpairment;
use airfl_sim::schemes::Strategy;
use airfl_sim::stats::RngStream;

fn main() -> airfl_sim::Result<()> {
    let exec = Executor::new(resolve_workers(None)?)?;
    let system = SystemConfig::default();
    let grads = correlated_gradients(system.targets, 210, system.gradient_bound, 0.0, &RngStream::root(system.seed).child("gradients", 0))?;
    let source = GradientSource::Fixed(grads);
    let mut impairments = vec![("continuous".to_owned(), PhaseImpairment::Ideal)];
    impairments.extend((1..=4).map(|bits| (format!("{bits}-bit"), PhaseImpairment::Quantized { bits })));
    impairments.extend([0.25, 0.5, 1.0].map(|delta| (format!("U(-{delta}, {delta})"), PhaseImpairment::UniformNoise { delta })));
    println!("N = {}, normalized MSE", system.ris_elements);
    println!("{:<16} {:>12} {:>12}", "phases", "scheme_i", "scheme_ii");
    for (label, impairment) in impairments {
        let mse = |strategy| -> airfl_sim::Result<f64> {
            let ctx = TrialContext::new(&system, strategy)?.with_impairment(impairment);
            Ok(empirical_mse(&ctx, &source, InterferenceMode::RandomUnit, 10_000, &exec)?.total.mean)
        };
        println!("{label:<16} {:>12.5} {:>12.5}", mse(Strategy::SchemeI)?, mse(Strategy::SchemeII)?);
    }
    Ok(())
}

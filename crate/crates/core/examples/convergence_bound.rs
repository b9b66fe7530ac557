//! Measures the learning constants on a pilot run and evaluates the
//! optimality-gap bound of both unbiased schemes as the RIS grows.

use airfl_sim::analysis::{convergence_bound, BoundInputs};
use airfl_sim::fl::{prepare_data, run_pilot, RunConfig};
use airfl_sim::harness::experiment_geometry;
use airfl_sim::schemes::SchemeId;

fn main() -> airfl_sim::Result<()> {
    let run = RunConfig::default();
    let data = prepare_data(&run)?;
    let pilot = run_pilot(&run, &data, 50)?;
    println!(
        "pilot: gradient bound {:.4}, smoothness {:.4}, dissimilarity {:.4}, SGD variance {:.4}, initial gap {:.4}",
        pilot.gradient_bound, pilot.smoothness, pilot.dissimilarity, pilot.sgd_variance, pilot.initial_gap
    );
    let inputs = BoundInputs {
        smoothness: pilot.smoothness,
        dissimilarity: pilot.dissimilarity,
        sgd_variance: pilot.sgd_variance,
        rounds: run.rounds as u64,
        initial_gap: pilot.initial_gap,
    };
    let dim = run.shape(&data).parameters();
    println!("{:>8} {:<10} {:>12} {:>14} {:>14}", "N", "scheme", "varpi", "epsilon", "bound at T");
    for n in [16, 64, 256, 1024, 4096, 1 << 20] {
        let mut system = run.system.clone();
        system.ris_elements = n;
        system.gradient_bound = pilot.gradient_bound;
        let beta = experiment_geometry(&system)?;
        for id in [SchemeId::SchemeI, SchemeId::SchemeII] {
            let b = convergence_bound(id, &system, &beta, dim, &inputs)?;
            println!("{n:>8} {:<10} {:>12.5} {:>14.5e} {:>14.5e}", format!("{id:?}"), b.varpi, b.epsilon_bias, b.bound_at_t);
        }
    }
    Ok(())
}

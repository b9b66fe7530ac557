//! Paired training runs on the synthetic non-IID task: ideal averaging against
//! over-the-air aggregation under a zero-gradient attack.

use airfl_sim::aircomp::InterferenceMode;
use airfl_sim::fl::{prepare_data, train_on, Aggregator, RunConfig};
use airfl_sim::ris::PhaseImpairment;
use airfl_sim::schemes::Strategy;

fn main() -> airfl_sim::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut base = RunConfig::default();
    base.system.seed = seed;
    let data = prepare_data(&base)?;
    let mut aggregators = vec![Aggregator::Ideal];
    aggregators.extend(Strategy::ALL.map(|strategy| Aggregator::OverTheAir {
        strategy,
        impairment: PhaseImpairment::Ideal,
        interference: InterferenceMode::ZeroGradientAttack,
    }));
    println!("{:<18} {:>10} {:>12} {:>14}", "aggregator", "accuracy", "final loss", "mean |eps|^2");
    for aggregator in aggregators {
        let config = RunConfig { aggregator, ..base.clone() };
        let trace = train_on(&config, &data)?;
        let last = trace.records.last().expect("at least one round");
        let mean_err = trace.records.iter().map(|r| r.error_sq).sum::<f64>() / trace.records.len() as f64;
        println!(
            "{:<18} {:>10.4} {:>12.4} {:>14.4e}",
            trace.label, last.test_accuracy, last.train_loss, mean_err
        );
    }
    Ok(())
}

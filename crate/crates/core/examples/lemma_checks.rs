//! Monte Carlo checks of the closed-form distribution results behind the
//! moment formulas: the Rayleigh ratio moment, the sum and difference of
//! uniform phases, and the minimum of two exponentials.

use std::f64::consts::{PI, TAU};

use airfl_sim::stats::{
    min_exponential_rate, rayleigh_ratio_moment, sample_complex_gaussian, uniform_diff_pdf, uniform_sum_pdf,
    MomentAccumulator, RngStream,
};
use rand::Rng;
use rand_distr::{Distribution, Exp};

const SAMPLES: usize = 1_000_000;

fn main() -> airfl_sim::Result<()> {
    println!("E[x^2/y] for correlated unit-power Rayleigh pairs");
    for rho in [0.0, 0.25, 0.5, 0.75, 1.0f64] {
        let mut rng = RngStream::root(1).child("ratio", (100.0 * rho) as u64).rng();
        let (c, s) = (rho.sqrt(), (1.0 - rho).sqrt());
        let mut acc = MomentAccumulator::default();
        for _ in 0..SAMPLES {
            let ab = sample_complex_gaussian(&mut rng, 2);
            let (x, y) = (ab[0].norm(), (ab[0] * c + ab[1] * s).norm());
            acc.push(x * x / y);
        }
        println!("  rho {rho:.2}: closed form {:.5}  sampled {:.5}", rayleigh_ratio_moment(rho)?, acc.mean());
    }

    let mut rng = RngStream::root(2).rng();
    let bins = 8;
    let width = 4.0 * PI / bins as f64;
    let mut sum_counts = vec![0usize; bins];
    let mut diff_counts = vec![0usize; bins];
    for _ in 0..SAMPLES {
        let (a, b) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        sum_counts[(((a + b) / width) as usize).min(bins - 1)] += 1;
        diff_counts[(((a - b + TAU) / width) as usize).min(bins - 1)] += 1;
    }
    println!("density of the sum and difference of two U(0, 2pi) phases (bin midpoints)");
    for i in 0..bins {
        let mid = (i as f64 + 0.5) * width;
        let density = |c: usize| c as f64 / (SAMPLES as f64 * width);
        println!(
            "  sum {:>6.3}: {:.5} vs {:.5}   difference {:>6.3}: {:.5} vs {:.5}",
            mid,
            uniform_sum_pdf(mid),
            density(sum_counts[i]),
            mid - TAU,
            uniform_diff_pdf(mid - TAU),
            density(diff_counts[i])
        );
    }

    let (r1, r2) = (2.0, 3.0);
    let (e1, e2) = (Exp::new(r1).expect("positive rate"), Exp::new(r2).expect("positive rate"));
    let mean = (0..SAMPLES).map(|_| f64::min(e1.sample(&mut rng), e2.sample(&mut rng))).sum::<f64>() / SAMPLES as f64;
    println!("min of Exp({r1}) and Exp({r2}): rate {}  sampled mean {mean:.5}", min_exponential_rate(r1, r2)?);
    Ok(())
}

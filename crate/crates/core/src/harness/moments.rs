//! Monte Carlo estimates of the aggregation and interference coefficients.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aircomp::round_coefficients;
use crate::analysis::{coeff_variances, mean_u};
use crate::error::{invalid, Result};
use crate::harness::{trial_stream, Executor, TrialContext};
use crate::ris::{PhaseImpairment, PhasePolicy};
use crate::schemes::Strategy;
use crate::stats::MomentAccumulator;

/// Fewest trials any estimator accepts.
pub const MIN_TRIALS: u64 = 1000;

/// Sample mean and variance of a scalar, optionally against a target mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub trials: u64,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
}

impl MomentEstimate {
    pub fn from_accumulator(acc: &MomentAccumulator, target: Option<f64>) -> Self {
        let stderr = acc.stderr();
        let mean = acc.mean();
        Self {
            mean,
            variance: acc.variance(),
            stderr,
            trials: acc.count(),
            target,
            z_score: target.map(|t| (mean - t) / stderr),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceRole {
    Target,
    Interferer,
}

/// Estimated moments of one device's coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMoment {
    pub device: usize,
    pub role: DeviceRole,
    pub estimate: MomentEstimate,
    pub variance_target: Option<f64>,
}

/// Optional closed-form value per device.
type Targets = Vec<Option<f64>>;

/// Closed-form mean and variance targets for every device, where the
/// strategy has them: aligned phases with a fixed denoiser, the cycle
/// average of round-robin scheduling, and the zero mean of random phases.
/// Phase impairments void every target but the interferers' zero mean.
/// Mean targets follow the unscaled design; variance targets follow the
/// denoiser actually used.
fn targets(ctx: &TrialContext) -> Result<(Targets, Targets)> {
    let k = ctx.system.targets;
    let m = ctx.system.interferers;
    let n = ctx.system.ris_elements;
    let design = ctx.strategy.base_params(&ctx.system, &ctx.beta)?;
    let p = ctx.base_params();
    let ideal = ctx.impairment == PhaseImpairment::Ideal;
    let mut means = vec![None; k];
    let mut vars = vec![None; k + m];
    match ctx.strategy {
        Strategy::BevMinMse => {}
        _ if !ideal => {}
        s => match s.policy() {
            PhasePolicy::Aligned => {
                for (i, mean) in means.iter_mut().enumerate() {
                    *mean = Some(ctx.beta[i] * design.sqrt_p[i] * mean_u(&design.w, i, n)? / design.lambda);
                }
                let (vk, vm) = coeff_variances(&p, &ctx.beta, n)?;
                vars = vk.into_iter().chain(vm).map(Some).collect();
            }
            PhasePolicy::RoundRobin => {
                for (i, mean) in means.iter_mut().enumerate() {
                    *mean = Some(ctx.beta[i] * design.sqrt_p[i] * PI * n as f64 / (4.0 * design.lambda * k as f64));
                }
            }
            PhasePolicy::Random => means = vec![Some(0.0); k],
        },
    }
    let means = means.into_iter().chain(std::iter::repeat_n(Some(0.0), m)).collect();
    Ok((means, vars))
}

/// Mean and variance of `ℓ_k` for every target and `ℓ_m` for every
/// interferer over `trials` independent rounds.
pub fn estimate_coefficient_moments(ctx: &TrialContext, trials: u64, exec: &Executor) -> Result<Vec<CoefficientMoment>> {
    if trials < MIN_TRIALS {
        return Err(invalid(format!("at least {MIN_TRIALS} trials are required, got {trials}")));
    }
    let k = ctx.system.targets;
    let devices = ctx.system.devices();
    let seed = ctx.system.seed;
    let g2 = ctx.system.gradient_bound.powi(2);
    let blocks = exec.blocks(trials, |range| {
        let mut acc = vec![MomentAccumulator::default(); devices];
        for t in range {
            let s = trial_stream(seed, t);
            let d = ctx.draw(&s, t, g2, 1)?;
            let c = round_coefficients(&d.realization, &d.phases, &d.params)?;
            for (a, l) in acc.iter_mut().zip(c.targets.iter().chain(&c.interferers)) {
                a.push(*l);
            }
        }
        Ok(acc)
    })?;
    let mut total = vec![MomentAccumulator::default(); devices];
    for block in &blocks {
        total.iter_mut().zip(block).for_each(|(t, b)| t.merge(b));
    }
    let (means, vars) = targets(ctx)?;
    Ok(total
        .iter()
        .enumerate()
        .map(|(i, acc)| CoefficientMoment {
            device: if i < k { i } else { i - k },
            role: if i < k { DeviceRole::Target } else { DeviceRole::Interferer },
            estimate: MomentEstimate::from_accumulator(acc, means[i]),
            variance_target: vars[i],
        })
        .collect())
}

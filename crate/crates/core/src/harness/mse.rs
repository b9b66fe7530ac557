//! Empirical gradient-estimation MSE against the closed-form decomposition.

use serde::{Deserialize, Serialize};

use crate::aircomp::{ideal_round, make_interference, ota_round, GradientSet, InterferenceMode};
use crate::analysis::{closed_form_mse, GradientStats, MseBreakdown};
use crate::error::{invalid, Result};
use crate::fl::clip_gradient;
use crate::harness::moments::{MomentEstimate, MIN_TRIALS};
use crate::harness::{trial_stream, Executor, TrialContext};
use crate::ris::PhaseImpairment;
use crate::stats::{MomentAccumulator, RngStream};
use rand_distr::{Distribution, StandardNormal};

/// Where the local gradients of each trial come from.
#[derive(Clone, Debug, PartialEq)]
pub enum GradientSource {
    /// One gradient set reused by every trial.
    Fixed(Vec<Vec<f64>>),
    /// Rounds of recorded gradients, cycled through by trial index and
    /// clipped to the gradient bound.
    Recorded(Vec<Vec<Vec<f64>>>),
}

impl GradientSource {
    fn round(&self, t: u64) -> &[Vec<f64>] {
        match self {
            Self::Fixed(g) => g,
            Self::Recorded(r) => &r[(t % r.len() as u64) as usize],
        }
    }
}

/// `k` gradients of norm `norm` with pairwise inner product
/// `correlation·norm²`, built from a shared direction and `k` private
/// directions, all orthonormal. Needs `dim > k` unless `correlation = 1`.
pub fn correlated_gradients(k: usize, dim: usize, norm: f64, correlation: f64, stream: &RngStream) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&correlation) {
        return Err(invalid("gradient correlation must lie in [0, 1]"));
    }
    if k == 0 || dim <= k {
        return Err(invalid(format!("need more dimensions than gradients, got D={dim} for K={k}")));
    }
    let mut rng = stream.rng();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    while basis.len() < k + 1 {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let n = crate::aircomp::l2_norm(&v);
        if n > 1e-8 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    let (a, b) = (correlation.sqrt(), (1.0 - correlation).sqrt());
    Ok(basis[1..]
        .iter()
        .map(|e| basis[0].iter().zip(e).map(|(c, x)| norm * (a * c + b * x)).collect())
        .collect())
}

/// Empirical MSE of one strategy with closed forms where they exist. Every
/// value is normalized by the power of the ideal global gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseEstimate {
    pub total: MomentEstimate,
    pub computation: f64,
    pub interference: f64,
    pub noise: f64,
    /// Prediction for the design receiver of Schemes I and II with ideal
    /// phases. A `lambda_scale` other than 1 shows up as a mismatch.
    pub closed_form: Option<MseBreakdown>,
    pub global_power: f64,
}

/// Runs `trials` independent rounds and averages `‖ε‖²` and its parts.
pub fn empirical_mse(
    ctx: &TrialContext,
    source: &GradientSource,
    interference: InterferenceMode,
    trials: u64,
    exec: &Executor,
) -> Result<MseEstimate> {
    if trials < MIN_TRIALS {
        return Err(invalid(format!("at least {MIN_TRIALS} trials are required, got {trials}")));
    }
    let g_bound = ctx.system.gradient_bound;
    let source = match source {
        GradientSource::Recorded(r) if r.is_empty() => return Err(invalid("no recorded gradients")),
        GradientSource::Recorded(r) => GradientSource::Recorded(
            r.iter()
                .map(|round| round.iter().map(|g| clip_gradient(g, g_bound)).collect())
                .collect::<Result<_>>()?,
        ),
        fixed => fixed.clone(),
    };
    let gstats = match &source {
        GradientSource::Fixed(g) => GradientStats::from_fixed(g)?,
        GradientSource::Recorded(r) => GradientStats::from_samples(r)?,
    };
    if gstats.targets() != ctx.system.targets {
        return Err(invalid("gradient count must equal the number of targets"));
    }
    let power = gstats.global_power();
    if !(power > 0.0) {
        return Err(invalid("global gradient has zero power"));
    }
    let grad_power = gstats.self_moment.iter().sum::<f64>() / gstats.targets() as f64;
    let sigma2 = ctx.system.noise_variance();
    let (m, dim, seed) = (ctx.system.interferers, gstats.dim, ctx.system.seed);
    let blocks = exec.blocks(trials, |range| {
        let mut acc = [MomentAccumulator::default(); 4];
        for t in range {
            let s = trial_stream(seed, t);
            let draw = ctx.draw(&s, t, grad_power, dim)?;
            let targets = source.round(t).to_vec();
            let context = ideal_round(&GradientSet::new(targets.clone(), vec![])?);
            let intf = make_interference(interference, m, dim, Some(&context), &s.child("intf", 0))?;
            let set = GradientSet::new(targets, intf)?;
            let (_, st) = ota_round(&set, &draw.realization, &draw.phases, &draw.params, sigma2, &s.child("noise", 0))?;
            for (a, v) in acc.iter_mut().zip([st.sq_norm, st.computation_sq, st.interference_sq, st.noise_sq]) {
                a.push(v / power);
            }
        }
        Ok(acc)
    })?;
    let mut acc = [MomentAccumulator::default(); 4];
    for b in &blocks {
        acc.iter_mut().zip(b).for_each(|(a, x)| a.merge(x));
    }
    let closed_form = match (ctx.strategy.has_closed_form(), ctx.impairment) {
        (true, PhaseImpairment::Ideal) => {
            let id = ctx.base_params().scheme;
            Some(closed_form_mse(id, &ctx.system, &ctx.beta, &gstats)?.normalized(&gstats))
        }
        _ => None,
    };
    Ok(MseEstimate {
        total: MomentEstimate::from_accumulator(&acc[0], closed_form.as_ref().map(|c| c.total)),
        computation: acc[1].mean(),
        interference: acc[2].mean(),
        noise: acc[3].mean(),
        closed_form,
        global_power: power,
    })
}

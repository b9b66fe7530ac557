//! Transmit amplitudes, RIS weight factors and denoising factors for the two
//! unbiased schemes and the comparison baselines.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{cascade_real, cascade_weights, ChannelRealization, SystemConfig};
use crate::error::{check_len, invalid, Result};
use crate::ris::{aligned_phases, random_phases, round_robin_phases, PhasePolicy, RisPhases};
use crate::stats::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    /// Large-scale channel inversion through transmit power, equal RIS weights.
    SchemeI,
    /// Full transmit power, large-scale inversion through RIS weights.
    #[serde(rename = "scheme_ii")]
    SchemeII,
    /// Best-effort voting: every device at full power.
    Bev,
    /// Full power with a per-round MSE-minimizing denoiser.
    BevMinMse,
}

/// Everything the transmitters and the PS need for one aggregation round.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeParams {
    pub scheme: SchemeId,
    /// `√p_k` per target, in √W per unit gradient norm.
    pub sqrt_p: Vec<f64>,
    /// RIS weight factors `w_k`.
    pub w: Vec<f64>,
    /// Denoising factor `λ`.
    pub lambda: f64,
    /// `√P_m` per interferer (worst case: full power).
    pub interferer_sqrt_p: Vec<f64>,
}

impl SchemeParams {
    /// Copy with `λ` multiplied by `factor`.
    pub fn with_lambda_scale(mut self, factor: f64) -> Self {
        self.lambda *= factor;
        self
    }
}

/// `α_k = β_k·√P_k` for every target.
pub fn target_alphas(config: &SystemConfig, beta: &[f64]) -> Result<Vec<f64>> {
    check_betas(config, beta)?;
    Ok(beta[..config.targets].iter().map(|b| b * config.max_power.sqrt()).collect())
}

/// `α_m = β_m·√P_m` for every interferer.
pub fn interferer_alphas(config: &SystemConfig, beta: &[f64]) -> Result<Vec<f64>> {
    check_betas(config, beta)?;
    Ok(beta[config.targets..]
        .iter()
        .map(|b| b * config.interferer_power().sqrt())
        .collect())
}

fn check_betas(config: &SystemConfig, beta: &[f64]) -> Result<()> {
    config.validate()?;
    check_len(config.devices(), beta.len(), "beta")?;
    if beta.iter().any(|b| !(*b > 0.0)) {
        return Err(invalid("large-scale coefficients must be positive"));
    }
    Ok(())
}

fn interferer_sqrt_p(config: &SystemConfig) -> Vec<f64> {
    vec![config.interferer_power().sqrt(); config.interferers]
}

/// Scheme I: `√p_k = ζ/β_k` with `ζ = min_k α_k / G`, unit weights and
/// `λ = πN√K·min_k α_k / (4G)`.
pub fn scheme1_params(config: &SystemConfig, beta: &[f64]) -> Result<SchemeParams> {
    let alpha = target_alphas(config, beta)?;
    let g = config.gradient_bound;
    let k = config.targets as f64;
    let n = config.ris_elements as f64;
    let min_alpha = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let zeta = min_alpha / g;
    Ok(SchemeParams {
        scheme: SchemeId::SchemeI,
        sqrt_p: beta[..config.targets].iter().map(|b| zeta / b).collect(),
        w: vec![1.0; config.targets],
        lambda: PI * n * k.sqrt() * min_alpha / (4.0 * g),
        interferer_sqrt_p: interferer_sqrt_p(config),
    })
}

/// Scheme II: `√p_k = √P_k / G`, `w_k = 1/α_k` and
/// `λ = πNK / (4G·√Σw_k²)`.
pub fn scheme2_params(config: &SystemConfig, beta: &[f64]) -> Result<SchemeParams> {
    let alpha = target_alphas(config, beta)?;
    let g = config.gradient_bound;
    let k = config.targets as f64;
    let n = config.ris_elements as f64;
    let w: Vec<f64> = alpha.iter().map(|a| 1.0 / a).collect();
    let w_norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(SchemeParams {
        scheme: SchemeId::SchemeII,
        sqrt_p: vec![config.max_power.sqrt() / g; config.targets],
        w,
        lambda: PI * n * k / (4.0 * g * w_norm),
        interferer_sqrt_p: interferer_sqrt_p(config),
    })
}

/// Receiver scaling used with the full-power baselines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// Average aggregation gain of `1/K` under the paired phase policy.
    ///
    /// A random RIS has zero mean gain, so for [`PhasePolicy::Random`] the
    /// RMS gain is matched instead.
    MatchMean(PhasePolicy),
    Fixed(f64),
}

/// BEV: every target transmits at full power, `√p_k = √P_k / G`, unit weights.
pub fn bev_params(config: &SystemConfig, beta: &[f64], rule: LambdaRule) -> Result<SchemeParams> {
    check_betas(config, beta)?;
    let g = config.gradient_bound;
    let n = config.ris_elements as f64;
    let k = config.targets;
    let sqrt_p = vec![config.max_power.sqrt() / g; k];
    let gains: Vec<f64> = beta[..k].iter().zip(&sqrt_p).map(|(b, s)| b * s).collect();
    let lambda = match rule {
        LambdaRule::Fixed(l) => l,
        LambdaRule::MatchMean(PhasePolicy::Aligned) => {
            // unit weights: E[u_k] = πN / (4√K)
            PI * n * gains.iter().sum::<f64>() / (4.0 * (k as f64).sqrt())
        }
        LambdaRule::MatchMean(PhasePolicy::RoundRobin) => {
            PI * n * gains.iter().sum::<f64>() / (4.0 * k as f64)
        }
        LambdaRule::MatchMean(PhasePolicy::Random) => (n / 2.0).sqrt() * gains.iter().sum::<f64>(),
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("denoising factor must be positive, got {lambda}")));
    }
    Ok(SchemeParams {
        scheme: SchemeId::Bev,
        sqrt_p,
        w: vec![1.0; k],
        lambda,
        interferer_sqrt_p: interferer_sqrt_p(config),
    })
}

/// Realized effective gains `β_i·√p_i·u_i` for targets and interferers
/// (everything in `ℓ_i` except the `1/λ`).
pub fn realized_gains(
    realization: &ChannelRealization,
    phases: &RisPhases,
    sqrt_p: &[f64],
    interferer_sqrt_p: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(realization.targets(), sqrt_p.len(), "target amplitudes")?;
    check_len(realization.interferers(), interferer_sqrt_p.len(), "interferer amplitudes")?;
    let weights = cascade_weights(&realization.h_p, phases)?;
    let k = realization.targets();
    let targets = realization
        .target_channels()
        .iter()
        .zip(sqrt_p)
        .zip(&realization.beta[..k])
        .map(|((h, s), b)| cascade_real(&weights, h).map(|u| b * s * u))
        .collect::<Result<Vec<_>>>()?;
    let interferers = realization
        .interferer_channels()
        .iter()
        .zip(interferer_sqrt_p)
        .zip(&realization.beta[k..])
        .map(|((h, s), b)| cascade_real(&weights, h).map(|u| b * s * u))
        .collect::<Result<Vec<_>>>()?;
    Ok((targets, interferers))
}

/// Denoising factor minimizing the conditional MSE of one round.
///
/// With realized target gains `c_k`, interferer gains `c_m`, i.i.d. zero-mean
/// gradients of power `P_g` and unit-norm interference, the MSE as a function
/// of `μ = 1/λ` is `μ²A − 2μB + P_g/K` where
/// `A = P_g·Σc_k² + Σc_m² + σ²D/2` and `B = (P_g/K)·Σc_k`, so `λ* = A/B`.
///
/// If every gain is zero the factor is defined as 1. If `B ≤ 0` the MSE is
/// decreasing in `λ` and the returned factor is `+∞` (the estimate collapses
/// to zero).
pub fn min_mse_denoiser(
    config: &SystemConfig,
    realization: &ChannelRealization,
    phases: &RisPhases,
    sqrt_p: &[f64],
    grad_power: f64,
    dim: usize,
) -> Result<f64> {
    if !(grad_power > 0.0) {
        return Err(invalid("gradient power must be positive"));
    }
    let (a, b) = min_mse_quadratic(config, realization, phases, sqrt_p, grad_power, dim)?;
    Ok(if a == 0.0 && b == 0.0 {
        1.0
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        a / b
    })
}

/// Coefficients `(A, B)` of the conditional MSE `μ²A − 2μB + P_g/K`.
pub fn min_mse_quadratic(
    config: &SystemConfig,
    realization: &ChannelRealization,
    phases: &RisPhases,
    sqrt_p: &[f64],
    grad_power: f64,
    dim: usize,
) -> Result<(f64, f64)> {
    let (ct, ci) = realized_gains(realization, phases, sqrt_p, &interferer_sqrt_p(config))?;
    let k = ct.len() as f64;
    let a = grad_power * ct.iter().map(|c| c * c).sum::<f64>()
        + ci.iter().map(|c| c * c).sum::<f64>()
        + config.noise_variance() * dim as f64 / 2.0;
    let b = grad_power / k * ct.iter().sum::<f64>();
    Ok((a, b))
}

/// Complete per-round recipe: transmit scaling, phase policy and receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    SchemeI,
    #[serde(rename = "scheme_ii")]
    SchemeII,
    BevRandomPhase,
    BevRoundRobin,
    BevMinMse,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::SchemeI,
        Strategy::SchemeII,
        Strategy::BevRandomPhase,
        Strategy::BevRoundRobin,
        Strategy::BevMinMse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SchemeI => "scheme_i",
            Self::SchemeII => "scheme_ii",
            Self::BevRandomPhase => "bev_random_phase",
            Self::BevRoundRobin => "bev_round_robin",
            Self::BevMinMse => "bev_min_mse",
        }
    }

    /// Whether the closed-form MSE and moment targets apply.
    pub fn has_closed_form(&self) -> bool {
        matches!(self, Self::SchemeI | Self::SchemeII)
    }

    pub fn policy(&self) -> PhasePolicy {
        match self {
            Self::SchemeI | Self::SchemeII | Self::BevMinMse => PhasePolicy::Aligned,
            Self::BevRandomPhase => PhasePolicy::Random,
            Self::BevRoundRobin => PhasePolicy::RoundRobin,
        }
    }

    /// Round-independent parameters. For [`Strategy::BevMinMse`] the `λ`
    /// here is only a placeholder; [`Strategy::round_setup`] replaces it.
    pub fn base_params(&self, config: &SystemConfig, beta: &[f64]) -> Result<SchemeParams> {
        match self {
            Self::SchemeI => scheme1_params(config, beta),
            Self::SchemeII => scheme2_params(config, beta),
            Self::BevRandomPhase | Self::BevRoundRobin => {
                bev_params(config, beta, LambdaRule::MatchMean(self.policy()))
            }
            Self::BevMinMse => {
                let mut p = bev_params(config, beta, LambdaRule::MatchMean(PhasePolicy::Aligned))?;
                p.scheme = SchemeId::BevMinMse;
                Ok(p)
            }
        }
    }

    /// Phases and final parameters for round `round` of a realization.
    #[allow(clippy::too_many_arguments)]
    pub fn round_setup(
        &self,
        config: &SystemConfig,
        base: &SchemeParams,
        realization: &ChannelRealization,
        round: u64,
        phase_stream: &RngStream,
        grad_power: f64,
        dim: usize,
    ) -> Result<(SchemeParams, RisPhases)> {
        let phases = match self.policy() {
            PhasePolicy::Aligned => aligned_phases(&realization.h_p, realization.target_channels(), &base.w)?,
            PhasePolicy::Random => random_phases(realization.ris_elements(), phase_stream)?,
            PhasePolicy::RoundRobin => {
                let s = (round % realization.targets() as u64) as usize;
                round_robin_phases(&realization.h_p, &realization.target_channels()[s])?
            }
        };
        let mut params = base.clone();
        if *self == Self::BevMinMse {
            params.lambda = min_mse_denoiser(config, realization, &phases, &base.sqrt_p, grad_power, dim)?;
        }
        Ok((params, phases))
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown strategy '{s}'")))
    }
}

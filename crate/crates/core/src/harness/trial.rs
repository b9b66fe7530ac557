//! Per-trial channel, phase and parameter setup shared by every Monte Carlo
//! experiment.

use crate::channel::{draw_geometry, draw_realization, ChannelRealization, SystemConfig};
use crate::error::{invalid, Result};
use crate::ris::{PhaseImpairment, RisPhases};
use crate::schemes::{SchemeParams, Strategy};
use crate::stats::RngStream;

/// Large-scale coefficients drawn from `system.seed`.
///
/// Training runs and Monte Carlo experiments with equal seeds see the same
/// device placement.
pub fn experiment_geometry(system: &SystemConfig) -> Result<Vec<f64>> {
    draw_geometry(system, &RngStream::root(system.seed).child("geometry", 0))
}

/// Stream of Monte Carlo trial `t`. Its children `chan`, `phase`, `impair`,
/// `intf` and `noise` drive the independent random parts, so strategies
/// compared under one seed share channel draws.
pub fn trial_stream(seed: u64, t: u64) -> RngStream {
    RngStream::root(seed).child("trial", t)
}

/// A strategy bound to a system, its geometry and a phase impairment.
#[derive(Clone, Debug)]
pub struct TrialContext {
    pub system: SystemConfig,
    pub beta: Vec<f64>,
    pub strategy: Strategy,
    pub impairment: PhaseImpairment,
    pub lambda_scale: f64,
    base: SchemeParams,
}

/// Everything random about one trial.
#[derive(Clone, Debug)]
pub struct TrialDraw {
    pub realization: ChannelRealization,
    pub phases: RisPhases,
    pub params: SchemeParams,
}

impl TrialContext {
    /// Context over the seed's own geometry.
    pub fn new(system: &SystemConfig, strategy: Strategy) -> Result<Self> {
        let beta = experiment_geometry(system)?;
        Self::with_beta(system, beta, strategy)
    }

    pub fn with_beta(system: &SystemConfig, beta: Vec<f64>, strategy: Strategy) -> Result<Self> {
        let base = strategy.base_params(system, &beta)?;
        Ok(Self {
            system: system.clone(),
            beta,
            strategy,
            impairment: PhaseImpairment::Ideal,
            lambda_scale: 1.0,
            base,
        })
    }

    pub fn with_impairment(mut self, impairment: PhaseImpairment) -> Self {
        self.impairment = impairment;
        self
    }

    /// Multiplies every denoising factor by `scale`.
    pub fn with_lambda_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("lambda scale must be positive"));
        }
        self.lambda_scale = scale;
        Ok(self)
    }

    /// Round-independent parameters, with the scale applied.
    pub fn base_params(&self) -> SchemeParams {
        self.base.clone().with_lambda_scale(self.lambda_scale)
    }

    /// Channel, phases and parameters of trial `t`. `grad_power` and `dim`
    /// feed the per-round denoiser of [`Strategy::BevMinMse`].
    pub fn draw(&self, stream: &RngStream, t: u64, grad_power: f64, dim: usize) -> Result<TrialDraw> {
        let realization = draw_realization(&self.system, &self.beta, &stream.child("chan", 0))?;
        let (params, phases) = self.strategy.round_setup(
            &self.system,
            &self.base,
            &realization,
            t,
            &stream.child("phase", 0),
            grad_power,
            dim,
        )?;
        let phases = self.impairment.apply(phases, &stream.child("impair", 0))?;
        Ok(TrialDraw {
            realization,
            phases,
            params: params.with_lambda_scale(self.lambda_scale),
        })
    }
}

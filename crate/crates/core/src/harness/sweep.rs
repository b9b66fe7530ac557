//! One-dimensional parameter sweeps of the normalized MSE.

use serde::{Deserialize, Serialize};

use crate::aircomp::InterferenceMode;
use crate::channel::{dbm_to_watts, SystemConfig};
use crate::error::{invalid, Result};
use crate::harness::mse::{correlated_gradients, empirical_mse, GradientSource};
use crate::harness::table::{ResultTable, TableRow};
use crate::harness::{Executor, TrialContext};
use crate::ris::PhaseImpairment;
use crate::schemes::Strategy;
use crate::stats::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    RisElements,
    MaxPowerDbm,
    Targets,
    Interferers,
    /// Phase resolution in bits; the value 0 stands for continuous phases.
    QuantizationBits,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RisElements => "ris_elements",
            Self::MaxPowerDbm => "max_power_dbm",
            Self::Targets => "targets",
            Self::Interferers => "interferers",
            Self::QuantizationBits => "quantization_bits",
        }
    }

    fn is_integral(&self) -> bool {
        !matches!(self, Self::MaxPowerDbm)
    }
}

/// Synthetic gradient set used by every sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticGradients {
    pub dim: usize,
    /// Pairwise correlation of the target gradients, in [0, 1].
    pub correlation: f64,
}

impl Default for SyntheticGradients {
    fn default() -> Self {
        Self { dim: 210, correlation: 0.0 }
    }
}

/// Everything about a sweep except the axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub strategies: Vec<Strategy>,
    pub impairment: PhaseImpairment,
    pub interference: InterferenceMode,
    pub gradients: SyntheticGradients,
    pub trials: u64,
    pub lambda_scale: f64,
}

/// The system and impairment of one sweep point.
pub fn apply_axis(base: &SystemConfig, impairment: PhaseImpairment, axis: SweepAxis, value: f64) -> Result<(SystemConfig, PhaseImpairment)> {
    if !value.is_finite() || (axis.is_integral() && (value < 0.0 || value.fract() != 0.0)) {
        return Err(invalid(format!("{} cannot take the value {value}", axis.name())));
    }
    let mut c = base.clone();
    let mut imp = impairment;
    let v = value as usize;
    match axis {
        SweepAxis::RisElements => c.ris_elements = v,
        SweepAxis::MaxPowerDbm => c.max_power = dbm_to_watts(value),
        SweepAxis::Targets => c.targets = v,
        SweepAxis::Interferers => c.interferers = v,
        SweepAxis::QuantizationBits => {
            imp = if v == 0 { PhaseImpairment::Ideal } else { PhaseImpairment::Quantized { bits: v as u32 } }
        }
    }
    c.validate()?;
    Ok((c, imp))
}

/// Empirical and closed-form normalized MSE of every strategy at every
/// axis value. Geometry, gradients and per-trial randomness all derive from
/// `base.seed`.
pub fn sweep(base: &SystemConfig, axis: SweepAxis, values: &[f64], settings: &SweepSettings, exec: &Executor) -> Result<ResultTable> {
    if values.is_empty() {
        return Err(invalid("sweep needs at least one axis value"));
    }
    if settings.strategies.is_empty() {
        return Err(invalid("sweep needs at least one strategy"));
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for &value in &values {
        let (system, impairment) = apply_axis(base, settings.impairment, axis, value)?;
        let grads = correlated_gradients(
            system.targets,
            settings.gradients.dim,
            system.gradient_bound,
            settings.gradients.correlation,
            &RngStream::root(system.seed).child("gradients", 0),
        )?;
        let source = GradientSource::Fixed(grads);
        for &strategy in &settings.strategies {
            let ctx = TrialContext::new(&system, strategy)?
                .with_impairment(impairment)
                .with_lambda_scale(settings.lambda_scale)?;
            let est = empirical_mse(&ctx, &source, settings.interference, settings.trials, exec)?;
            let cf = est.closed_form.as_ref();
            rows.push(TableRow {
                axis: value,
                scheme: strategy.name().to_owned(),
                empirical: est.total.mean,
                closed_form: cf.map(|c| c.total),
                stderr: est.total.stderr,
                computation: est.computation,
                interference: est.interference,
                noise: est.noise,
                closed_form_computation: cf.map(|c| c.computation),
                closed_form_interference: cf.map(|c| c.interference),
                closed_form_noise: cf.map(|c| c.noise),
            });
        }
    }
    Ok(ResultTable {
        axis_name: axis.name().to_owned(),
        rows,
        metadata: serde_json::json!({
            "system": base,
            "axis": axis,
            "values": values,
            "settings": settings,
            "seed": base.seed,
        }),
    })
}

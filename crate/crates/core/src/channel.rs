//! Large-scale geometry, small-scale Rayleigh fading and the cascaded
//! device → RIS → PS coefficient.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::ris::RisPhases;
use crate::stats::{sample_complex_gaussian, ComplexVector, RngStream};

/// Converts a dBm value to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Scenario constants shared by every round of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of target devices `K`.
    pub targets: usize,
    /// Number of interference sources `M`.
    pub interferers: usize,
    /// Number of RIS reflecting elements `N`.
    pub ris_elements: usize,
    /// Per-device maximum transmit power, watts.
    pub max_power: f64,
    /// Interferer transmit power, watts. Falls back to `max_power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interferer_power: Option<f64>,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Euclidean-norm bound `G` on local gradients.
    pub gradient_bound: f64,
    pub pathloss_exponent: f64,
    /// Meters.
    pub ps_ris_distance: f64,
    /// Radius of the disk (centered at the RIS) holding every device, meters.
    pub device_disk_radius: f64,
    /// Amplitude gain of a single link at 1 m.
    pub reference_gain: f64,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            targets: 20,
            interferers: 10,
            ris_elements: 256,
            max_power: dbm_to_watts(0.0),
            interferer_power: None,
            noise_psd: dbm_to_watts(-140.0),
            bandwidth: 1e6,
            gradient_bound: 1.0,
            pathloss_exponent: 2.2,
            ps_ris_distance: 200.0,
            device_disk_radius: 300.0,
            reference_gain: 1.0,
            seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.targets == 0 {
            return Err(invalid("at least one target device is required"));
        }
        if self.ris_elements == 0 {
            return Err(invalid("RIS must have at least one element"));
        }
        let positive = [
            ("max_power", self.max_power),
            ("noise_psd", self.noise_psd),
            ("bandwidth", self.bandwidth),
            ("gradient_bound", self.gradient_bound),
            ("ps_ris_distance", self.ps_ris_distance),
            ("reference_gain", self.reference_gain),
            ("interferer_power", self.interferer_power()),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.pathloss_exponent >= 0.0) {
            return Err(invalid("pathloss_exponent must be nonnegative"));
        }
        if !(self.device_disk_radius >= 0.0) {
            return Err(invalid("device_disk_radius must be nonnegative"));
        }
        Ok(())
    }

    /// Noise variance `σ² = N₀·B`.
    pub fn noise_variance(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    pub fn interferer_power(&self) -> f64 {
        self.interferer_power.unwrap_or(self.max_power)
    }

    pub fn devices(&self) -> usize {
        self.targets + self.interferers
    }
}

/// Amplitude-domain path gain `g₀·d^(−γ/2)`.
pub fn amplitude_path_gain(distance: f64, exponent: f64, reference_gain: f64) -> Result<f64> {
    if !(distance >= 1.0) {
        return Err(invalid(format!("distance {distance} m is below the 1 m reference")));
    }
    Ok(reference_gain * distance.powf(-exponent / 2.0))
}

/// Device-to-RIS distances for all `K + M` devices, placed uniformly in the
/// disk around the RIS. Not clamped.
pub fn draw_device_distances(config: &SystemConfig, stream: &RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    (0..config.devices())
        .map(|_| config.device_disk_radius * rng.random::<f64>().sqrt())
        .collect()
}

/// Equivalent large-scale coefficients `β_i`, targets first.
///
/// Each `β_i` is the product of the RIS–PS and device–RIS amplitude gains.
/// Distances under 1 m are clamped to 1 m.
pub fn draw_geometry(config: &SystemConfig, stream: &RngStream) -> Result<Vec<f64>> {
    config.validate()?;
    let ps_gain = amplitude_path_gain(
        config.ps_ris_distance.max(1.0),
        config.pathloss_exponent,
        config.reference_gain,
    )?;
    draw_device_distances(config, stream)
        .into_iter()
        .map(|d| {
            amplitude_path_gain(d.max(1.0), config.pathloss_exponent, config.reference_gain)
                .map(|g| g * ps_gain)
        })
        .collect()
}

/// One block-fading draw of every small-scale vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// RIS → PS channel.
    pub h_p: ComplexVector,
    /// Device → RIS channels, targets first then interferers.
    pub h_r: Vec<ComplexVector>,
    /// Large-scale coefficients aligned with `h_r`.
    pub beta: Vec<f64>,
    targets: usize,
}

impl ChannelRealization {
    pub fn new(
        h_p: ComplexVector,
        h_r: Vec<ComplexVector>,
        beta: Vec<f64>,
        targets: usize,
    ) -> Result<Self> {
        check_len(h_r.len(), beta.len(), "beta vs device channels")?;
        if targets == 0 || targets > h_r.len() {
            return Err(invalid("target count must be in 1..=devices"));
        }
        for h in &h_r {
            check_len(h_p.len(), h.len(), "device channel length")?;
        }
        if beta.iter().any(|b| !(*b > 0.0)) {
            return Err(invalid("large-scale coefficients must be positive"));
        }
        Ok(Self {
            h_p,
            h_r,
            beta,
            targets,
        })
    }

    pub fn ris_elements(&self) -> usize {
        self.h_p.len()
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    pub fn interferers(&self) -> usize {
        self.h_r.len() - self.targets
    }

    pub fn target_channels(&self) -> &[ComplexVector] {
        &self.h_r[..self.targets]
    }

    pub fn interferer_channels(&self) -> &[ComplexVector] {
        &self.h_r[self.targets..]
    }
}

/// Fresh small-scale fading for one round. `h_p` is drawn first, then each
/// device channel in index order, all from the start of `stream`.
pub fn draw_realization(
    config: &SystemConfig,
    betas: &[f64],
    stream: &RngStream,
) -> Result<ChannelRealization> {
    check_len(config.devices(), betas.len(), "betas")?;
    let n = config.ris_elements;
    let mut rng = stream.rng();
    let h_p = ComplexVector::new(sample_complex_gaussian(&mut rng, n))?;
    let h_r = (0..config.devices())
        .map(|_| ComplexVector::new(sample_complex_gaussian(&mut rng, n)))
        .collect::<Result<Vec<_>>>()?;
    ChannelRealization::new(h_p, h_r, betas.to_vec(), config.targets)
}

/// Per-element reflected PS weights `conj(h_{p,n})·e^{jθ_n}`.
///
/// Computing these once per round turns every device's coefficient into a
/// single inner product, see [`cascade_real`].
pub fn cascade_weights(h_p: &ComplexVector, phases: &RisPhases) -> Result<Vec<Complex64>> {
    check_len(h_p.len(), phases.len(), "phases")?;
    Ok(h_p
        .iter()
        .zip(phases.iter())
        .map(|(h, &theta)| h.conj() * Complex64::cis(theta))
        .collect())
}

/// `Re{Σ_n weights_n · h_{r,n}}`.
pub fn cascade_real(weights: &[Complex64], h_r: &ComplexVector) -> Result<f64> {
    check_len(weights.len(), h_r.len(), "device channel")?;
    Ok(weights
        .iter()
        .zip(h_r.iter())
        .map(|(w, h)| w.re * h.re - w.im * h.im)
        .sum())
}

/// The real cascaded reflection sum `u = Re{h_pᴴ Θ h_r}`.
pub fn effective_coefficient(h_p: &ComplexVector, phases: &RisPhases, h_r: &ComplexVector) -> Result<f64> {
    cascade_real(&cascade_weights(h_p, phases)?, h_r)
}

/// `ℓ = β·√p·u / λ`.
pub fn aggregation_coefficient(beta: f64, power: f64, lambda: f64, u: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("denoising factor must be positive, got {lambda}")));
    }
    if !(power >= 0.0) {
        return Err(invalid(format!("transmit power must be nonnegative, got {power}")));
    }
    Ok(beta * power.sqrt() * u / lambda)
}

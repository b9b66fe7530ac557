//! RIS phase-shift policies and hardware impairments.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::stats::{sample_uniform_angle, wrap_angle, ComplexVector, RngStream};

/// Per-element phase shifts, each in [0, 2π).
#[derive(Clone, Debug, PartialEq)]
pub struct RisPhases(Vec<f64>);

impl RisPhases {
    /// Wraps every entry onto [0, 2π).
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(invalid("phase vector must be non-empty"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(invalid("phase shifts must be finite"));
        }
        Ok(Self(theta.into_iter().map(wrap_angle).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Diagonal of the reflection matrix, `e^{jθ_n}`.
    pub fn reflection(&self) -> Vec<Complex64> {
        self.0.iter().map(|&t| Complex64::cis(t)).collect()
    }
}

/// Angle of `z`, with the angle of zero defined as 0.
fn angle(z: Complex64) -> f64 {
    if z == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        z.arg()
    }
}

/// Phase rule that co-phases the PS channel with the weighted sum of the
/// target channels:
/// `θ_n = −∠conj(h_{p,n}) + ∠Σ_k w_k·conj(h_{r,k,n})`.
///
/// Every target keeps a coherent mean gain proportional to its weight while
/// any channel independent of the targets (an interferer) averages to zero.
pub fn aligned_phases(h_p: &ComplexVector, targets: &[ComplexVector], weights: &[f64]) -> Result<RisPhases> {
    if targets.is_empty() {
        return Err(invalid("at least one target channel is required"));
    }
    check_len(targets.len(), weights.len(), "weights")?;
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(invalid("weight factors must be positive"));
    }
    for h in targets {
        check_len(h_p.len(), h.len(), "target channel")?;
    }
    let theta = (0..h_p.len())
        .map(|n| {
            let combined: Complex64 = targets
                .iter()
                .zip(weights)
                .map(|(h, &w)| h[n].conj() * w)
                .sum();
            -angle(h_p[n].conj()) + angle(combined)
        })
        .collect();
    RisPhases::new(theta)
}

/// I.i.d. uniform phases.
pub fn random_phases(n: usize, stream: &RngStream) -> Result<RisPhases> {
    if n == 0 {
        return Err(invalid("RIS must have at least one element"));
    }
    let mut rng = stream.rng();
    RisPhases::new((0..n).map(|_| sample_uniform_angle(&mut rng)).collect())
}

/// Aligns the RIS to a single scheduled device.
pub fn round_robin_phases(h_p: &ComplexVector, scheduled: &ComplexVector) -> Result<RisPhases> {
    aligned_phases(h_p, std::slice::from_ref(scheduled), &[1.0])
}

/// Rounds each phase to the nearest point of a `2^bits` uniform grid,
/// resolving exact ties toward the smaller grid point.
pub fn quantize_phases(phases: &RisPhases, bits: u32) -> Result<RisPhases> {
    if bits == 0 || bits > 30 {
        return Err(invalid(format!("phase resolution must be 1..=30 bits, got {bits}")));
    }
    let levels = 1u64 << bits;
    let step = TAU / levels as f64;
    let theta = phases
        .iter()
        .map(|&t| {
            let q = t / step;
            let lower = q.floor();
            let k = if q - lower > 0.5 { lower + 1.0 } else { lower };
            ((k as u64) % levels) as f64 * step
        })
        .collect();
    RisPhases::new(theta)
}

/// Adds i.i.d. U(−δ, δ) phase errors.
pub fn perturb_phases(phases: &RisPhases, delta: f64, stream: &RngStream) -> Result<RisPhases> {
    if !(0.0..=PI).contains(&delta) {
        return Err(invalid(format!("phase noise half-width must be in [0, π], got {delta}")));
    }
    let mut rng = stream.rng();
    RisPhases::new(
        phases
            .iter()
            .map(|&t| t + delta * (2.0 * rng.random::<f64>() - 1.0))
            .collect(),
    )
}

/// Hardware non-ideality applied on top of a phase policy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PhaseImpairment {
    #[default]
    Ideal,
    Quantized {
        bits: u32,
    },
    UniformNoise {
        delta: f64,
    },
}

impl PhaseImpairment {
    pub fn apply(&self, phases: RisPhases, stream: &RngStream) -> Result<RisPhases> {
        match *self {
            Self::Ideal => Ok(phases),
            Self::Quantized { bits } => quantize_phases(&phases, bits),
            Self::UniformNoise { delta } => perturb_phases(&phases, delta, stream),
        }
    }
}

/// How the RIS phases are chosen each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasePolicy {
    /// [`aligned_phases`] with the scheme's weight factors.
    Aligned,
    /// [`random_phases`].
    Random,
    /// [`round_robin_phases`] toward device `round mod K`.
    RoundRobin,
}

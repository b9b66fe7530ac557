//! One over-the-air aggregation round: superposition of every device's analog
//! signal through the RIS, additive receiver noise and the PS estimate.

use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{cascade_real, cascade_weights, ChannelRealization};
use crate::error::{check_len, invalid, Result};
use crate::ris::RisPhases;
use crate::schemes::SchemeParams;
use crate::stats::RngStream;

const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// Local gradients of the targets plus the unit-norm interfering signals.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    targets: Vec<Vec<f64>>,
    interferers: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn new(targets: Vec<Vec<f64>>, interferers: Vec<Vec<f64>>) -> Result<Self> {
        let dim = targets
            .first()
            .map(Vec::len)
            .ok_or_else(|| invalid("at least one target gradient is required"))?;
        if dim == 0 {
            return Err(invalid("gradient dimension must be positive"));
        }
        for g in targets.iter().chain(&interferers) {
            check_len(dim, g.len(), "gradient dimension")?;
        }
        for g in &interferers {
            let norm = l2_norm(g);
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(invalid(format!("interfering signal must have unit norm, got {norm}")));
            }
        }
        Ok(Self {
            targets,
            interferers,
        })
    }

    pub fn dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn interferers(&self) -> &[Vec<f64>] {
        &self.interferers
    }
}

/// Estimation error of one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundErrorStats {
    /// `ĝ − (1/K)Σg_k`.
    pub epsilon: Vec<f64>,
    /// `‖epsilon‖²`.
    pub sq_norm: f64,
    /// `‖Σ(ℓ_k − 1/K)g_k‖²`.
    pub computation_sq: f64,
    /// `‖Σℓ_m g̃_m‖²`.
    pub interference_sq: f64,
    /// `‖Re{z}/λ‖²`.
    pub noise_sq: f64,
}

/// What the interferers transmit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceMode {
    /// Independent isotropic unit vectors.
    #[default]
    RandomUnit,
    /// `−c/‖c‖` for a context gradient `c`, pushing the aggregate toward zero.
    ZeroGradientAttack,
    /// The first standard basis vector.
    ConstantUnit,
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_unit_vectors(m: usize, d: usize, stream: &RngStream) -> Vec<Vec<f64>> {
    let mut rng = stream.rng();
    (0..m)
        .map(|_| loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = l2_norm(&v);
            if norm > 0.0 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// `m` unit-norm interfering signals of dimension `d`.
///
/// The attack needs a nonzero context; without one it falls back to
/// [`InterferenceMode::RandomUnit`].
pub fn make_interference(
    mode: InterferenceMode,
    m: usize,
    d: usize,
    context: Option<&[f64]>,
    stream: &RngStream,
) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Err(invalid("gradient dimension must be positive"));
    }
    match mode {
        InterferenceMode::RandomUnit => Ok(random_unit_vectors(m, d, stream)),
        InterferenceMode::ConstantUnit => {
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            Ok(vec![e1; m])
        }
        InterferenceMode::ZeroGradientAttack => {
            let usable = context.filter(|c| l2_norm(c) > 0.0);
            match usable {
                Some(c) => {
                    check_len(d, c.len(), "attack context")?;
                    let norm = l2_norm(c);
                    let v: Vec<f64> = c.iter().map(|x| -x / norm).collect();
                    Ok(vec![v; m])
                }
                None => {
                    if m > 0 {
                        log::debug!("zero-gradient attack without a usable context, sending random unit vectors");
                    }
                    Ok(random_unit_vectors(m, d, stream))
                }
            }
        }
    }
}

/// Realized aggregation coefficients `ℓ_k` and interference coefficients `ℓ_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundCoefficients {
    pub targets: Vec<f64>,
    pub interferers: Vec<f64>,
}

/// `ℓ_i = β_i·√p_i·u_i / λ` for every device under one realization and
/// phase configuration. An infinite `λ` gives all-zero coefficients.
pub fn round_coefficients(
    realization: &ChannelRealization,
    phases: &RisPhases,
    params: &SchemeParams,
) -> Result<RoundCoefficients> {
    if !(params.lambda > 0.0) {
        return Err(invalid(format!("denoising factor must be positive, got {}", params.lambda)));
    }
    let k = realization.targets();
    check_len(k, params.sqrt_p.len(), "target amplitudes")?;
    check_len(realization.interferers(), params.interferer_sqrt_p.len(), "interferer amplitudes")?;
    let weights = cascade_weights(&realization.h_p, phases)?;
    let coefficient = |(h, (s, b)): (&crate::stats::ComplexVector, (&f64, &f64))| -> Result<f64> {
        Ok(b * s * cascade_real(&weights, h)? / params.lambda)
    };
    let targets = realization
        .target_channels()
        .iter()
        .zip(params.sqrt_p.iter().zip(&realization.beta[..k]))
        .map(coefficient)
        .collect::<Result<Vec<_>>>()?;
    let interferers = realization
        .interferer_channels()
        .iter()
        .zip(params.interferer_sqrt_p.iter().zip(&realization.beta[k..]))
        .map(coefficient)
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundCoefficients {
        targets,
        interferers,
    })
}

/// Arithmetic mean of the target gradients.
pub fn ideal_round(grads: &GradientSet) -> Vec<f64> {
    let k = grads.targets.len() as f64;
    let mut out = vec![0.0; grads.dim()];
    for g in &grads.targets {
        for (o, x) in out.iter_mut().zip(g) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|o| *o /= k);
    out
}

/// Simulates the received signal `y = Σ_i β_i√p_i(h_pᴴΘh_{r,i})g_i + z` with
/// `z ∼ CN(0, σ²I)` and returns `ĝ = Re{y}/λ` with its error against
/// [`ideal_round`].
pub fn ota_round(
    grads: &GradientSet,
    realization: &ChannelRealization,
    phases: &RisPhases,
    params: &SchemeParams,
    sigma2: f64,
    stream: &RngStream,
) -> Result<(Vec<f64>, RoundErrorStats)> {
    let coeffs = round_coefficients(realization, phases, params)?;
    combine(grads, &coeffs, params.lambda, sigma2, stream)
}

/// The estimate for already-computed coefficients.
pub fn combine(
    grads: &GradientSet,
    coeffs: &RoundCoefficients,
    lambda: f64,
    sigma2: f64,
    stream: &RngStream,
) -> Result<(Vec<f64>, RoundErrorStats)> {
    check_len(grads.targets.len(), coeffs.targets.len(), "target coefficients")?;
    check_len(grads.interferers.len(), coeffs.interferers.len(), "interferer coefficients")?;
    if !(sigma2 >= 0.0) {
        return Err(invalid("noise variance must be nonnegative"));
    }
    let d = grads.dim();
    let inv_k = 1.0 / grads.targets.len() as f64;
    let mut computation = vec![0.0; d];
    for (g, l) in grads.targets.iter().zip(&coeffs.targets) {
        let c = l - inv_k;
        for (o, x) in computation.iter_mut().zip(g) {
            *o += c * x;
        }
    }
    let mut interference = vec![0.0; d];
    for (g, l) in grads.interferers.iter().zip(&coeffs.interferers) {
        for (o, x) in interference.iter_mut().zip(g) {
            *o += l * x;
        }
    }
    let noise_sd = (sigma2 / 2.0).sqrt() / lambda;
    let noise: Vec<f64> = if noise_sd > 0.0 {
        let normal = Normal::new(0.0, noise_sd).map_err(|e| invalid(e.to_string()))?;
        let mut rng = stream.rng();
        (0..d).map(|_| normal.sample(&mut rng)).collect()
    } else {
        vec![0.0; d]
    };
    let ideal = ideal_round(grads);
    let epsilon: Vec<f64> = (0..d)
        .map(|j| computation[j] + interference[j] + noise[j])
        .collect();
    let estimate: Vec<f64> = ideal.iter().zip(&epsilon).map(|(g, e)| g + e).collect();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let stats = RoundErrorStats {
        sq_norm: sq(&epsilon),
        computation_sq: sq(&computation),
        interference_sq: sq(&interference),
        noise_sq: sq(&noise),
        epsilon,
    };
    Ok((estimate, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization, effective_coefficient, SystemConfig};
    use crate::ris::aligned_phases;
    use crate::schemes::{scheme1_params, SchemeId};
    use crate::stats::MomentAccumulator;

    fn small_config(k: usize, m: usize, n: usize) -> SystemConfig {
        SystemConfig {
            targets: k,
            interferers: m,
            ris_elements: n,
            ..SystemConfig::default()
        }
    }

    fn params(k: usize, m: usize, lambda: f64) -> SchemeParams {
        SchemeParams {
            scheme: SchemeId::SchemeI,
            sqrt_p: vec![1.0; k],
            w: vec![1.0; k],
            lambda,
            interferer_sqrt_p: vec![1.0; m],
        }
    }

    #[test]
    fn interference_is_unit_norm() {
        let s = RngStream::root(3);
        let ctx = [3.0, -4.0, 0.0];
        for mode in [
            InterferenceMode::RandomUnit,
            InterferenceMode::ZeroGradientAttack,
            InterferenceMode::ConstantUnit,
        ] {
            for v in make_interference(mode, 4, 3, Some(&ctx), &s).unwrap() {
                assert!((l2_norm(&v) - 1.0).abs() < 1e-12);
            }
        }
        let attack = make_interference(InterferenceMode::ZeroGradientAttack, 2, 3, Some(&ctx), &s).unwrap();
        assert_eq!(attack[0], vec![-0.6, 0.8, -0.0]);
        let fallback = make_interference(InterferenceMode::ZeroGradientAttack, 1, 3, Some(&[0.0; 3]), &s).unwrap();
        assert!((l2_norm(&fallback[0]) - 1.0).abs() < 1e-12);
        assert!(make_interference(InterferenceMode::RandomUnit, 1, 0, None, &s).is_err());
    }

    #[test]
    fn random_unit_is_isotropic() {
        let d = 10_000;
        let mut acc = MomentAccumulator::default();
        let s = RngStream::root(5);
        let vs = make_interference(InterferenceMode::RandomUnit, 10_000, d, None, &s).unwrap();
        for v in vs {
            acc.push(v[0]);
        }
        assert!(acc.mean().abs() < 0.02);
    }

    #[test]
    fn gradient_set_validation() {
        assert!(GradientSet::new(vec![], vec![]).is_err());
        assert!(GradientSet::new(vec![vec![1.0]], vec![vec![2.0]]).is_err());
        assert!(GradientSet::new(vec![vec![1.0, 2.0]], vec![vec![1.0]]).is_err());
        assert!(GradientSet::new(vec![vec![1.0]], vec![vec![-1.0]]).is_ok());
    }

    #[test]
    fn ideal_round_examples() {
        let g = GradientSet::new(vec![vec![1.0, 2.0]; 3], vec![]).unwrap();
        assert_eq!(ideal_round(&g), vec![1.0, 2.0]);
        let g = GradientSet::new(vec![vec![1.0, -2.0], vec![-1.0, 2.0]], vec![]).unwrap();
        assert_eq!(ideal_round(&g), vec![0.0, 0.0]);
    }

    #[test]
    fn zero_inputs_give_zero_estimate() {
        let c = small_config(3, 0, 8);
        let r = draw_realization(&c, &[1.0; 3], &RngStream::root(1)).unwrap();
        let ph = aligned_phases(&r.h_p, r.target_channels(), &[1.0; 3]).unwrap();
        let g = GradientSet::new(vec![vec![0.0; 4]; 3], vec![]).unwrap();
        let (est, st) = ota_round(&g, &r, &ph, &params(3, 0, 2.0), 0.0, &RngStream::root(2)).unwrap();
        assert!(est.iter().all(|x| *x == 0.0));
        assert_eq!(st.sq_norm, 0.0);
    }

    #[test]
    fn genie_denoiser_recovers_single_gradient() {
        let c = small_config(1, 0, 16);
        let r = draw_realization(&c, &[0.7], &RngStream::root(9)).unwrap();
        let ph = aligned_phases(&r.h_p, r.target_channels(), &[1.0]).unwrap();
        let u = effective_coefficient(&r.h_p, &ph, &r.h_r[0]).unwrap();
        let mut p = params(1, 0, 1.0);
        p.sqrt_p = vec![1.3];
        p.lambda = 0.7 * 1.3 * u;
        let g = GradientSet::new(vec![vec![0.5, -1.5, 2.0]], vec![]).unwrap();
        let (est, _) = ota_round(&g, &r, &ph, &p, 0.0, &RngStream::root(0)).unwrap();
        for (a, b) in est.iter().zip(&g.targets()[0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn estimate_is_linear() {
        let c = small_config(2, 0, 8);
        let r = draw_realization(&c, &[1.0, 0.5], &RngStream::root(4)).unwrap();
        let ph = aligned_phases(&r.h_p, r.target_channels(), &[1.0; 2]).unwrap();
        let g = GradientSet::new(vec![vec![1.0, 2.0], vec![-0.5, 0.25]], vec![]).unwrap();
        let g3 = GradientSet::new(vec![vec![3.0, 6.0], vec![-1.5, 0.75]], vec![]).unwrap();
        let p = params(2, 0, 3.0);
        let (a, _) = ota_round(&g, &r, &ph, &p, 0.0, &RngStream::root(0)).unwrap();
        let (b, _) = ota_round(&g3, &r, &ph, &p, 0.0, &RngStream::root(0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((3.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_only_variance() {
        let c = small_config(1, 0, 4);
        let r = draw_realization(&c, &[1.0], &RngStream::root(4)).unwrap();
        let ph = aligned_phases(&r.h_p, r.target_channels(), &[1.0]).unwrap();
        let g = GradientSet::new(vec![vec![0.0; 1000]], vec![]).unwrap();
        let (sigma2, lambda) = (2.0, 0.5);
        let (est, st) = ota_round(&g, &r, &ph, &params(1, 0, lambda), sigma2, &RngStream::root(8)).unwrap();
        let mut acc = MomentAccumulator::default();
        est.iter().for_each(|x| acc.push(*x));
        let expected = sigma2 / (2.0 * lambda * lambda);
        assert!((acc.second_moment() / expected - 1.0).abs() < 0.1);
        assert!((st.sq_norm - st.noise_sq).abs() < 1e-9);
    }

    #[test]
    fn sq_norm_matches_epsilon() {
        let c = small_config(3, 2, 8);
        let beta = [1.0, 0.8, 0.6, 0.9, 1.1];
        let p = scheme1_params(&c, &beta).unwrap();
        let r = draw_realization(&c, &beta, &RngStream::root(4)).unwrap();
        let ph = aligned_phases(&r.h_p, r.target_channels(), &p.w).unwrap();
        let intf = make_interference(InterferenceMode::RandomUnit, 2, 5, None, &RngStream::root(6)).unwrap();
        let g = GradientSet::new(vec![vec![0.1, 0.2, 0.3, 0.0, -0.1]; 3], intf).unwrap();
        let (_, st) = ota_round(&g, &r, &ph, &p, 1e-3, &RngStream::root(7)).unwrap();
        let direct: f64 = st.epsilon.iter().map(|x| x * x).sum();
        assert!((direct - st.sq_norm).abs() <= 1e-15 * direct.max(1.0));
    }

    #[test]
    fn nonpositive_lambda_rejected() {
        let c = small_config(1, 0, 4);
        let r = draw_realization(&c, &[1.0], &RngStream::root(4)).unwrap();
        let ph = aligned_phases(&r.h_p, r.target_channels(), &[1.0]).unwrap();
        let g = GradientSet::new(vec![vec![1.0]], vec![]).unwrap();
        assert!(ota_round(&g, &r, &ph, &params(1, 0, 0.0), 0.0, &RngStream::root(0)).is_err());
    }
}

//! Closed-form moments of the cascaded coefficients, MSE decompositions of the
//! two unbiased schemes and the nonconvex convergence bound.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::SystemConfig;
use crate::error::{check_len, invalid, Result};
use crate::schemes::{interferer_alphas, target_alphas, SchemeId, SchemeParams};

const PI2: f64 = PI * PI;

/// Second-order statistics of the local gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    /// `E[‖g_k‖²]` per target.
    pub self_moment: Vec<f64>,
    /// `E[g_kᵀg_k']`, symmetric; the diagonal is ignored.
    pub cross_moment: Vec<Vec<f64>>,
    /// Gradient dimension `D`, which scales the noise term.
    pub dim: usize,
}

impl GradientStats {
    pub fn new(self_moment: Vec<f64>, cross_moment: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        let k = self_moment.len();
        if k == 0 {
            return Err(invalid("gradient statistics need at least one target"));
        }
        if dim == 0 {
            return Err(invalid("gradient dimension must be positive"));
        }
        check_len(k, cross_moment.len(), "cross-moment rows")?;
        if self_moment.iter().any(|s| !(*s >= 0.0)) {
            return Err(invalid("self moments must be nonnegative"));
        }
        for (i, row) in cross_moment.iter().enumerate() {
            check_len(k, row.len(), "cross-moment columns")?;
            for (j, &c) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if (c - cross_moment[j][i]).abs() > 1e-9 * c.abs().max(1.0) {
                    return Err(invalid("cross moments must be symmetric"));
                }
                let bound = (self_moment[i] * self_moment[j]).sqrt();
                if c.abs() > bound * (1.0 + 1e-9) + 1e-300 {
                    return Err(invalid("cross moments violate Cauchy-Schwarz"));
                }
            }
        }
        Ok(Self {
            self_moment,
            cross_moment,
            dim,
        })
    }

    /// Equal power `power` per target and pairwise correlation `rho` in [−1, 1].
    pub fn homogeneous(k: usize, dim: usize, power: f64, rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(invalid("correlation must lie in [-1, 1]"));
        }
        let cross = (0..k)
            .map(|i| (0..k).map(|j| if i == j { power } else { rho * power }).collect())
            .collect();
        Self::new(vec![power; k], cross, dim)
    }

    /// Statistics of a fixed (deterministic) gradient set.
    pub fn from_fixed(grads: &[Vec<f64>]) -> Result<Self> {
        Self::from_samples(std::slice::from_ref(&grads.to_vec()))
    }

    /// Sample means over recorded rounds, each a list of `K` gradients.
    pub fn from_samples(rounds: &[Vec<Vec<f64>>]) -> Result<Self> {
        let first = rounds.first().ok_or_else(|| invalid("no gradient samples"))?;
        let k = first.len();
        let dim = first.first().map(Vec::len).unwrap_or(0);
        let mut cross = vec![vec![0.0; k]; k];
        for grads in rounds {
            check_len(k, grads.len(), "targets per round")?;
            for i in 0..k {
                check_len(dim, grads[i].len(), "gradient dimension")?;
                for j in i..k {
                    let dot: f64 = grads[i].iter().zip(&grads[j]).map(|(a, b)| a * b).sum();
                    cross[i][j] += dot;
                }
            }
        }
        let t = rounds.len() as f64;
        for i in 0..k {
            for j in i..k {
                cross[i][j] /= t;
                cross[j][i] = cross[i][j];
            }
        }
        let self_moment = (0..k).map(|i| cross[i][i]).collect();
        Self::new(self_moment, cross, dim)
    }

    pub fn targets(&self) -> usize {
        self.self_moment.len()
    }

    fn off_diagonal_sum(&self) -> f64 {
        let mut s = 0.0;
        for (i, row) in self.cross_moment.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if i != j {
                    s += c;
                }
            }
        }
        s
    }

    /// `E[‖(1/K)Σg_k‖²]`.
    pub fn global_power(&self) -> f64 {
        let k = self.targets() as f64;
        (self.self_moment.iter().sum::<f64>() + self.off_diagonal_sum()) / (k * k)
    }
}

/// Error components of one scheme, in squared gradient units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseBreakdown {
    pub scheme: SchemeId,
    pub computation: f64,
    pub interference: f64,
    pub noise: f64,
    pub total: f64,
}

impl MseBreakdown {
    fn from_parts(scheme: SchemeId, computation: f64, interference: f64, noise: f64) -> Self {
        Self {
            scheme,
            computation,
            interference,
            noise,
            total: computation + interference + noise,
        }
    }

    /// Every component divided by the power of the global gradient.
    pub fn normalized(&self, gstats: &GradientStats) -> Self {
        let p = gstats.global_power();
        Self::from_parts(self.scheme, self.computation / p, self.interference / p, self.noise / p)
    }
}

/// Constants of the convergence bound and its value after `T` rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBound {
    pub varpi: f64,
    pub epsilon_bias: f64,
    pub bound_at_t: f64,
}

/// Learning-problem constants feeding the convergence bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Smoothness constant `L`.
    pub smoothness: f64,
    /// Gradient dissimilarity `ξ`.
    pub dissimilarity: f64,
    /// Minibatch gradient variance `χ²`.
    pub sgd_variance: f64,
    /// Number of rounds `T`.
    pub rounds: u64,
    /// `F(w₀) − F*`.
    pub initial_gap: f64,
}

fn weight_energy(w: &[f64], k: usize, n: usize) -> Result<f64> {
    if w.is_empty() {
        return Err(invalid("weight vector is empty"));
    }
    if k >= w.len() {
        return Err(invalid(format!("device index {k} out of range")));
    }
    if n == 0 {
        return Err(invalid("RIS must have at least one element"));
    }
    if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(invalid("weight factors must be positive"));
    }
    Ok(w.iter().map(|x| x * x).sum())
}

/// `E[u_k] = πN·w_k / (4√Σw_i²)` under aligned phases.
pub fn mean_u(w: &[f64], k: usize, n: usize) -> Result<f64> {
    let e = weight_energy(w, k, n)?;
    Ok(PI * n as f64 * w[k] / (4.0 * e.sqrt()))
}

/// `E[u_k²] = N/2 + (8N + π²N(N−1))/16 · w_k²/Σw_i²`.
pub fn second_moment_u(w: &[f64], k: usize, n: usize) -> Result<f64> {
    let e = weight_energy(w, k, n)?;
    let n = n as f64;
    Ok(n / 2.0 + (8.0 * n + PI2 * n * (n - 1.0)) / 16.0 * w[k] * w[k] / e)
}

/// `E[u_k u_k'] = (N/2 + π²N(N−1)/16) · w_k w_k' / Σw_i²` for `k ≠ k'`.
pub fn cross_moment_u(w: &[f64], k: usize, k2: usize, n: usize) -> Result<f64> {
    let e = weight_energy(w, k, n)?;
    weight_energy(w, k2, n)?;
    if k == k2 {
        return Err(invalid("cross moment needs two distinct devices"));
    }
    let n = n as f64;
    Ok((n / 2.0 + PI2 * n * (n - 1.0) / 16.0) * w[k] * w[k2] / e)
}

/// `E[u_m²] = N/2` for a device the phases ignore.
pub fn interferer_second_moment_u(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("RIS must have at least one element"));
    }
    Ok(n as f64 / 2.0)
}

/// Variances of `ℓ_k` (targets) and `ℓ_m` (interferers) under aligned phases.
pub fn coeff_variances(params: &SchemeParams, beta: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = params.sqrt_p.len();
    check_len(k + params.interferer_sqrt_p.len(), beta.len(), "beta")?;
    if !(params.lambda > 0.0) {
        return Err(invalid("denoising factor must be positive"));
    }
    let e = weight_energy(&params.w, 0, n)?;
    let nf = n as f64;
    let l2 = params.lambda * params.lambda;
    let targets = (0..k)
        .map(|i| {
            let gain = beta[i] * beta[i] * params.sqrt_p[i] * params.sqrt_p[i];
            gain / l2 * (nf / 2.0 + (8.0 - PI2) * params.w[i] * params.w[i] * nf / (16.0 * e))
        })
        .collect();
    let interferers = params
        .interferer_sqrt_p
        .iter()
        .zip(&beta[k..])
        .map(|(s, b)| b * b * s * s * nf / (2.0 * l2))
        .collect();
    Ok((targets, interferers))
}

fn require_unbiased(scheme: SchemeId) -> Result<()> {
    match scheme {
        SchemeId::SchemeI | SchemeId::SchemeII => Ok(()),
        other => Err(invalid(format!("no closed form for {other:?}"))),
    }
}

/// Computation, interference and noise MSE of Scheme I or Scheme II.
pub fn closed_form_mse(
    scheme: SchemeId,
    config: &SystemConfig,
    beta: &[f64],
    gstats: &GradientStats,
) -> Result<MseBreakdown> {
    require_unbiased(scheme)?;
    let alpha = target_alphas(config, beta)?;
    let alpha_m = interferer_alphas(config, beta)?;
    check_len(config.targets, gstats.targets(), "gradient statistics")?;
    let k = config.targets as f64;
    let n = config.ris_elements as f64;
    let g2 = config.gradient_bound * config.gradient_bound;
    let sigma2 = config.noise_variance();
    let d = gstats.dim as f64;
    let sum_am2: f64 = alpha_m.iter().map(|a| a * a).sum();
    let cross = (8.0 - PI2) / (PI2 * n * k * k) * gstats.off_diagonal_sum();
    let parts = match scheme {
        SchemeId::SchemeI => {
            let min_a = alpha.iter().copied().fold(f64::INFINITY, f64::min);
            let min_a2 = min_a * min_a;
            let own = (8.0 * (k + 1.0) - PI2) / (PI2 * n * k * k) * gstats.self_moment.iter().sum::<f64>();
            (
                own + cross,
                8.0 * g2 * sum_am2 / (PI2 * n * k * min_a2),
                8.0 * g2 * sigma2 * d / (PI2 * n * n * k * min_a2),
            )
        }
        _ => {
            let inv_sum: f64 = alpha.iter().map(|a| 1.0 / (a * a)).sum();
            let own: f64 = alpha
                .iter()
                .zip(&gstats.self_moment)
                .map(|(a, s)| (8.0 * (a * a * inv_sum + 1.0) - PI2) / (PI2 * n * k * k) * s)
                .sum();
            (
                own + cross,
                8.0 * g2 * sum_am2 * inv_sum / (PI2 * n * k * k),
                8.0 * g2 * sigma2 * d * inv_sum / (PI2 * n * n * k * k),
            )
        }
    };
    Ok(MseBreakdown::from_parts(scheme, parts.0, parts.1, parts.2))
}

/// Scaling constant `ϖ`, bias `ε` and bound value `(2ϖ/√T)(gap + ε/(2ϖ²))`.
///
/// As `N → ∞`, `ϖ → L` and `ε → L·χ²/K`.
pub fn convergence_bound(
    scheme: SchemeId,
    config: &SystemConfig,
    beta: &[f64],
    dim: usize,
    inputs: &BoundInputs,
) -> Result<ConvergenceBound> {
    require_unbiased(scheme)?;
    let BoundInputs {
        smoothness: l,
        dissimilarity: xi,
        sgd_variance: chi2,
        rounds,
        initial_gap,
    } = *inputs;
    for (name, v) in [
        ("smoothness", l),
        ("dissimilarity", xi),
        ("sgd_variance", chi2),
        ("initial_gap", initial_gap),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if rounds == 0 {
        return Err(invalid("rounds must be positive"));
    }
    let k = config.targets as f64;
    let n = config.ris_elements as f64;
    let alpha = target_alphas(config, beta)?;
    let unit = GradientStats::homogeneous(config.targets, dim, 0.0, 0.0)?;
    let mse = closed_form_mse(scheme, config, beta, &unit)?;
    let xi2 = xi * xi;
    let (varpi, eps) = match scheme {
        SchemeId::SchemeI => (
            ((16.0 - PI2) * xi2 / (PI2 * n) + 1.0) * l,
            ((8.0 * (k + 1.0) + PI2 * (n - 1.0)) / (PI2 * n * k) * chi2 + mse.interference + mse.noise) * l,
        ),
        _ => {
            let sa2: f64 = alpha.iter().map(|a| a * a).sum();
            let sai2: f64 = alpha.iter().map(|a| 1.0 / (a * a)).sum();
            (
                ((8.0 / (k * k) * sa2 * sai2 + 8.0 - PI2) / (PI2 * n) * xi2 + 1.0) * l,
                (((8.0 / k) * sa2 * sai2 + 8.0 + PI2 * (n - 1.0)) / (PI2 * n * k) * chi2
                    + mse.interference
                    + mse.noise)
                    * l,
            )
        }
    };
    let bound = 2.0 * varpi / (rounds as f64).sqrt() * (initial_gap + eps / (2.0 * varpi * varpi));
    Ok(ConvergenceBound {
        varpi,
        epsilon_bias: eps,
        bound_at_t: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{scheme1_params, scheme2_params};
    use approx::assert_relative_eq;

    fn unit_config(k: usize, m: usize, n: usize) -> SystemConfig {
        SystemConfig {
            targets: k,
            interferers: m,
            ris_elements: n,
            max_power: 1.0,
            gradient_bound: 1.0,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn mean_examples() {
        assert_relative_eq!(mean_u(&[1.0], 0, 4).unwrap(), PI, max_relative = 1e-14);
        assert_relative_eq!(mean_u(&[1.0, 2.0, 2.0], 0, 16).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert!(mean_u(&[], 0, 4).is_err());
        assert!(mean_u(&[1.0, 0.0], 0, 4).is_err());
    }

    #[test]
    fn second_moment_examples() {
        let m2 = second_moment_u(&[1.0], 0, 4).unwrap();
        assert_relative_eq!(m2, 4.0 + 0.75 * PI2, max_relative = 1e-14);
        let m1 = mean_u(&[1.0], 0, 4).unwrap();
        assert_relative_eq!(m2 - m1 * m1, 4.0 * (16.0 - PI2) / 16.0, max_relative = 1e-12);
    }

    #[test]
    fn cross_moment_examples() {
        assert_relative_eq!(cross_moment_u(&[1.0, 1.0], 0, 1, 2).unwrap(), 0.5 + PI2 / 16.0, max_relative = 1e-14);
        let w = [0.3, 1.2, 2.0];
        assert_eq!(cross_moment_u(&w, 0, 2, 9).unwrap(), cross_moment_u(&w, 2, 0, 9).unwrap());
        assert!(cross_moment_u(&w, 1, 1, 9).is_err());
    }

    #[test]
    fn interferer_moment_examples() {
        assert_eq!(interferer_second_moment_u(2).unwrap(), 1.0);
        assert_eq!(interferer_second_moment_u(256).unwrap(), 128.0);
    }

    #[test]
    fn interference_and_noise_examples() {
        let mut c = unit_config(1, 1, 4);
        c.noise_psd = 1.0;
        c.bandwidth = 1.0;
        let g = GradientStats::homogeneous(1, 1, 1.0, 0.0).unwrap();
        let mse = closed_form_mse(SchemeId::SchemeI, &c, &[1.0, 1.0], &g).unwrap();
        assert_relative_eq!(mse.interference, 2.0 / PI2, max_relative = 1e-14);
        assert_relative_eq!(mse.noise, 8.0 / (16.0 * PI2), max_relative = 1e-14);
        assert_relative_eq!(mse.total, mse.computation + mse.interference + mse.noise);
    }

    #[test]
    fn interference_vanishes_without_interferers() {
        let c = unit_config(3, 0, 16);
        let g = GradientStats::homogeneous(3, 10, 1.0, 0.2).unwrap();
        for s in [SchemeId::SchemeI, SchemeId::SchemeII] {
            assert_eq!(closed_form_mse(s, &c, &[1.0, 0.5, 0.2], &g).unwrap().interference, 0.0);
        }
        assert!(closed_form_mse(SchemeId::Bev, &c, &[1.0, 0.5, 0.2], &g).is_err());
    }

    /// Reassembles the MSE from coefficient moments:
    /// `Σ_k V[ℓ_k]E‖g_k‖² + Σ_{k≠k'} Cov(ℓ_k, ℓ_k')E[g_kᵀg_k'] + Σ_m E[ℓ_m²] + σ²D/(2λ²)`.
    fn assembled(params: &SchemeParams, c: &SystemConfig, beta: &[f64], g: &GradientStats) -> [f64; 3] {
        let n = c.ris_elements;
        let k = c.targets;
        let kf = k as f64;
        let l = params.lambda;
        let gain = |i: usize| beta[i] * params.sqrt_p[i] / l;
        let mut comp = 0.0;
        for i in 0..k {
            for j in 0..k {
                let e = if i == j {
                    gain(i) * gain(i) * second_moment_u(&params.w, i, n).unwrap()
                } else {
                    gain(i) * gain(j) * cross_moment_u(&params.w, i, j, n).unwrap()
                };
                comp += (e - 1.0 / (kf * kf)) * g.cross_moment[i][j];
            }
        }
        let (_, vm) = coeff_variances(params, beta, n).unwrap();
        let noise = c.noise_variance() * g.dim as f64 / (2.0 * l * l);
        [comp, vm.iter().sum(), noise]
    }

    #[test]
    fn closed_forms_match_moment_assembly() {
        let mut c = unit_config(4, 3, 32);
        c.max_power = 0.5;
        c.gradient_bound = 2.0;
        c.noise_psd = 1e-3;
        c.bandwidth = 10.0;
        let beta = [0.9, 0.4, 1.7, 0.6, 1.1, 0.3, 2.0];
        let g = GradientStats::new(
            vec![1.0, 2.0, 0.5, 3.0],
            vec![
                vec![1.0, 0.3, -0.1, 0.2],
                vec![0.3, 2.0, 0.4, 0.0],
                vec![-0.1, 0.4, 0.5, 0.6],
                vec![0.2, 0.0, 0.6, 3.0],
            ],
            7,
        )
        .unwrap();
        for (id, p) in [
            (SchemeId::SchemeI, scheme1_params(&c, &beta).unwrap()),
            (SchemeId::SchemeII, scheme2_params(&c, &beta).unwrap()),
        ] {
            let mse = closed_form_mse(id, &c, &beta, &g).unwrap();
            let a = assembled(&p, &c, &beta, &g);
            assert_relative_eq!(mse.computation, a[0], max_relative = 1e-10);
            assert_relative_eq!(mse.interference, a[1], max_relative = 1e-10);
            assert_relative_eq!(mse.noise, a[2], max_relative = 1e-10);
        }
    }

    #[test]
    fn target_variance_decays_with_n() {
        let beta = [1.0; 4];
        let vn = |n: usize| {
            let c = unit_config(2, 2, n);
            let p = scheme1_params(&c, &beta).unwrap();
            coeff_variances(&p, &beta, n).unwrap()
        };
        let (a, am) = vn(64);
        let (b, bm) = vn(128);
        assert_relative_eq!(a[0] * 64.0, b[0] * 128.0, max_relative = 1e-12);
        assert_relative_eq!(am[0] / 2.0, bm[0], max_relative = 1e-12);
    }

    #[test]
    fn varpi_example_and_limit() {
        let c = unit_config(3, 2, 16);
        let inputs = BoundInputs {
            smoothness: 1.0,
            dissimilarity: 1.0,
            sgd_variance: 0.5,
            rounds: 100,
            initial_gap: 1.0,
        };
        let b = convergence_bound(SchemeId::SchemeI, &c, &[1.0; 5], 10, &inputs).unwrap();
        assert_relative_eq!(b.varpi, (16.0 - PI2) / (16.0 * PI2) + 1.0, max_relative = 1e-14);
        assert!((b.varpi - 1.03882).abs() < 1e-5);
        let big = unit_config(3, 2, 1_000_000_000);
        let inputs = BoundInputs { smoothness: 2.0, ..inputs };
        for s in [SchemeId::SchemeI, SchemeId::SchemeII] {
            let b = convergence_bound(s, &big, &[1.0, 0.5, 2.0, 1.0, 1.0], 10, &inputs).unwrap();
            assert_relative_eq!(b.varpi, 2.0, max_relative = 1e-6);
            assert_relative_eq!(b.epsilon_bias, 2.0 * 0.5 / 3.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn bound_decreases_in_rounds_and_rejects_bad_inputs() {
        let c = unit_config(3, 2, 16);
        let mut inputs = BoundInputs {
            smoothness: 1.0,
            dissimilarity: 1.5,
            sgd_variance: 0.5,
            rounds: 100,
            initial_gap: 1.0,
        };
        let a = convergence_bound(SchemeId::SchemeII, &c, &[1.0; 5], 10, &inputs).unwrap();
        inputs.rounds = 400;
        let b = convergence_bound(SchemeId::SchemeII, &c, &[1.0; 5], 10, &inputs).unwrap();
        assert!(b.bound_at_t < a.bound_at_t);
        assert!(a.varpi >= inputs.smoothness);
        inputs.smoothness = 0.0;
        assert!(convergence_bound(SchemeId::SchemeII, &c, &[1.0; 5], 10, &inputs).is_err());
    }

    #[test]
    fn gradient_stats_checks() {
        assert!(GradientStats::new(vec![1.0, 1.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]], 1).is_err());
        assert!(GradientStats::new(vec![1.0, 1.0], vec![vec![1.0, 0.5], vec![0.4, 1.0]], 1).is_err());
        let g = GradientStats::from_fixed(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(g.self_moment, vec![1.0, 2.0]);
        assert_eq!(g.cross_moment[0][1], 1.0);
        assert_relative_eq!(g.global_power(), (1.0 + 2.0 + 2.0) / 4.0);
    }
}

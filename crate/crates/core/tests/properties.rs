//! Property-based checks of structural invariants.

#![allow(clippy::needless_range_loop)]

use airfl_sim::aircomp::{ota_round, GradientSet};
use airfl_sim::analysis::{closed_form_mse, convergence_bound, BoundInputs, GradientStats};
use airfl_sim::channel::{effective_coefficient, ChannelRealization, SystemConfig};
use airfl_sim::fl::clip_gradient;
use airfl_sim::ris::{aligned_phases, quantize_phases, RisPhases};
use airfl_sim::schemes::{scheme1_params, scheme2_params, SchemeId};
use airfl_sim::stats::{ComplexVector, RngStream};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_vec(n: usize) -> impl Strategy<Value = ComplexVector> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), n)
        .prop_map(|v| ComplexVector::new(v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap())
}

fn channels(n: usize, k: usize) -> impl Strategy<Value = (ComplexVector, Vec<ComplexVector>)> {
    (complex_vec(n), prop::collection::vec(complex_vec(n), k))
}

fn system(k: usize, m: usize, n: usize) -> SystemConfig {
    SystemConfig { targets: k, interferers: m, ris_elements: n, ..SystemConfig::default() }
}

fn betas(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-8.0..-3.0f64, len).prop_map(|e| e.into_iter().map(|x| 10f64.powf(x)).collect())
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn aligned_phases_ignore_common_weight_scale(
        (h_p, h) in channels(8, 3),
        w in prop::collection::vec(0.1..5.0f64, 3),
        c in 0.01..100.0f64,
    ) {
        let base = aligned_phases(&h_p, &h, &w).unwrap();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let other = aligned_phases(&h_p, &h, &scaled).unwrap();
        for (a, b) in base.iter().zip(other.iter()) {
            prop_assert!(angle_gap(*a, *b) < 1e-9);
        }
    }

    #[test]
    fn reflections_have_unit_modulus(theta in prop::collection::vec(-50.0..50.0f64, 1..64)) {
        let phases = RisPhases::new(theta).unwrap();
        for (r, t) in phases.reflection().iter().zip(phases.iter()) {
            prop_assert!((r.norm() - 1.0).abs() < 1e-12);
            prop_assert!((0.0..std::f64::consts::TAU).contains(t));
        }
    }

    #[test]
    fn quantization_is_idempotent(theta in prop::collection::vec(0.0..7.0f64, 1..64), bits in 1u32..8) {
        let once = quantize_phases(&RisPhases::new(theta).unwrap(), bits).unwrap();
        let twice = quantize_phases(&once, bits).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn clipping_is_idempotent_and_bounded(g in prop::collection::vec(-10.0..10.0f64, 1..40), bound in 0.1..20.0f64) {
        let once = clip_gradient(&g, bound).unwrap();
        let norm = once.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(norm <= bound * (1.0 + 1e-12));
        let twice = clip_gradient(&once, bound).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-12 * bound);
        }
    }

    #[test]
    fn coefficient_is_linear_in_device_and_conjugate_linear_in_ps_channel(
        (h_p, h) in channels(6, 2),
        theta in prop::collection::vec(0.0..std::f64::consts::TAU, 6),
        a in (-2.0..2.0f64, -2.0..2.0f64),
        c in -3.0..3.0f64,
    ) {
        let phases = RisPhases::new(theta).unwrap();
        let a = Complex64::new(a.0, a.1);
        let e = |p: &ComplexVector, r: &ComplexVector| effective_coefficient(p, &phases, r).unwrap();
        let lhs = e(&h_p, &h[0].scale(a));
        let rhs = e(&h_p.scale(a.conj()), &h[0]);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        let sum = ComplexVector::new(h[0].iter().zip(h[1].iter()).map(|(x, y)| x + y).collect()).unwrap();
        let additive = e(&h_p, &h[0]) + e(&h_p, &h[1]);
        prop_assert!((e(&h_p, &sum) - additive).abs() < 1e-9 * (1.0 + additive.abs()));
        let real = Complex64::new(c, 0.0);
        prop_assert!((e(&h_p.scale(real), &h[0]) - c * e(&h_p, &h[0])).abs() < 1e-9 * (1.0 + c.abs()) * (1.0 + e(&h_p, &h[0]).abs()));
    }

    #[test]
    fn single_target_alignment_is_coherent((h_p, h) in channels(16, 1)) {
        let phases = aligned_phases(&h_p, &h, &[1.0]).unwrap();
        let u = effective_coefficient(&h_p, &phases, &h[0]).unwrap();
        let magnitudes: f64 = h_p.iter().zip(h[0].iter()).map(|(p, r)| p.norm() * r.norm()).sum();
        prop_assert!(u >= 0.0);
        prop_assert!((u - magnitudes).abs() <= 1e-9 * (1.0 + magnitudes));
    }

    #[test]
    fn schemes_are_feasible_and_balanced(k in 1usize..12, m in 0usize..6, n in 1usize..2048, seed in 0u64..1000) {
        let config = system(k, m, n);
        let beta: Vec<f64> = {
            use rand::Rng;
            let mut rng = RngStream::root(seed).rng();
            (0..k + m).map(|_| 10f64.powf(rng.random_range(-8.0..-3.0))).collect()
        };
        for params in [scheme1_params(&config, &beta).unwrap(), scheme2_params(&config, &beta).unwrap()] {
            let norm_w = params.w.iter().map(|w| w * w).sum::<f64>().sqrt();
            for i in 0..k {
                let p = params.sqrt_p[i].powi(2);
                prop_assert!(p * config.gradient_bound.powi(2) <= config.max_power * (1.0 + 1e-12));
                let mean_coeff = std::f64::consts::PI * n as f64 * beta[i] * params.sqrt_p[i] * params.w[i]
                    / (4.0 * params.lambda * norm_w);
                prop_assert!((mean_coeff * k as f64 - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scheme_two_never_loses_on_interference_or_noise(
        k in 1usize..20, m in 0usize..10, n in 1usize..1024, beta in betas(30), dim in 1usize..300,
    ) {
        let config = system(k, m, n);
        let beta = &beta[..k + m];
        let g = GradientStats::homogeneous(k, dim, 1.0, 0.0).unwrap();
        let one = closed_form_mse(SchemeId::SchemeI, &config, beta, &g).unwrap();
        let two = closed_form_mse(SchemeId::SchemeII, &config, beta, &g).unwrap();
        prop_assert!(two.interference <= one.interference * (1.0 + 1e-12));
        prop_assert!(two.noise <= one.noise * (1.0 + 1e-12));
        prop_assert!(one.computation <= two.computation * (1.0 + 1e-12));
        for b in [&one, &two] {
            prop_assert!((b.total - b.computation - b.interference - b.noise).abs() <= 1e-12 * b.total.abs());
            prop_assert!(b.total.is_finite());
        }
    }

    #[test]
    fn error_terms_follow_ris_scaling(k in 1usize..20, m in 1usize..10, beta in betas(30), n in 1usize..512) {
        let g = GradientStats::homogeneous(k, 50, 1.0, 0.0).unwrap();
        let beta = &beta[..k + m];
        for scheme in [SchemeId::SchemeI, SchemeId::SchemeII] {
            let small = closed_form_mse(scheme, &system(k, m, n), beta, &g).unwrap();
            let large = closed_form_mse(scheme, &system(k, m, 4 * n), beta, &g).unwrap();
            let ratio = |a: f64, b: f64| if a == 0.0 { 1.0 } else { b / a };
            prop_assert!((ratio(small.computation + small.interference, large.computation + large.interference) - 0.25).abs() < 1e-9);
            prop_assert!((ratio(small.noise, large.noise) - 1.0 / 16.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bound_orderings(
        k in 1usize..20, m in 0usize..10, n in 1usize..2048, beta in betas(30),
        smoothness in 0.1..10.0f64, dissimilarity in 1.0..4.0f64, sgd_variance in 0.0..2.0f64,
    ) {
        let config = system(k, m, n);
        let beta = &beta[..k + m];
        let inputs = |rounds| BoundInputs { smoothness, dissimilarity, sgd_variance, rounds, initial_gap: 2.0 };
        let one = convergence_bound(SchemeId::SchemeI, &config, beta, 100, &inputs(100)).unwrap();
        let two = convergence_bound(SchemeId::SchemeII, &config, beta, 100, &inputs(100)).unwrap();
        prop_assert!(one.varpi <= two.varpi * (1.0 + 1e-12));
        prop_assert!(one.varpi >= smoothness && two.varpi >= smoothness);
        let later = convergence_bound(SchemeId::SchemeI, &config, beta, 100, &inputs(400)).unwrap();
        prop_assert!(later.bound_at_t < one.bound_at_t);
    }

    #[test]
    fn noiseless_round_scales_with_gradients(
        (h_p, h) in channels(8, 3),
        g in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 5), 3),
        c in 0.1..10.0f64,
    ) {
        let real = ChannelRealization::new(h_p, h, vec![1e-3, 2e-3, 5e-4], 3).unwrap();
        let config = system(3, 0, 8);
        let params = scheme1_params(&config, &real.beta).unwrap();
        let phases = aligned_phases(&real.h_p, real.target_channels(), &params.w).unwrap();
        let stream = RngStream::root(1);
        let base = GradientSet::new(g.clone(), vec![]).unwrap();
        let scaled = GradientSet::new(g.iter().map(|v| v.iter().map(|x| x * c).collect()).collect(), vec![]).unwrap();
        let (a, _) = ota_round(&base, &real, &phases, &params, 0.0, &stream).unwrap();
        let (b, _) = ota_round(&scaled, &real, &phases, &params, 0.0, &stream).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - c * x).abs() <= 1e-9 * (1.0 + (c * x).abs()));
        }
    }

    #[test]
    fn iid_gradients_favor_scheme_one_on_computation(k in 1usize..20, beta in betas(20), rho in 0.0..1.0f64) {
        let g = GradientStats::homogeneous(k, 30, 2.0, rho).unwrap();
        let config = system(k, 0, 64);
        let one = closed_form_mse(SchemeId::SchemeI, &config, &beta[..k], &g).unwrap();
        let two = closed_form_mse(SchemeId::SchemeII, &config, &beta[..k], &g).unwrap();
        prop_assert!(one.computation <= two.computation * (1.0 + 1e-12) + 1e-300);
    }
}

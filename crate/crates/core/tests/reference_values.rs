// Hand-evaluated values and closed-form limits.

use std::f64::consts::{PI, SQRT_2};

use heisenberg_laser::analytics::*;
use heisenberg_laser::correlations::{g1, g2, intensity_spectrum, mandel_q};
use heisenberg_laser::filter::*;
use heisenberg_laser::model::{linearized_gain_sq, linearized_loss_sq};
use heisenberg_laser::pr_ensemble::*;
use heisenberg_laser::steady::*;
use heisenberg_laser::{Family, LaserModel, Liouvillian, NumberDistribution, Variant};
use num_complex::Complex64;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn exact(family: Family, mu: usize, p: f64) -> Liouvillian {
    Liouvillian::new(LaserModel::with_mu(family, mu, p, 1.0).unwrap(), Variant::Exact).unwrap()
}

#[test]
fn three_level_coefficients() {
    let flat_loss = LaserModel::new(Family::PLambda { lambda: 1.0 }, 3, 2.0, 1.0).unwrap();
    assert!(close(flat_loss.gain_coefficient(1).unwrap(), SQRT_2, 1e-14));
    assert_eq!(flat_loss.loss_coefficient(1).unwrap(), 1.0);
    assert_eq!(flat_loss.loss_coefficient(2).unwrap(), 1.0);

    let flat_gain = LaserModel::new(Family::PLambda { lambda: 0.0 }, 3, 2.0, 1.0).unwrap();
    assert!(close(flat_gain.loss_coefficient(1).unwrap(), 1.0 / SQRT_2, 1e-14));
    assert_eq!(flat_gain.gain_coefficient(1).unwrap(), 1.0);
    assert_eq!(flat_gain.gain_coefficient(2).unwrap(), 1.0);
    assert!(flat_gain.gain_coefficient(0).is_err());
    assert!(flat_gain.loss_coefficient(3).is_err());

    // r = 1/Σ L̃²ρ = 1/(½·½ + 2·¼)
    let steady = exact_steady_state(3, 2.0).unwrap();
    assert!(close(flat_gain.normalization_r(&steady).unwrap(), 4.0 / 3.0, 1e-14));
    // Flat loss: r = 1/(1 − ρ₀), since the vacuum cannot emit.
    assert!(close(flat_loss.normalization_r(&steady).unwrap(), 4.0 / 3.0, 1e-14));
    let big = LaserModel::with_mu(Family::PLambda { lambda: 1.0 }, 250, 50.0, 1.0).unwrap();
    assert!(close(
        big.normalization_r(&exact_steady_state(501, 50.0).unwrap()).unwrap(),
        1.0,
        1e-14
    ));
}

#[test]
fn central_loss_below_unity() {
    let m = LaserModel::with_mu(Family::PLambda { lambda: 0.3 }, 20, 6.0, 1.0).unwrap();
    assert!(m.loss_coefficient(20).unwrap() < 1.0);
}

#[test]
fn normalization_near_unity_at_large_dimension() {
    let m = LaserModel::with_mu(Family::PLambda { lambda: 0.0 }, 250, 50.0, 1.0).unwrap();
    let steady = exact_steady_state(501, 50.0).unwrap();
    assert!((m.normalization_r(&steady).unwrap() - 1.0).abs() < 1e-4);
}

#[test]
fn linearized_coefficients() {
    assert_eq!(linearized_loss_sq(30.0, 0.2, 0.7, 30.0).unwrap(), 1.0);
    assert!(close(linearized_loss_sq(110.0, 0.01, 0.5, 100.0).unwrap(), 1.05, 1e-14));
    assert!(close(linearized_gain_sq(90.0, 0.01, 0.5, 100.0).unwrap(), 1.05, 1e-14));
    assert_eq!(linearized_gain_sq(17.0, 0.3, 0.0, 5.0).unwrap(), 1.0);
    assert!(linearized_loss_sq(0.0, 0.5, 0.0, 10.0).is_err());

    let m = LaserModel::with_mu(Family::PFamily, 250, 50.0, 1.0).unwrap();
    let exact_sq = m.loss_coefficient(250).unwrap().powi(2);
    let lin = linearized_loss_sq(250.0, m.k(), 0.0, 250.0).unwrap();
    assert!((exact_sq / lin - 1.0).abs() < 1e-3);
}

#[test]
fn three_level_steady_state() {
    let s = exact_steady_state(3, 2.0).unwrap();
    for (a, b) in s.weights().iter().zip([0.25, 0.5, 0.25]) {
        assert!(close(*a, b, 1e-15));
    }
    let (m, v) = mean_and_variance(&s);
    assert!(close(m, 1.0, 1e-15) && close(v, 0.5, 1e-15));
    assert!(close(eigenstate_residual(&s), 0.5, 1e-15));
    let delta = NumberDistribution::delta(7, 4).unwrap();
    assert_eq!(mean_and_variance(&delta), (4.0, 0.0));
}

#[test]
fn gaussian_moments() {
    // k = π²p/(4μ²) = 0.01 at μ = 100
    let p = 0.01 * 4.0 * 1e4 / (PI * PI);
    let g = gaussian_steady_state(201, p).unwrap();
    let (m, v) = mean_and_variance(&g);
    assert!(close(m, 100.0, 1e-9));
    assert!((v / 100.0 - 1.0).abs() < 0.01, "variance {v}");
    let spread = phase_spread(&g).unwrap();
    assert!((spread / 0.0025 - 1.0).abs() < 0.05, "spread {spread}");

    let e = exact_steady_state(501, 50.0).unwrap();
    assert!(gaussian_steady_state(501, 50.0).unwrap().total_variation(&e) < 1e-2);
}

#[test]
fn phase_spread_hand_values() {
    let two = NumberDistribution::new(vec![0.0, 0.5, 0.5, 0.0], 1.5).unwrap();
    assert!(close(phase_spread(&two).unwrap(), 0.75, 1e-15));
    let delta = NumberDistribution::delta(5, 2).unwrap();
    assert_eq!(phase_spread(&delta).unwrap(), 1.0);
}

#[test]
fn numeric_steady_states() {
    let model = LaserModel::new(Family::PLambda { lambda: 0.5 }, 41, 4.0, 1.0).unwrap();
    let num = numeric_steady_state(&model, Variant::Exact).unwrap();
    let ex = exact_steady_state(41, 4.0).unwrap();
    for (a, b) in num.weights().iter().zip(ex.weights()) {
        assert!((a - b).abs() < 1e-10);
    }
    assert_eq!(negativity_diagnostic(&ex), 0.0);

    let pq0 = LaserModel::new(Family::PQ { q: 0.0 }, 41, 4.0, 1.0).unwrap();
    let pl0 = LaserModel::new(Family::PLambda { lambda: 0.0 }, 41, 4.0, 1.0).unwrap();
    assert_eq!(
        numeric_steady_state(&pq0, Variant::Exact).unwrap().weights(),
        numeric_steady_state(&pl0, Variant::Exact).unwrap().weights()
    );

    let sub = LaserModel::new(Family::PQ { q: -1.0 }, 51, 4.0, 1.0).unwrap();
    let d = numeric_steady_state(&sub, Variant::Exact).unwrap();
    assert!(d.weights().iter().any(|&w| w < 0.0));
    assert!(negativity_diagnostic(&d) > 0.0);
}

#[test]
fn tail_weight_matches_asymptotic_form() {
    let mu = 250.0;
    let p = 4.0;
    let s = exact_steady_state(501, p).unwrap();
    // Γ(3)/Γ(5/2) = 2/(3√π/4)
    let gamma_ratio = 2.0 / (0.75 * PI.sqrt());
    let asym = PI.powf(-0.25) * (PI / (2.0 * mu)).powf((p + 1.0) / 2.0) * gamma_ratio.sqrt();
    let got = eigenstate_residual(&s);
    assert!((got / asym - 1.0).abs() < 0.2, "{got} vs {asym}");
    let smaller = eigenstate_residual(&exact_steady_state(301, p).unwrap());
    assert!(got < smaller);
}

#[test]
fn bound_constants() {
    assert!(close(heisenberg_prefactor(), 1.1156, 1e-4));
    assert!(close(heisenberg_prefactor() / 2.9748, 0.375, 1e-3));
    let v = min_phase_variance(250.0);
    assert!((v / 3.029e-5 - 1.0).abs() < 1e-3);
    for mu in [10.0, 250.0, 1e4] {
        let m = min_phase_variance(mu);
        assert!((4.0 / (m * m) / heisenberg_bound(mu) - 1.0).abs() < 1e-12);
    }
    assert!(min_phase_variance(300.0) < v);
}

#[test]
fn diffusion_and_coherence_formulas() {
    let l0 = diffusion_rate(Family::PLambda { lambda: 0.0 }, 50.0, 250.0, 1.0);
    assert!((l0 / 9.744e-7 - 1.0).abs() < 1e-3);
    let half = diffusion_rate(Family::PLambda { lambda: 0.5 }, 50.0, 250.0, 1.0);
    assert!(close(half / l0, 0.5, 1e-15));
    let q0 = diffusion_rate(Family::PQ { q: 0.0 }, 50.0, 250.0, 1.0);
    let q1 = diffusion_rate(Family::PQ { q: -1.0 }, 50.0, 250.0, 1.0);
    assert!(close(q1 / q0, 0.25, 1e-15));

    let c0 = coherence_lin(Family::PFamily, 50.0, 250.0);
    assert!((c0 / 4.106e6 - 1.0).abs() < 1e-3);
    assert!(close(
        coherence_lin(Family::PLambda { lambda: 0.5 }, 50.0, 250.0) / c0,
        2.0,
        1e-12
    ));
    assert!(close(
        coherence_lin(Family::PQ { q: -1.0 }, 50.0, 250.0) / c0,
        4.0,
        1e-12
    ));
    for p in [10.0, 30.0, 100.0] {
        for fam in [Family::PFamily, Family::PLambda { lambda: 0.5 }, Family::PQ { q: -1.0 }] {
            assert!(coherence_lin(fam, p, 250.0) < heisenberg_bound(250.0));
        }
    }
}

#[test]
fn linearized_photon_statistics() {
    let (p, mu) = (50.0, 250.0);
    let k = k_of(p, mu);
    for fam in [Family::PLambda { lambda: 0.5 }, Family::PQ { q: -1.0 }] {
        assert!(close(g2_lin(fam, p, mu, 1.0, 0.0), 1.0 - k / 4.0, 1e-15));
    }
    assert_eq!(g2_lin(Family::PLambda { lambda: 0.0 }, p, mu, 1.0, 3.0), 1.0);
    assert!(close(
        mandel_q_lin(Family::PLambda { lambda: 0.5 }, p, mu, 1.0, 1e12),
        -0.5,
        1e-6
    ));
    assert!(close(
        mandel_q_lin(Family::PQ { q: -1.0 }, p, mu, 1.0, 1e12),
        -1.0,
        1e-6
    ));
    assert!(mandel_q_lin(Family::PQ { q: -1.0 }, p, mu, 1.0, 1e-6 / k).abs() < 1e-6);
    assert_eq!(mandel_q_lin(Family::PQ { q: -1.0 }, p, mu, 1.0, 0.0), 0.0);
    assert!(close(
        spectrum_lin(Family::PLambda { lambda: 0.5 }, p, mu, 1.0, 0.0),
        0.5,
        1e-15
    ));
    assert!(close(spectrum_lin(Family::PQ { q: -1.0 }, p, mu, 1.0, 0.0), 0.0, 1e-15));

    assert_eq!(g1_lin(Family::PLambda { lambda: 0.5 }, p, mu, 1.0, 0.0), 1.0);
    let ell = diffusion_rate(Family::PFamily, p, mu, 1.0);
    let t = 1e4;
    assert!(close(
        g1_lin(Family::PFamily, p, mu, 1.0, t),
        (-ell * t / 2.0).exp(),
        1e-15
    ));
    let ell = diffusion_rate(Family::PLambda { lambda: 0.5 }, p, mu, 1.0);
    let plateau = g1_lin(Family::PLambda { lambda: 0.5 }, p, mu, 1.0, t);
    assert!(close(plateau, (-ell * t / 2.0).exp() * (1.0 + k / 16.0), 1e-9));
}

#[test]
fn number_fluctuation_propagator() {
    let (xi, chi, c) = (0.3, 2.0, 50.0);
    let var = |t: f64| {
        let m1: f64 = (0..40_000)
            .map(|i| 20.0 + i as f64 * 1.5e-3)
            .map(|m| ou_propagator(m, t, 55.0, xi, chi, c) * 1.5e-3)
            .sum();
        m1
    };
    assert!((var(2.0) - 1.0).abs() < 1e-8);
    // Stationary width χ/ξ.
    let d = ou_propagator(c, 1e3, 55.0, xi, chi, c);
    assert!(close(d, 1.0 / (2.0 * PI * chi / xi).sqrt(), 1e-12));
    assert!(ou_propagator(55.0, 1e-6, 55.0, xi, chi, c) > 100.0);
}

#[test]
fn correlation_limits() {
    let l = exact(Family::PFamily, 250, 50.0);
    let k = l.model().k();
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5 / k).collect();
    assert!(g2(&l, &grid).unwrap().values.iter().all(|v| (v - 1.0).abs() < 1e-6));
    assert!(close(g1(&l, &[0.0, 1.0]).unwrap().values[0], 1.0, 1e-12));

    let l = exact(Family::PLambda { lambda: 0.5 }, 250, 50.0);
    let grid = [0.0, 1.0 / k, 12.0 / k];
    let vals = g2(&l, &grid).unwrap().values;
    assert!((vals[0] - (1.0 - k / 4.0)).abs() < 5e-5);
    assert!((vals[2] - 1.0).abs() < 1e-4);
    let s = intensity_spectrum(&l, &[100.0 * k]).unwrap().values[0];
    assert!((s - 1.0).abs() < 0.01);
}

#[test]
fn mandel_q_windows() {
    for (fam, long) in [(Family::PLambda { lambda: 0.5 }, -0.5), (Family::PQ { q: -1.0 }, -1.0)] {
        let l = exact(fam, 250, 50.0);
        let k = l.model().k();
        assert!(mandel_q(&l, 1e-4).unwrap().abs() < 1e-3);
        let t = 50.0 / k;
        let lin = mandel_q_lin(fam, 50.0, 250.0, 1.0, t);
        assert!((mandel_q(&l, t).unwrap() - lin).abs() < 0.01);
        assert!((mandel_q(&l, 1e4 / k).unwrap() - long).abs() < 0.01);
    }
}

#[test]
fn phase_state_structure() {
    let dist = exact_steady_state(41, 6.0).unwrap();
    let st = pure_phase_state(&dist, 0.0).unwrap();
    assert!(st.matrix.iter().all(|z| z.im == 0.0));
    assert!((st.matrix.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);

    let mut avg = nalgebra::DMatrix::<Complex64>::zeros(41, 41);
    for i in 0..64 {
        avg += pure_phase_state(&dist, 2.0 * PI * i as f64 / 64.0).unwrap().matrix;
    }
    avg /= Complex64::new(64.0, 0.0);
    for m in 0..41 {
        for n in 0..41 {
            let want = if m == n { dist.weights()[m] } else { 0.0 };
            assert!((avg[(m, n)] - want).norm() < 1e-12);
        }
    }

    let a = second_phase_derivative(&dist, 0.7).unwrap();
    assert!((0..41).all(|i| a[(i, i)].norm() == 0.0));
    assert!((&a - a.adjoint()).iter().all(|z| z.norm() < 1e-12));
    let a0 = second_phase_derivative(&dist, 0.0).unwrap();
    let w = dist.weights();
    assert!(close(a0[(6, 5)].re, -(w[6] * w[5]).sqrt(), 1e-15));
    assert!(pure_phase_state(&NumberDistribution::new(vec![0.5, -0.1, 0.6], 1.0).unwrap(), 0.0).is_err());
}

#[test]
fn phase_diffusion_match() {
    let l = exact(Family::PFamily, 500, 30.0);
    let ell = diffusion_rate(Family::PFamily, 30.0, 500.0, 1.0);
    let r = relative_distance(&l, ell, 0.0).unwrap();
    let fit = 5.90 * 30f64.powf(-1.17);
    assert!(r > fit / 2.0 && r < fit * 2.0, "R = {r}");
    // φ only multiplies both matrices by the same phases.
    assert!((relative_distance(&l, ell, 1.1).unwrap() - r).abs() < 1e-10);

    let best = |fam: Family| best_match_ell(&exact(fam, 500, 50.0), 0.0).unwrap();
    let b0 = best(Family::PFamily);
    assert!((b0 / diffusion_rate(Family::PFamily, 50.0, 500.0, 1.0) - 1.0).abs() < 0.05);
    assert!((best(Family::PLambda { lambda: 0.5 }) / b0 - 0.5).abs() < 0.025);
    assert!((best(Family::PQ { q: -1.0 }) / best(Family::PQ { q: 0.0 }) - 0.25).abs() < 0.0125);
}

#[test]
fn estimation_timescales() {
    assert!(close(heterodyne_mse(1.0, 50.0), 0.01, 1e-15));
    assert!(close(filter_timescale(1.0, 4e-6), 250.0, 1e-9));
    let v = stationary_variance(1.0, 4e-6);
    assert!(close(4.0 * v * filter_timescale(1.0, 4e-6), 1.0, 1e-14));
    assert!(filter_timescale(1.0, 4e-6) * 4e-6 < 1e-2);
}

#[test]
fn filter_locks_on_static_phase() {
    let mean_mse = |steps: usize| -> f64 {
        (0..8)
            .map(|s| simulate_filter(0.0, 1.0, 0.05, steps, s).unwrap().mse)
            .sum::<f64>()
            / 8.0
    };
    let short = mean_mse(4_000);
    let long = mean_mse(40_000);
    assert!(long < short / 4.0, "{long} vs {short}");
}

#[test]
fn filter_error_scales_with_coherence() {
    let seeds: Vec<u64> = (0..20).collect();
    let run = |c: f64| {
        seed_ensemble(&reference_config(c, 1.0, 400.0, 0), &seeds)
            .unwrap()
            .mean_mse
    };
    let ratio = run(2e4) / run(1e4);
    assert!((ratio * SQRT_2 - 1.0).abs() < 0.15, "ratio {ratio}");
}

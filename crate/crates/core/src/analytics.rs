//! Closed-form predictions of the linearized theory and the coherence bound.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{Family, LaserModel};
use crate::steady::NumberDistribution;

/// First zero of the Airy function Ai.
pub const AIRY_ZERO: f64 = -2.338107410459767;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedPrediction {
    #[serde(flatten)]
    pub family: Family,
    pub p: f64,
    pub mu: f64,
    pub k: f64,
    pub flux: f64,
    pub ell: f64,
    pub coherence: f64,
    pub q_infinity: f64,
}

impl LinearizedPrediction {
    pub fn new(family: Family, p: f64, mu: f64, flux: f64) -> Self {
        LinearizedPrediction {
            family,
            p,
            mu,
            k: k_of(p, mu),
            flux,
            ell: diffusion_rate(family, p, mu, flux),
            coherence: coherence_lin(family, p, mu),
            q_infinity: q_infinity(family),
        }
    }

    pub fn for_model(model: &LaserModel) -> Self {
        Self::new(model.family, model.p, model.mu(), model.flux)
    }
}

pub fn k_of(p: f64, mu: f64) -> f64 {
    PI * PI * p / (4.0 * mu * mu)
}

/// True when 1 ≪ p ≪ μ², operationalized as p ≥ 10 and k ≤ 0.1.
pub fn in_linearized_regime(p: f64, mu: f64) -> bool {
    p >= 10.0 && k_of(p, mu) <= 0.1
}

/// ℓ = f·𝒩π⁴p²/(64μ⁴) with f = 2λ²−2λ+1 or (1+q/2)².
pub fn diffusion_rate(family: Family, p: f64, mu: f64, flux: f64) -> f64 {
    if !in_linearized_regime(p, mu) {
        log::warn!("p = {p}, mu = {mu} is outside the linearized regime");
    }
    family.diffusion_factor() * flux * PI.powi(4) * p * p / (64.0 * mu.powi(4))
}

/// (amplitude, relaxation factor) of g² − 1 = a·k·e^{−𝒩k·c·|t|}.
fn g2_parameters(family: Family) -> (f64, f64) {
    match family {
        Family::PLambda { lambda } => (lambda * (lambda - 1.0), 1.0),
        Family::PQ { q } => (q * (1.0 + q / 2.0) / 2.0, 1.0 + q / 2.0),
        Family::PFamily => (0.0, 1.0),
    }
}

pub fn q_infinity(family: Family) -> f64 {
    match family {
        Family::PLambda { lambda } => 2.0 * lambda * (lambda - 1.0),
        Family::PQ { q } => q,
        Family::PFamily => 0.0,
    }
}

pub fn g2_lin(family: Family, p: f64, mu: f64, flux: f64, t: f64) -> f64 {
    let k = k_of(p, mu);
    let (a, c) = g2_parameters(family);
    1.0 + a * k * (-flux * k * c * t.abs()).exp()
}

pub fn mandel_q_lin(family: Family, p: f64, mu: f64, flux: f64, t: f64) -> f64 {
    let k = k_of(p, mu);
    let (_, c) = g2_parameters(family);
    let qinf = q_infinity(family);
    let x = flux * k * c * t.abs();
    if x == 0.0 {
        return 0.0;
    }
    // 1 + (e^{−x} − 1)/x = x/2 − x²/6 + x³/24 − …
    let bracket = if x < 1e-4 {
        x / 2.0 - x * x / 6.0 + x * x * x / 24.0
    } else {
        1.0 + (-x).exp_m1() / x
    };
    qinf * bracket
}

pub fn spectrum_lin(family: Family, p: f64, mu: f64, flux: f64, omega: f64) -> f64 {
    let k = k_of(p, mu);
    let (_, c) = g2_parameters(family);
    let qinf = q_infinity(family);
    let kc = k * c;
    let w = omega / flux;
    flux * (1.0 + qinf * kc * kc / (kc * kc + w * w))
}

pub fn g1_lin(family: Family, p: f64, mu: f64, flux: f64, t: f64) -> f64 {
    let ell = diffusion_rate(family, p, mu, flux);
    let dg = g2_lin(family, p, mu, flux, t) - g2_lin(family, p, mu, flux, 0.0);
    flux * (-ell * t.abs() / 2.0).exp() * (1.0 + 0.25 * dg)
}

/// 256μ⁴/(π⁴p²f); the subleading O(1/k) term is not included.
pub fn coherence_lin(family: Family, p: f64, mu: f64) -> f64 {
    256.0 * mu.powi(4) / (PI.powi(4) * p * p * family.diffusion_factor())
}

/// Prefactor of μ⁴ in the Heisenberg-limited coherence bound.
pub fn heisenberg_prefactor() -> f64 {
    0.25 * (3.0 / AIRY_ZERO).abs().powi(6)
}

pub fn heisenberg_bound(mu: f64) -> f64 {
    heisenberg_prefactor() * mu.powi(4)
}

pub fn min_phase_variance(mu: f64) -> f64 {
    4.0 * (AIRY_ZERO / 3.0).abs().powi(3) / (mu * mu)
}

/// 1 − (Σ√(ρ_{n+1}ρ_n))².
pub fn phase_spread(dist: &NumberDistribution) -> Result<f64> {
    let w = dist.weights();
    if w.iter().any(|&x| x < 0.0) {
        return Err(domain("phase spread requires nonnegative weights"));
    }
    let s: f64 = w.windows(2).map(|p| (p[0] * p[1]).sqrt()).sum();
    Ok(1.0 - s * s)
}

/// Density at m of the number-fluctuation process started at n.
pub fn ou_propagator(m: f64, t: f64, n: f64, xi: f64, chi: f64, mu_center: f64) -> f64 {
    let mean = mu_center + (n - mu_center) * (-xi * t).exp();
    let var = chi * -(-2.0 * xi * t).exp_m1() / xi;
    (-(m - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

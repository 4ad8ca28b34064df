//! Stationary photon-number distributions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, numeric, Result};
use crate::liouvillian::{Liouvillian, SectorOperator};
use crate::model::{LaserModel, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumberDistribution {
    weights: Vec<f64>,
    /// Centre μ of the model the distribution belongs to.
    pub mu_model: f64,
}

impl NumberDistribution {
    /// Normalizes `weights` to unit sum. Signed weights are kept as given.
    pub fn new(weights: Vec<f64>, mu_model: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(domain("empty distribution"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(domain("distribution has non-finite weights"));
        }
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total != 0.0) {
            return Err(domain(format!("distribution sums to {total}")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(NumberDistribution { weights, mu_model })
    }

    /// Point mass at `n0` on D levels.
    pub fn delta(dim: usize, n0: usize) -> Result<Self> {
        if n0 >= dim {
            return Err(domain(format!("level {n0} outside 0..{dim}")));
        }
        let mut w = vec![0.0; dim];
        w[n0] = 1.0;
        Self::new(w, (dim as f64 - 1.0) / 2.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self) -> f64 {
        self.mean_and_variance().0
    }

    pub fn variance(&self) -> f64 {
        self.mean_and_variance().1
    }

    pub fn mean_and_variance(&self) -> (f64, f64) {
        mean_and_variance(self)
    }

    pub fn total_variation(&self, other: &NumberDistribution) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

pub fn mean_and_variance(dist: &NumberDistribution) -> (f64, f64) {
    let mean: f64 = dist.weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    let var: f64 = dist
        .weights
        .iter()
        .enumerate()
        .map(|(n, w)| (n as f64 - mean).powi(2) * w)
        .sum();
    (mean, var)
}

/// Normalized sin^p(π(n+1)/(D+1)) weights.
pub fn exact_steady_state(dim: usize, p: f64) -> Result<NumberDistribution> {
    if dim < 3 {
        return Err(domain(format!("dimension must be at least 3, got {dim}")));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(domain(format!("p must be positive, got {p}")));
    }
    let w = PI / (dim as f64 + 1.0);
    let logs: Vec<f64> = (0..dim).map(|n| p * ((n as f64 + 1.0) * w).sin().ln()).collect();
    // Mirror pairs are evaluated from the same sine to keep the symmetry exact.
    let mut weights = vec![0.0; dim];
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for n in 0..dim {
        let m = dim - 1 - n;
        let l = if n <= m { logs[n] } else { logs[m] };
        weights[n] = (l - peak).exp();
    }
    // Pairwise summation from both ends keeps the mean exactly centred.
    let mut total = 0.0;
    for w in &weights[..dim / 2] {
        total += 2.0 * w;
    }
    if dim % 2 == 1 {
        total += weights[dim / 2];
    }
    let weights: Vec<f64> = weights.into_iter().map(|x| x / total).collect();
    Ok(NumberDistribution {
        weights,
        mu_model: (dim as f64 - 1.0) / 2.0,
    })
}

/// Discrete Gaussian of variance 1/k centred at μ.
pub fn gaussian_steady_state(dim: usize, p: f64) -> Result<NumberDistribution> {
    if dim < 3 || !(p.is_finite() && p > 0.0) {
        return Err(domain("gaussian steady state needs D >= 3 and p > 0"));
    }
    let mu = (dim as f64 - 1.0) / 2.0;
    let k = PI * PI * p / (4.0 * mu * mu);
    if k > 0.2 {
        log::warn!("k = {k:.3} is not small; the Gaussian approximation is poor");
    }
    let w = (0..dim).map(|n| (-(k / 2.0) * (n as f64 - mu).powi(2)).exp()).collect();
    NumberDistribution::new(w, mu)
}

/// Stationary distribution of the realized generator.
pub fn numeric_steady_state(model: &LaserModel, variant: Variant) -> Result<NumberDistribution> {
    Ok(Liouvillian::new(*model, variant)?.steady_state().clone())
}

/// |Σ of negative weights|.
pub fn negativity_diagnostic(dist: &NumberDistribution) -> f64 {
    dist.weights.iter().filter(|&&w| w < 0.0).sum::<f64>().abs()
}

fn residual_ratio(op: &SectorOperator, x: &[f64]) -> Result<f64> {
    let r = op.apply(x)?;
    let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(rn / (op.norm_inf() * xn))
}

/// Null vector of a population-sector operator, normalized to unit sum.
///
/// Uses the probability-flux balance across every cut n | n+1 when the
/// operator has a single super-diagonal; this keeps relative accuracy deep in
/// the tails. Falls back to shifted inverse iteration otherwise.
pub fn null_vector(op: &SectorOperator) -> Result<Vec<f64>> {
    let upper_ok = op.band(2).iter().all(|&x| x == 0.0) && op.band(1)[..op.dim() - 1].iter().all(|&x| x != 0.0);
    if upper_ok {
        let v = null_vector_flux_balance(op)?;
        let res = residual_ratio(op, &v)?;
        if res <= 1e-11 {
            return Ok(v);
        }
        log::debug!("flux balance residual {res:e}; switching to inverse iteration");
    }
    null_vector_inverse_iteration(op)
}

pub fn null_vector_flux_balance(op: &SectorOperator) -> Result<Vec<f64>> {
    let n = op.dim();
    let sub1 = op.band(-1);
    let sub2 = op.band(-2);
    let sup1 = op.band(1);
    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    for c in 0..n - 1 {
        // Upward flux across the cut between c and c+1.
        let mut up = sub1[c + 1] * rho[c];
        if c + 2 < n {
            up += sub2[c + 2] * rho[c];
        }
        if c >= 1 {
            up += sub2[c + 1] * rho[c - 1];
        }
        if sup1[c] == 0.0 {
            return Err(numeric(format!("no downward transition across cut {c}"), f64::NAN));
        }
        rho[c + 1] = up / sup1[c];
        if rho[c + 1].abs() > 1e200 {
            for x in rho[..=c + 1].iter_mut() {
                *x *= 1e-200;
            }
        }
    }
    let total: f64 = rho.iter().sum();
    if !(total.is_finite() && total != 0.0) {
        return Err(numeric("flux balance produced a non-normalizable vector", total));
    }
    Ok(rho.into_iter().map(|x| x / total).collect())
}

/// Inverse iteration on op − σI, with σ = 10⁻¹⁴ of the smallest nonzero
/// diagonal rate. Scaling by ‖op‖ instead would let the huge edge rates push σ
/// past the slow eigenvalues.
pub fn null_vector_inverse_iteration(op: &SectorOperator) -> Result<Vec<f64>> {
    let n = op.dim();
    let slow = op
        .band(0)
        .iter()
        .map(|d| d.abs())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let sigma = if slow.is_finite() { 1e-14 * slow } else { 1e-300 };
    let lu = op.to_banded(-sigma).lu()?;
    let mut x = vec![1.0 / n as f64; n];
    let mut res = f64::INFINITY;
    for _ in 0..50 {
        lu.solve_in_place(&mut x)?;
        let total: f64 = x.iter().sum();
        let scale = if total != 0.0 && total.is_finite() {
            total
        } else {
            x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        for v in x.iter_mut() {
            *v /= scale;
        }
        res = residual_ratio(op, &x)?;
        if res < 1e-12 {
            let total: f64 = x.iter().sum();
            return Ok(x.into_iter().map(|v| v / total).collect());
        }
    }
    Err(numeric("inverse iteration did not converge", res))
}

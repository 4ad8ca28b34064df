//! Laser families and their gain/loss coefficient tables.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::steady::NumberDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    PLambda { lambda: f64 },
    PQ { q: f64 },
    PFamily,
}

impl Family {
    /// Flatness parameter entering the loss exponent p(1-x)/2.
    pub fn loss_x(&self) -> f64 {
        match *self {
            Family::PLambda { lambda } => lambda,
            Family::PQ { q } => -q / 2.0,
            Family::PFamily => 0.0,
        }
    }

    /// Flatness parameter entering the gain exponent p·x/2. Zero for flat gain.
    pub fn gain_x(&self) -> f64 {
        match *self {
            Family::PLambda { lambda } => lambda,
            Family::PQ { .. } | Family::PFamily => 0.0,
        }
    }

    /// Pump-statistics parameter q; zero outside the p,q-family.
    pub fn pump_q(&self) -> f64 {
        match *self {
            Family::PQ { q } => q,
            _ => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Family::PLambda { lambda } => format!("plambda(lambda={lambda})"),
            Family::PQ { q } => format!("pq(q={q})"),
            Family::PFamily => "pfamily".to_string(),
        }
    }

    /// Prefactor multiplying the p-family diffusion rate: 2λ²−2λ+1 or (1+q/2)².
    pub fn diffusion_factor(&self) -> f64 {
        match *self {
            Family::PLambda { lambda } => 2.0 * lambda * lambda - 2.0 * lambda + 1.0,
            Family::PQ { q } => (1.0 + q / 2.0).powi(2),
            Family::PFamily => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserModel {
    #[serde(flatten)]
    pub family: Family,
    pub dim: usize,
    pub p: f64,
    pub flux: f64,
}

impl LaserModel {
    pub fn new(family: Family, dim: usize, p: f64, flux: f64) -> Result<Self> {
        if dim < 3 {
            return Err(domain(format!("dimension must be at least 3, got {dim}")));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(domain(format!("p must be positive and finite, got {p}")));
        }
        if !(flux.is_finite() && flux > 0.0) {
            return Err(domain(format!("flux must be positive and finite, got {flux}")));
        }
        match family {
            Family::PLambda { lambda } if !lambda.is_finite() => {
                return Err(domain(format!("lambda must be finite, got {lambda}")));
            }
            // q = -1 is the boundary of the family and is used throughout the checks,
            // so the closed half-line is accepted.
            Family::PQ { q } if !(q.is_finite() && q >= -1.0) => {
                return Err(domain(format!("q must be finite and >= -1, got {q}")));
            }
            Family::PQ { q } if q > 1.0 => {
                log::warn!("q = {q} makes the single-step gain rate negative");
            }
            _ => {}
        }
        Ok(LaserModel { family, dim, p, flux })
    }

    /// Model with D = 2μ+1.
    pub fn with_mu(family: Family, mu: usize, p: f64, flux: f64) -> Result<Self> {
        Self::new(family, 2 * mu + 1, p, flux)
    }

    pub fn mu(&self) -> f64 {
        (self.dim as f64 - 1.0) / 2.0
    }

    pub fn k(&self) -> f64 {
        let mu = self.mu();
        PI * PI * self.p / (4.0 * mu * mu)
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n == 0 || n >= self.dim {
            return Err(domain(format!("level {n} outside [1, {}]", self.dim - 1)));
        }
        Ok(())
    }

    /// ⟨n|G|n−1⟩ of the exact model.
    pub fn gain_coefficient(&self, n: usize) -> Result<f64> {
        self.check_level(n)?;
        Ok(exact_gain(n, self.dim, self.p, self.family.gain_x()))
    }

    /// ⟨n−1|L|n⟩ of the exact model.
    pub fn loss_coefficient(&self, n: usize) -> Result<f64> {
        self.check_level(n)?;
        Ok(exact_loss(n, self.dim, self.p, self.family.loss_x()))
    }

    pub fn coefficients(&self, variant: Variant) -> Result<CoefficientTable> {
        let d = self.dim;
        let mut gain = vec![0.0; d + 1];
        let mut loss = vec![0.0; d + 1];
        match variant {
            Variant::Exact => {
                for n in 1..d {
                    gain[n] = exact_gain(n, d, self.p, self.family.gain_x());
                    loss[n] = exact_loss(n, d, self.p, self.family.loss_x());
                }
            }
            Variant::Linearized => {
                let (k, mu) = (self.k(), self.mu());
                for n in 1..d {
                    let g2 = linearized_gain_sq(n as f64 - 1.0, k, self.family.gain_x(), mu)?;
                    let l2 = linearized_loss_sq(n as f64, k, self.family.loss_x(), mu)?;
                    gain[n] = g2.sqrt();
                    loss[n] = l2.sqrt();
                }
            }
        }
        Ok(CoefficientTable { variant, gain, loss })
    }

    /// r = 1 / Σ L̃ₙ² ρₙ over the exact loss coefficients.
    pub fn normalization_r(&self, steady: &NumberDistribution) -> Result<f64> {
        self.coefficients(Variant::Exact)?.normalization_r(steady)
    }
}

fn sine_ratio(n: usize, dim: usize) -> f64 {
    let w = PI / (dim as f64 + 1.0);
    ((n as f64 + 1.0) * w).sin() / (n as f64 * w).sin()
}

fn exact_gain(n: usize, dim: usize, p: f64, x: f64) -> f64 {
    let e = p * x / 2.0;
    if e == 0.0 {
        return 1.0;
    }
    sine_ratio(n, dim).powf(e)
}

fn exact_loss(n: usize, dim: usize, p: f64, x: f64) -> f64 {
    let e = p * (1.0 - x) / 2.0;
    if e == 0.0 {
        return 1.0;
    }
    sine_ratio(n, dim).recip().powf(e)
}

/// L_n(k,x)² = 1 + k(1−x)(n−μ).
pub fn linearized_loss_sq(n: f64, k: f64, x: f64, mu: f64) -> Result<f64> {
    let v = 1.0 + k * (1.0 - x) * (n - mu);
    if v.is_nan() || v <= 0.0 {
        return Err(domain(format!(
            "linearized loss coefficient squared is {v} at n = {n}; shrink k or recenter"
        )));
    }
    Ok(v)
}

/// G_{n+1}(k,x)² = 1 − kx(n−μ).
pub fn linearized_gain_sq(n: f64, k: f64, x: f64, mu: f64) -> Result<f64> {
    let v = 1.0 - k * x * (n - mu);
    if v.is_nan() || v <= 0.0 {
        return Err(domain(format!(
            "linearized gain coefficient squared is {v} at n = {n}; shrink k or recenter"
        )));
    }
    Ok(v)
}

/// Amplitude tables of length D+1; entries 0 and D are zero so that the
/// truncation at the top and bottom of the ladder needs no special casing.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub variant: Variant,
    pub gain: Vec<f64>,
    pub loss: Vec<f64>,
}

impl CoefficientTable {
    pub fn dim(&self) -> usize {
        self.gain.len() - 1
    }

    pub fn normalization_r(&self, steady: &NumberDistribution) -> Result<f64> {
        if steady.dim() != self.dim() {
            return Err(domain("steady state dimension does not match model"));
        }
        let w = steady.weights();
        let denom: f64 = (1..self.dim()).map(|n| self.loss[n].powi(2) * w[n]).sum();
        if !(denom.is_finite() && denom != 0.0) {
            return Err(Error::Degenerate(format!(
                "loss expectation is {denom}; cannot normalize flux"
            )));
        }
        Ok(denom.recip())
    }
}

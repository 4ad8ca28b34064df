//! Phase-displaced pure cavity states and the pure-phase-diffusion test.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::error::{domain, Error, Result};
use crate::liouvillian::Liouvillian;
use crate::model::{Family, LaserModel, Variant};
use crate::steady::NumberDistribution;

/// Largest dimension for which dense phase states are built.
pub const MAX_DIM: usize = 1001;

#[derive(Debug, Clone)]
pub struct PhaseState {
    pub dist: NumberDistribution,
    pub phi: f64,
    pub matrix: DMatrix<Complex64>,
    /// Total weight removed by clamping negative populations to zero.
    pub clamped_mass: f64,
}

fn build(amplitudes: &[f64], phi: f64, weight: impl Fn(isize) -> f64) -> DMatrix<Complex64> {
    let d = amplitudes.len();
    DMatrix::from_fn(d, d, |m, n| {
        let s = m as isize - n as isize;
        let ph = Complex64::from_polar(1.0, phi * s as f64);
        ph * (weight(s) * amplitudes[m] * amplitudes[n])
    })
}

fn check_dim(d: usize) -> Result<()> {
    if d > MAX_DIM {
        return Err(domain(format!("phase states are limited to D <= {MAX_DIM}")));
    }
    Ok(())
}

/// |ψ^φ⟩⟨ψ^φ| with ψ_n = √ρ_n e^{iφn}.
pub fn pure_phase_state(dist: &NumberDistribution, phi: f64) -> Result<PhaseState> {
    if dist.weights().iter().any(|&w| w < 0.0) {
        return Err(domain("pure phase state needs nonnegative weights"));
    }
    pure_phase_state_clamped(dist, phi)
}

/// As `pure_phase_state`, with negative weights set to zero and reported.
pub fn pure_phase_state_clamped(dist: &NumberDistribution, phi: f64) -> Result<PhaseState> {
    check_dim(dist.dim())?;
    let clamped_mass = dist.weights().iter().filter(|&&w| w < 0.0).map(|w| -w).sum();
    let amps: Vec<f64> = dist.weights().iter().map(|&w| w.max(0.0).sqrt()).collect();
    Ok(PhaseState {
        dist: dist.clone(),
        phi,
        matrix: build(&amps, phi, |_| 1.0),
        clamped_mass,
    })
}

/// ∂²ϱ^φ/∂φ², entrywise −(m−n)²·ϱ^φ_{mn}.
pub fn second_phase_derivative(dist: &NumberDistribution, phi: f64) -> Result<DMatrix<Complex64>> {
    if dist.weights().iter().any(|&w| w < 0.0) {
        return Err(domain("phase derivative needs nonnegative weights"));
    }
    check_dim(dist.dim())?;
    let amps: Vec<f64> = dist.weights().iter().map(|w| w.sqrt()).collect();
    Ok(build(&amps, phi, |s| -((s * s) as f64)))
}

fn clamped(dist: &NumberDistribution) -> Result<NumberDistribution> {
    NumberDistribution::new(dist.weights().iter().map(|w| w.max(0.0)).collect(), dist.mu_model)
}

fn hs_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// The pair (A, B) = (∂²ϱ/∂φ², ℒϱ) for the model's own steady state.
fn comparison_pair(liou: &Liouvillian, phi: f64) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>, f64)> {
    let steady = liou.steady_state();
    let clamped_mass = steady.weights().iter().filter(|&&w| w < 0.0).map(|w| -w).sum();
    let dist = clamped(steady)?;
    let state = pure_phase_state(&dist, phi)?;
    let b = liou.apply_to_state(&state.matrix)?;
    let a = second_phase_derivative(&dist, phi)?;
    Ok((a, b, clamped_mass))
}

/// R = ‖(ℓ/2)A − B‖ / ‖B‖ in the Hilbert–Schmidt norm.
pub fn relative_distance(liou: &Liouvillian, ell: f64, phi: f64) -> Result<f64> {
    let (a, b, _) = comparison_pair(liou, phi)?;
    distance_from_pair(&a, &b, ell)
}

fn distance_from_pair(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, ell: f64) -> Result<f64> {
    let bn = hs_inner(b, b).sqrt();
    if bn == 0.0 {
        return Err(Error::Degenerate("the generator annihilates the phase state".into()));
    }
    let diff = a * Complex64::new(ell / 2.0, 0.0) - b;
    Ok(hs_inner(&diff, &diff).sqrt() / bn)
}

/// ℓ* = 2⟨A,B⟩/⟨A,A⟩, the minimizer of R.
pub fn best_match_ell(liou: &Liouvillian, phi: f64) -> Result<f64> {
    let (a, b, _) = comparison_pair(liou, phi)?;
    Ok(2.0 * hs_inner(&a, &b) / hs_inner(&a, &a))
}

/// Norm of the part of the p-family generator that moves the steady state out of itself: √ρ_{D−1}.
pub fn eigenstate_residual(dist: &NumberDistribution) -> f64 {
    dist.weights()[dist.dim() - 1].max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionReport {
    #[serde(flatten)]
    pub family: Family,
    pub p: f64,
    pub mu: f64,
    pub r: f64,
    pub r_best: f64,
    pub ell_analytic: f64,
    pub ell_best: f64,
    pub clamped_mass: f64,
}

/// R at the analytic ℓ, the least-squares ℓ and the minimal R, at φ = 0.
pub fn diffusion_report(model: &LaserModel) -> Result<DiffusionReport> {
    let liou = Liouvillian::new(*model, Variant::Exact)?;
    let (a, b, clamped_mass) = comparison_pair(&liou, 0.0)?;
    let ell_analytic = analytics::diffusion_rate(model.family, model.p, model.mu(), model.flux);
    let ell_best = 2.0 * hs_inner(&a, &b) / hs_inner(&a, &a);
    Ok(DiffusionReport {
        family: model.family,
        p: model.p,
        mu: model.mu(),
        r: distance_from_pair(&a, &b, ell_analytic)?,
        r_best: distance_from_pair(&a, &b, ell_best)?,
        ell_analytic,
        ell_best,
        clamped_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::exact_steady_state;

    #[test]
    fn phase_state_basics() {
        let d = exact_steady_state(9, 3.0).unwrap();
        let s = pure_phase_state(&d, 0.0).unwrap();
        assert!(s.matrix.iter().all(|z| z.im == 0.0));
        let tr: Complex64 = s.matrix.diagonal().iter().sum();
        assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-15);
        for n in 0..9 {
            assert!((s.matrix[(n, n)].re - d.weights()[n]).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_average_is_diagonal() {
        let d = exact_steady_state(12, 2.0).unwrap();
        let mut acc = DMatrix::<Complex64>::zeros(12, 12);
        for i in 0..64 {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
            acc += pure_phase_state(&d, phi).unwrap().matrix;
        }
        acc /= Complex64::new(64.0, 0.0);
        for m in 0..12 {
            for n in 0..12 {
                let want = if m == n { d.weights()[n] } else { 0.0 };
                assert!((acc[(m, n)].re - want).abs() < 1e-10 && acc[(m, n)].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn derivative_entries() {
        let d = exact_steady_state(7, 2.0).unwrap();
        let a = second_phase_derivative(&d, 0.0).unwrap();
        let w = d.weights();
        for n in 0..7 {
            assert_eq!(a[(n, n)].norm(), 0.0);
        }
        for n in 0..6 {
            assert!((a[(n + 1, n)].re + (w[n + 1] * w[n]).sqrt()).abs() < 1e-15);
        }
        let h = a.adjoint() - &a;
        assert!(h.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn negative_weights_rejected() {
        let d = NumberDistribution::new(vec![0.6, 0.5, -0.1], 1.0).unwrap();
        assert!(pure_phase_state(&d, 0.0).is_err());
        let s = pure_phase_state_clamped(&d, 0.0).unwrap();
        assert!((s.clamped_mass - 0.1).abs() < 1e-15);
    }

    #[test]
    fn residual_hand_value() {
        let d = exact_steady_state(3, 2.0).unwrap();
        assert!((eigenstate_residual(&d) - 0.5).abs() < 1e-15);
    }
}

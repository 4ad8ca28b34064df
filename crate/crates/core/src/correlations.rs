//! Beam observables from the sector dynamics.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::liouvillian::{Liouvillian, SectorOperator};
use crate::model::{LaserModel, Variant};
use crate::propagate::{propagate, propagate_with, OdeOptions, StiffIntegrator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    G1,
    G2,
    SpectrumI,
    MandelQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub kind: SeriesKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub model: LaserModel,
    pub variant: Variant,
    pub flux: f64,
    /// Grid indices where the per-point solve failed; their values are NaN.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<usize>,
}

impl CorrelationSeries {
    fn new(liou: &Liouvillian, kind: SeriesKind, grid: Vec<f64>, values: Vec<f64>) -> Self {
        CorrelationSeries {
            kind,
            grid,
            values,
            model: *liou.model(),
            variant: liou.variant(),
            flux: liou.model().flux,
            failed: Vec::new(),
        }
    }
}

/// Above this many relaxation times the implicit integrator replaces Runge–Kutta.
const RK_HORIZON: f64 = 2e5;

fn evolve(op: &SectorOperator, v0: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let horizon = grid.last().copied().unwrap_or(0.0) * op.norm_inf();
    if horizon <= RK_HORIZON {
        propagate(op, v0, grid)
    } else {
        StiffIntegrator::new(op).propagate_grid(v0, grid)
    }
}

fn evolve_with(op: &SectorOperator, v0: &[f64], grid: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>> {
    let horizon = grid.last().copied().unwrap_or(0.0) * op.norm_inf();
    if horizon <= RK_HORIZON {
        propagate_with(op, v0, grid, opts)
    } else {
        StiffIntegrator::with_options(op, *opts).propagate_grid(v0, grid)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L̂ρ_ss on the s = −1 diagonal and the L̂† contraction weights.
pub fn g1_vectors(liou: &Liouvillian) -> (Vec<f64>, Vec<f64>) {
    let d = liou.dim();
    let l = &liou.table().loss;
    let rho = liou.steady_state().weights();
    let v = (0..d - 1).map(|j| l[j + 1] * rho[j + 1]).collect();
    let w = (0..d - 1).map(|j| l[j + 1]).collect();
    (v, w)
}

/// Normalized populations of L̂ρ_ssL̂† and the L̂†L̂ weights.
pub fn g2_vectors(liou: &Liouvillian) -> (Vec<f64>, Vec<f64>) {
    let d = liou.dim();
    let l = &liou.table().loss;
    let rho = liou.steady_state().weights();
    let mut u: Vec<f64> = (0..d)
        .map(|j| {
            if j + 1 < d {
                l[j + 1] * l[j + 1] * rho[j + 1]
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = u.iter().sum();
    for x in u.iter_mut() {
        *x /= total;
    }
    let w = (0..d).map(|m| l[m] * l[m]).collect();
    (u, w)
}

pub fn g1(liou: &Liouvillian, grid: &[f64]) -> Result<CorrelationSeries> {
    g1_with(liou, grid, None)
}

/// `g1` with explicit integrator tolerances.
pub fn g1_with(liou: &Liouvillian, grid: &[f64], opts: Option<&OdeOptions>) -> Result<CorrelationSeries> {
    let op = liou.sector(-1)?;
    let (v, w) = g1_vectors(liou);
    let scale = liou.rate();
    let traj = match opts {
        Some(o) => evolve_with(&op, &v, grid, o)?,
        None => evolve(&op, &v, grid)?,
    };
    let values = traj.iter().map(|x| scale * dot(&w, x)).collect();
    Ok(CorrelationSeries::new(liou, SeriesKind::G1, grid.to_vec(), values))
}

pub fn g2(liou: &Liouvillian, grid: &[f64]) -> Result<CorrelationSeries> {
    g2_with(liou, grid, None)
}

pub fn g2_with(liou: &Liouvillian, grid: &[f64], opts: Option<&OdeOptions>) -> Result<CorrelationSeries> {
    let op = liou.sector(0)?;
    let (u, w) = g2_vectors(liou);
    let r = liou.normalization_r();
    let traj = match opts {
        Some(o) => evolve_with(&op, &u, grid, o)?,
        None => evolve(&op, &u, grid)?,
    };
    let values = traj.iter().map(|x| r * dot(&w, x)).collect();
    Ok(CorrelationSeries::new(liou, SeriesKind::G2, grid.to_vec(), values))
}

/// 𝔠 = ∫G¹ over all time, from one banded solve on the s = −1 sector.
pub fn coherence(liou: &Liouvillian) -> Result<f64> {
    let op = liou.sector(-1)?;
    let (v, w) = g1_vectors(liou);
    let lu = op.to_banded(0.0).lu().map_err(|e| {
        Error::Degenerate(format!(
            "coherence sector is singular, first-order coherence does not decay ({e})"
        ))
    })?;
    let rhs: Vec<f64> = v.iter().map(|x| -x).collect();
    let x = lu.solve(&rhs)?;
    let c = 2.0 * liou.rate() * dot(&w, &x);
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Degenerate(format!(
            "first-order coherence does not decay (integral {c})"
        )));
    }
    Ok(c)
}

/// One block of a graded time grid: `per` equal steps from `start`.
struct Block {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl Block {
    /// Composite Simpson of f(t)·value(t) over the block.
    fn simpson(&self, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.values.len() - 1;
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += c * v * f(self.start + self.step * i as f64);
        }
        acc * self.step / 3.0
    }
}

enum Stop {
    /// End exactly at this time.
    At(f64),
    /// End once a whole block stays below `tol` in magnitude, after `min_time`.
    Decayed { tol: f64, min_time: f64 },
}

/// scale·⟨w, e^{At}v⟩ + offset on blocks of `per` steps (even). The first block
/// uses steps of 1/‖A‖ and each later block spans the time elapsed so far, so
/// transients on every scale between 1/‖A‖ and the horizon are resolved.
/// Steps never exceed `max_step`. With `stationary` set, `v` must be trace
/// free and any trace picked up from roundoff is removed at each block end.
#[allow(clippy::too_many_arguments)]
fn graded_series(
    op: &SectorOperator,
    v: &[f64],
    w: &[f64],
    stationary: Option<&[f64]>,
    (scale, offset): (f64, f64),
    per: usize,
    max_step: f64,
    stop: Stop,
) -> Result<Vec<Block>> {
    let mut stiff = StiffIntegrator::new(op);
    let mut x = v.to_vec();
    let mut blocks = Vec::new();
    let mut start = 0.0;
    let mut step = 1.0 / op.norm_inf();
    let (mut highest, mut lowest, mut lowest_at) = (0.0f64, f64::INFINITY, 0);
    for _ in 0..1_000_000 {
        step = step.min(max_step);
        let mut last = false;
        if let Stop::At(t_end) = stop {
            if start + 2.0 * step * per as f64 >= t_end {
                step = (t_end - start) / per as f64;
                last = true;
            }
        }
        let grid: Vec<f64> = (0..=per).map(|i| step * i as f64).collect();
        let traj = stiff.propagate_grid(&x, &grid)?;
        let values: Vec<f64> = traj.iter().map(|y| scale * dot(w, y) + offset).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::numeric("time integration diverged", f64::INFINITY));
        }
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = traj.into_iter().last().unwrap();
        if let Some(rho) = stationary {
            let tr: f64 = x.iter().sum();
            for (xi, ri) in x.iter_mut().zip(rho) {
                *xi -= tr * ri;
            }
        }
        blocks.push(Block { start, step, values });
        start += step * per as f64;
        if let Stop::Decayed { tol, min_time } = stop {
            last = peak < tol && start >= min_time;
            highest = highest.max(peak);
            if peak < lowest {
                (lowest, lowest_at) = (peak, blocks.len());
            }
            // Deep into the tail, roundoff leaking into the stationary mode
            // makes the signal creep back up. Cut at the floor.
            if !last && start >= min_time && lowest < 1e-6 * highest && peak > 2.0 * lowest {
                blocks.truncate(lowest_at);
                return Ok(blocks);
            }
        }
        if last {
            return Ok(blocks);
        }
        step = start / per as f64;
    }
    Err(Error::Degenerate("correlation does not decay".into()))
}

/// 𝔠 by Simpson integration of G¹ on a graded grid reaching far past 1/ℓ.
pub fn coherence_time_integral(liou: &Liouvillian) -> Result<f64> {
    let op = liou.sector(-1)?;
    let (v, w) = g1_vectors(liou);
    let scale = liou.rate();
    let g0 = scale * dot(&w, &v);
    let stop = Stop::Decayed {
        tol: 1e-10 * g0.abs(),
        min_time: 1.0 / liou.model().flux,
    };
    let blocks = graded_series(&op, &v, &w, None, (scale, 0.0), 64, f64::INFINITY, stop)?;
    Ok(2.0 * blocks.iter().map(|b| b.simpson(|_| 1.0)).sum::<f64>())
}

/// Shift keeping the population sector invertible near ω = 0. It must be
/// small against the slowest relaxation rate 𝒩k, not against ‖A‖: edge rates
/// make ‖A‖ astronomically large while the physics lives near 𝒩k. The stray
/// null-space component it admits is projected out afterwards.
fn deflation_shift(liou: &Liouvillian) -> f64 {
    1e-10 * liou.model().flux * liou.model().k()
}

/// Returns (S(ω), ok) for every ω via complex banded resolvent solves.
fn spectrum_points(liou: &Liouvillian, omegas: &[f64]) -> Result<Vec<Option<f64>>> {
    let op = liou.sector(0)?;
    let (u0, w) = g2_vectors(liou);
    let rho = liou.steady_state().weights().to_vec();
    let u: Vec<f64> = u0.iter().zip(&rho).map(|(a, b)| a - b).collect();
    let r = liou.normalization_r();
    let flux = liou.model().flux;
    let eps = deflation_shift(liou);
    let out = omegas
        .par_iter()
        .map(|&om| {
            let lu = op.to_banded(Complex64::new(-eps, om)).lu().ok()?;
            let rhs: Vec<Complex64> = u.iter().map(|&x| Complex64::new(-x, 0.0)).collect();
            let mut y = lu.solve(&rhs).ok()?;
            let s: Complex64 = y.iter().sum();
            for (yi, &ri) in y.iter_mut().zip(&rho) {
                *yi -= s * ri;
            }
            let acc: f64 = y.iter().zip(&w).map(|(a, b)| a.re * b).sum();
            let val = flux + 2.0 * flux * flux * r * acc;
            val.is_finite().then_some(val)
        })
        .collect();
    Ok(out)
}

pub fn intensity_spectrum(liou: &Liouvillian, omegas: &[f64]) -> Result<CorrelationSeries> {
    check_increasing(omegas)?;
    let pts = spectrum_points(liou, omegas)?;
    let mut series = CorrelationSeries::new(liou, SeriesKind::SpectrumI, omegas.to_vec(), Vec::new());
    for (i, p) in pts.into_iter().enumerate() {
        match p {
            Some(v) => series.values.push(v),
            None => {
                series.values.push(f64::NAN);
                series.failed.push(i);
            }
        }
    }
    Ok(series)
}

fn g2_excess_blocks(liou: &Liouvillian, per: usize, max_step: f64, stop: Stop) -> Result<Vec<Block>> {
    let op = liou.sector(0)?;
    let (u, w) = g2_vectors(liou);
    let rho = liou.steady_state().weights();
    let u: Vec<f64> = u.iter().zip(rho).map(|(a, b)| a - b).collect();
    graded_series(
        &op,
        &u,
        &w,
        Some(rho),
        (liou.normalization_r(), 0.0),
        per,
        max_step,
        stop,
    )
}

/// 𝒩 + 2𝒩²∫₀^∞ cos(ωt)[g²(t)−1]dt by Simpson on a graded grid, as an
/// independent check of the resolvent spectrum.
pub fn intensity_spectrum_time_integral(liou: &Liouvillian, omegas: &[f64]) -> Result<CorrelationSeries> {
    check_increasing(omegas)?;
    let flux = liou.model().flux;
    let om_max = omegas.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let max_step = if om_max > 0.0 { 0.05 / om_max } else { f64::INFINITY };
    let (u, w) = g2_vectors(liou);
    let h0 = (liou.normalization_r() * dot(&w, &u) - 1.0).abs();
    let stop = Stop::Decayed {
        tol: (1e-9 * h0).max(1e-13),
        min_time: 1.0 / (flux * liou.model().k()),
    };
    let blocks = g2_excess_blocks(liou, 64, max_step, stop)?;
    let values = omegas
        .iter()
        .map(|&om| flux + 2.0 * flux * flux * blocks.iter().map(|b| b.simpson(|t| (om * t).cos())).sum::<f64>())
        .collect();
    Ok(CorrelationSeries::new(
        liou,
        SeriesKind::SpectrumI,
        omegas.to_vec(),
        values,
    ))
}

/// Q_t = (2𝒩/t)∫₀ᵗ (t−t′)[g²(t′)−1]dt′ by composite Simpson on a graded
/// grid, doubling the points per block until successive values agree to 10⁻⁴.
pub fn mandel_q(liou: &Liouvillian, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("counting window must be positive, got {t}")));
    }
    let flux = liou.model().flux;
    let eval = |per: usize| -> Result<f64> {
        let blocks = g2_excess_blocks(liou, per, f64::INFINITY, Stop::At(t))?;
        Ok(2.0 * flux / t * blocks.iter().map(|b| b.simpson(|s| t - s)).sum::<f64>())
    };
    let mut per = 8;
    let mut q = eval(per)?;
    loop {
        per *= 2;
        let q2 = eval(per)?;
        if (q2 - q).abs() < 1e-4 {
            return Ok(q2);
        }
        if per >= 1024 {
            return Err(crate::error::numeric(
                "Mandel-Q quadrature did not converge",
                (q2 - q).abs(),
            ));
        }
        q = q2;
    }
}

/// Q_t from ∫₀ᵗ(t−t′)e^{At′}dt′ = A⁻²(e^{At}−1) − tA⁻¹ on the trace-free
/// subspace. Independent of any quadrature; used to cross-check `mandel_q`.
pub fn mandel_q_closed_form(liou: &Liouvillian, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("counting window must be positive, got {t}")));
    }
    let op = liou.sector(0)?;
    let (u0, w) = g2_vectors(liou);
    let rho = liou.steady_state().weights();
    let u: Vec<f64> = u0.iter().zip(rho).map(|(a, b)| a - b).collect();
    let eps = deflation_shift(liou);
    let lu = op.to_banded(-eps).lu()?;
    let solve = |b: &[f64]| -> Result<Vec<f64>> {
        let mut y = lu.solve(b)?;
        let s: f64 = y.iter().sum();
        for (yi, ri) in y.iter_mut().zip(rho) {
            *yi -= s * ri;
        }
        Ok(y)
    };
    let ut = evolve(&op, &u, &[0.0, t])?.pop().unwrap();
    let diff: Vec<f64> = ut.iter().zip(&u).map(|(a, b)| a - b).collect();
    let a2 = solve(&solve(&diff)?)?;
    let a1 = solve(&u)?;
    let v: Vec<f64> = a2.iter().zip(&a1).map(|(x, y)| x - t * y).collect();
    Ok(2.0 * liou.model().flux / t * liou.normalization_r() * dot(&w, &v))
}

/// Full width at half depth of the noise dip around ω = 0, found by bisection
/// on the resolvent spectrum.
pub fn spectrum_half_width(liou: &Liouvillian) -> Result<f64> {
    let flux = liou.model().flux;
    let at = |om: f64| -> Result<f64> {
        spectrum_points(liou, &[om])?[0]
            .ok_or_else(|| crate::error::numeric(format!("spectrum solve failed at {om}"), f64::NAN))
    };
    let depth = at(0.0)? - flux;
    if depth.abs() < 1e-12 * flux {
        return Err(Error::Degenerate(
            "spectrum has no noise feature at zero frequency".into(),
        ));
    }
    let half = |om: f64| -> Result<f64> { Ok((at(om)? - flux) / depth - 0.5) };
    let mut hi = flux * liou.model().k();
    while half(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 * flux {
            return Err(crate::error::numeric("half width not bracketed", hi));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if half(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(lo + hi)
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(domain("grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// 0 followed by 400 geometric points over [10⁻³, 50]/(𝒩k).
pub fn default_time_grid(model: &LaserModel) -> Vec<f64> {
    let scale = 1.0 / (model.flux * model.k());
    let (a, b, n) = (1e-3f64, 50.0f64, 400);
    let mut g = vec![0.0];
    g.extend((0..n).map(|i| scale * a * (b / a).powf(i as f64 / (n - 1) as f64)));
    g
}

/// 0 followed by 400 geometric points from 10⁻³/(𝒩k) to 20/ℓ, where
/// ℓ = 4𝒩/𝔠 is taken from the numerically computed coherence.
pub fn default_g1_grid(liou: &Liouvillian) -> Result<Vec<f64>> {
    let model = liou.model();
    let ell = 4.0 * model.flux / coherence(liou)?;
    let a = 1e-3 / (model.flux * model.k());
    let b = (20.0 / ell).max(10.0 * a);
    let n = 400;
    let mut g = vec![0.0];
    g.extend((0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)));
    Ok(g)
}

/// 200 points over [0, 20·𝒩k].
pub fn default_frequency_grid(model: &LaserModel) -> Vec<f64> {
    let top = 20.0 * model.flux * model.k();
    (0..200).map(|i| top * i as f64 / 199.0).collect()
}

/// Least-squares slope of ln|y| against t, returned as a positive decay rate.
pub fn fit_decay_rate(t: &[f64], y: &[f64]) -> Result<f64> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(domain("need at least two matching samples"));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let (slope, _) = linear_fit(t, &ly);
    Ok(-slope)
}

/// Unweighted least-squares line; returns (slope, intercept).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Family;

    fn liou(family: Family, mu: usize, p: f64) -> Liouvillian {
        Liouvillian::new(LaserModel::with_mu(family, mu, p, 1.0).unwrap(), Variant::Exact).unwrap()
    }

    #[test]
    fn g1_starts_at_flux() {
        let l = Liouvillian::new(
            LaserModel::with_mu(Family::PLambda { lambda: 0.3 }, 20, 6.0, 2.5).unwrap(),
            Variant::Exact,
        )
        .unwrap();
        let s = g1(&l, &[0.0, 1.0]).unwrap();
        assert!((s.values[0] / 2.5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_paths_agree_small_model() {
        let l = liou(Family::PQ { q: -0.5 }, 15, 6.0);
        let a = coherence(&l).unwrap();
        let b = coherence_time_integral(&l).unwrap();
        assert!((a / b - 1.0).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn spectrum_paths_agree_small_model() {
        let l = liou(Family::PLambda { lambda: 0.5 }, 20, 8.0);
        let k = l.model().k();
        let om = [0.0, 0.5 * k, 2.0 * k, 10.0 * k];
        let a = intensity_spectrum(&l, &om).unwrap();
        let b = intensity_spectrum_time_integral(&l, &om).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x / y - 1.0).abs() < 5e-3, "{x} vs {y}");
        }
    }

    #[test]
    fn fit_recovers_rate() {
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.0 * (-0.25 * x).exp()).collect();
        assert!((fit_decay_rate(&t, &y).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn default_grids_are_increasing() {
        let m = LaserModel::with_mu(Family::PFamily, 50, 10.0, 1.0).unwrap();
        let g = default_time_grid(&m);
        assert_eq!(g.len(), 401);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(default_frequency_grid(&m).len(), 200);
    }

    #[test]
    fn mandel_q_rejects_nonpositive_window() {
        let l = liou(Family::PFamily, 5, 2.0);
        assert!(mandel_q(&l, 0.0).is_err());
    }
}

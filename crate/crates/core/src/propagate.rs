//! Time evolution dv/dt = A·v on a single sector.

use crate::banded::BandedLu;
use crate::error::{domain, Error, Result};
use crate::liouvillian::SectorOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-13,
            max_steps: 50_000_000,
        }
    }
}

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid[0] != 0.0 {
        return Err(domain("time grid must start at 0"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|t| !t.is_finite()) {
        return Err(domain("time grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Dormand–Prince 5(4) with FSAL and standard step-size control, reporting the
/// state at every grid point.
pub fn integrate<F>(mut f: F, y0: &[f64], grid: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    check_grid(grid)?;
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y.clone());
    if grid.len() == 1 {
        return Ok(out);
    }
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(&y, &mut k[0]);

    let wnorm = |v: &[f64], y: &[f64]| -> f64 {
        let s: f64 = v
            .iter()
            .zip(y)
            .map(|(a, b)| (a / (opts.atol + opts.rtol * b.abs())).powi(2))
            .sum();
        (s / n.max(1) as f64).sqrt()
    };
    let d0 = wnorm(&y, &y);
    let d1 = wnorm(&k[0], &y);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(grid[grid.len() - 1]);

    let mut t = 0.0;
    let mut steps = 0usize;
    for &target in &grid[1..] {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Integration {
                    message: format!("step budget {} exhausted", opts.max_steps),
                    last_good_time: t,
                });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            let stages: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
            for (s, a) in stages.iter().enumerate() {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, aj) in a.iter().enumerate() {
                        acc += aj * k[j][i];
                    }
                    tmp[i] = y[i] + hs * acc;
                }
                f(&tmp, &mut k[s + 1]);
            }
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..6 {
                    acc += B[j] * k[j][i];
                }
                ynew[i] = y[i] + hs * acc;
            }
            f(&ynew, &mut k[6]);
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * k[j][i];
                }
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err += (hs * e / sc).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            steps += 1;
            if !err.is_finite() {
                return Err(Error::Integration {
                    message: "non-finite error estimate".into(),
                    last_good_time: t,
                });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                if !last || factor < 1.0 {
                    h = hs * factor;
                }
            } else {
                h = hs * factor.min(1.0);
            }
            if h < 1e-14 * t.max(1.0) {
                return Err(Error::Integration {
                    message: format!("step size underflow (h = {h:e})"),
                    last_good_time: t,
                });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// v(t) on every grid point for the sector generator.
pub fn propagate(op: &SectorOperator, v0: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    propagate_with(op, v0, grid, &OdeOptions::default())
}

pub fn propagate_with(op: &SectorOperator, v0: &[f64], grid: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>> {
    if v0.len() != op.dim() {
        return Err(domain(format!(
            "initial vector length {} does not match sector dimension {}",
            v0.len(),
            op.dim()
        )));
    }
    integrate(|y, dy| op.apply_into(y, dy), v0, grid, opts)
}

// L-stable SDIRK of order 4 with an embedded order-3 estimate (γ = 1/4).
const GAMMA: f64 = 0.25;
const SA: [[f64; 4]; 5] = [
    [0.0, 0.0, 0.0, 0.0],
    [0.5, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0],
];
const SB: [f64; 5] = [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25];
const SBHAT: [f64; 5] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0];

/// Implicit integrator for stiff sectors. Each stage is one banded solve with
/// I − γhA, so the cost is independent of ‖A‖ and horizons of 10²⁰/‖A‖ are
/// routine. The LU is reused until the step size changes.
pub struct StiffIntegrator {
    op: SectorOperator,
    opts: OdeOptions,
    lu: Option<(f64, BandedLu<f64>)>,
    /// Step size carried over between calls.
    h: Option<f64>,
}

impl StiffIntegrator {
    pub fn new(op: &SectorOperator) -> Self {
        Self::with_options(
            op,
            OdeOptions {
                rtol: 1e-9,
                atol: 1e-14,
                max_steps: 10_000_000,
            },
        )
    }

    pub fn with_options(op: &SectorOperator, opts: OdeOptions) -> Self {
        StiffIntegrator {
            op: op.clone(),
            opts,
            lu: None,
            h: None,
        }
    }

    fn factor(&mut self, h: f64) -> Result<&BandedLu<f64>> {
        let fresh = !matches!(&self.lu, Some((hh, _)) if *hh == h);
        if fresh {
            let lu = self.op.to_banded(-1.0 / (GAMMA * h)).lu()?;
            self.lu = Some((h, lu));
        }
        Ok(&self.lu.as_ref().unwrap().1)
    }

    /// Solves (I − γhA)z = r in place.
    fn implicit_solve(&mut self, h: f64, r: &mut [f64]) -> Result<()> {
        let c = -1.0 / (GAMMA * h);
        for x in r.iter_mut() {
            *x *= c;
        }
        self.factor(h)?.solve_in_place(r)
    }

    /// One step of size h; returns the new state and the weighted error norm.
    fn step(&mut self, y: &[f64], h: f64) -> Result<(Vec<f64>, f64)> {
        let n = y.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(5);
        let mut tmp = vec![0.0; n];
        for row in SA.iter() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += row[j] * kj[i];
                }
                tmp[i] = y[i] + h * acc;
            }
            let mut ki = vec![0.0; n];
            self.op.apply_into(&tmp, &mut ki);
            self.implicit_solve(h, &mut ki)?;
            k.push(ki);
        }
        let mut ynew = y.to_vec();
        let mut err = vec![0.0; n];
        for i in 0..n {
            for j in 0..5 {
                ynew[i] += h * SB[j] * k[j][i];
                err[i] += h * (SB[j] - SBHAT[j]) * k[j][i];
            }
        }
        // Filtering the estimate through (I − γhA)⁻¹ stops stiff components
        // from forcing needlessly small steps.
        let mut filtered = err;
        self.implicit_solve(h, &mut filtered)?;
        let norm = filtered
            .iter()
            .zip(y.iter().zip(&ynew))
            .map(|(e, (a, b))| (e / (self.opts.atol + self.opts.rtol * a.abs().max(b.abs()))).powi(2))
            .sum::<f64>();
        Ok((ynew, (norm / n as f64).sqrt()))
    }

    /// v(t) at every grid point.
    pub fn propagate_grid(&mut self, v0: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_grid(grid)?;
        if v0.len() != self.op.dim() {
            return Err(domain("initial vector length does not match sector dimension"));
        }
        let mut y = v0.to_vec();
        let mut out = Vec::with_capacity(grid.len());
        out.push(y.clone());
        let mut t = 0.0;
        let mut h = self.h.unwrap_or(1.0 / self.op.norm_inf().max(1e-300));
        let mut steps = 0usize;
        for &target in &grid[1..] {
            while t < target {
                steps += 1;
                if steps > self.opts.max_steps {
                    return Err(Error::Integration {
                        message: format!("step budget {} exhausted", self.opts.max_steps),
                        last_good_time: t,
                    });
                }
                let remaining = target - t;
                let last = h >= remaining;
                let hs = if last { remaining } else { h };
                let (ynew, err) = self.step(&y, hs)?;
                if !err.is_finite() {
                    return Err(Error::Integration {
                        message: "non-finite error estimate".into(),
                        last_good_time: t,
                    });
                }
                let factor = if err == 0.0 {
                    4.0
                } else {
                    (0.9 * err.powf(-0.25)).clamp(0.2, 4.0)
                };
                if err <= 1.0 {
                    t = if last { target } else { t + hs };
                    y = ynew;
                    if !last || factor < 1.0 {
                        h = hs * factor;
                    }
                } else {
                    h = hs * factor.min(0.5);
                }
                // Snap to a coarse set of step sizes so the LU gets reused.
                h = 2f64.powf((h.log2() * 8.0).floor() / 8.0);
                if h < 1e-15 * t.max(1e-300) {
                    return Err(Error::Integration {
                        message: format!("step size underflow (h = {h:e})"),
                        last_good_time: t,
                    });
                }
            }
            out.push(y.clone());
        }
        self.h = Some(h);
        Ok(out)
    }
}

//! Adaptive-homodyne phase filter on a Wiener-phase coherent beam.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Coherence 4𝒩/ℓ of a beam with phase diffusion rate ℓ.
pub fn beam_coherence(flux: f64, ell: f64) -> f64 {
    4.0 * flux / ell
}

/// τ_F = √𝔠/(4𝒩).
pub fn filter_timescale(flux: f64, ell: f64) -> f64 {
    beam_coherence(flux, ell).sqrt() / (4.0 * flux)
}

/// Stationary filter variance V_F = √(ℓ/4𝒩).
pub fn stationary_variance(flux: f64, ell: f64) -> f64 {
    (ell / (4.0 * flux)).sqrt()
}

/// Mean-square error of a heterodyne phase estimate over a window τ.
pub fn heterodyne_mse(flux: f64, tau: f64) -> f64 {
    1.0 / (2.0 * flux * tau)
}

/// Admissible range of 𝒩τ for heterodyne pre-estimation: long enough to beat
/// shot noise, short compared with the diffusion-limited window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneWindow {
    pub lower: f64,
    pub upper: f64,
}

impl HeterodyneWindow {
    pub fn for_coherence(coherence: f64) -> Self {
        HeterodyneWindow {
            lower: 0.5,
            upper: coherence.sqrt() / 4.0,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }

    /// Both inequalities hold with at least `margin` to spare on each side.
    pub fn is_open(&self, margin: f64) -> bool {
        self.ratio() >= margin * margin
    }

    /// Geometric midpoint of the window.
    pub fn midpoint(&self) -> f64 {
        (self.lower * self.upper).sqrt()
    }

    /// Smallest coherence whose window is open with the given margin.
    pub fn threshold(margin: f64) -> f64 {
        (2.0 * margin * margin).powi(2)
    }
}

/// Margin used when reading "≪" as a numeric inequality.
pub const WINDOW_MARGIN: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainSchedule {
    /// V_F held at its stationary value.
    Stationary,
    /// V_F integrated from the heterodyne variance via dV/dt = ℓ − 4𝒩V².
    Riccati,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub ell: f64,
    pub flux: f64,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    /// Defaults to 10·τ_F, or a tenth of the run when τ_F is infinite.
    pub burn_in_steps: Option<usize>,
    pub gain: GainSchedule,
    /// Keep every n-th sample of the trajectories; 0 keeps none.
    pub record_every: usize,
    /// Overrides the heterodyne window 𝒩τ_het that sets the initial error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub het_window: Option<f64>,
}

impl FilterConfig {
    pub fn new(ell: f64, flux: f64, dt: f64, steps: usize, seed: u64) -> Self {
        FilterConfig {
            ell,
            flux,
            dt,
            steps,
            seed,
            burn_in_steps: None,
            gain: if ell > 0.0 {
                GainSchedule::Stationary
            } else {
                GainSchedule::Riccati
            },
            record_every: 0,
            het_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Paths {
    pub t: Vec<f64>,
    pub phase: Vec<f64>,
    pub estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRun {
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub ell: f64,
    pub flux: f64,
    pub gain: GainSchedule,
    pub burn_in_steps: usize,
    pub initial_error_variance: f64,
    pub mse: f64,
    /// Batch-means standard error of `mse`.
    pub mse_std_error: f64,
    pub mean_error: f64,
    pub mean_error_std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<Paths>,
}

/// Heterodyne window length 𝒩τ used to seed the filter: 10·√𝔠/40.
pub fn initial_window(flux: f64, ell: f64) -> f64 {
    if ell > 0.0 {
        10.0 * beam_coherence(flux, ell).sqrt() / 40.0
    } else {
        50.0
    }
}

pub fn simulate_filter(ell: f64, flux: f64, dt: f64, steps: usize, seed: u64) -> Result<EstimationRun> {
    simulate_filter_with(&FilterConfig::new(ell, flux, dt, steps, seed))
}

pub fn simulate_filter_with(cfg: &FilterConfig) -> Result<EstimationRun> {
    let FilterConfig {
        ell, flux, dt, steps, ..
    } = *cfg;
    if !(ell >= 0.0 && ell.is_finite()) {
        return Err(domain(format!("diffusion rate must be nonnegative, got {ell}")));
    }
    if !(flux > 0.0 && flux.is_finite()) || !(dt > 0.0 && dt.is_finite()) || steps == 0 {
        return Err(domain("flux, dt and steps must be positive"));
    }
    let v_stat = stationary_variance(flux, ell);
    if ell > 0.0 {
        let c = beam_coherence(flux, ell);
        if c < 1e4 {
            return Err(domain(format!(
                "coherence {c:.3e} is below the linearized regime (1e4)"
            )));
        }
        let tau = filter_timescale(flux, ell);
        if dt > 0.1 * tau {
            return Err(domain(format!("dt = {dt} exceeds a tenth of the filter time {tau}")));
        }
    } else if cfg.gain == GainSchedule::Stationary {
        return Err(domain(
            "a stationary gain is zero without phase diffusion; use the Riccati schedule",
        ));
    }
    let burn_in = match cfg.burn_in_steps {
        Some(b) => b,
        None if ell > 0.0 => (10.0 * filter_timescale(flux, ell) / dt).ceil() as usize,
        None => steps / 10,
    };
    if burn_in >= steps {
        return Err(domain(format!("burn-in of {burn_in} steps leaves no samples")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let window = cfg.het_window.unwrap_or_else(|| initial_window(flux, ell));
    if !(window > 0.0 && window.is_finite()) {
        return Err(domain(format!("heterodyne window must be positive, got {window}")));
    }
    let v0 = heterodyne_mse(flux, window / flux);
    let mut phase = 0.0f64;
    let mut est = phase + v0.sqrt() * normal();
    let mut v = match cfg.gain {
        GainSchedule::Stationary => v_stat,
        GainSchedule::Riccati => v0,
    };

    let sq_dt = dt.sqrt();
    let sq_ell = ell.sqrt();
    let sq_4n = (4.0 * flux).sqrt();
    let two_sq_n = 2.0 * flux.sqrt();

    let n_samples = steps - burn_in;
    let batches = 20.min(n_samples);
    let per_batch = n_samples / batches;
    let mut batch_sq = vec![0.0; batches];
    let mut batch_err = vec![0.0; batches];
    let mut sum_sq = 0.0;
    let mut sum_err = 0.0;
    let mut far_run = 0usize;
    let mut paths = (cfg.record_every > 0).then(Paths::default);

    for step in 0..steps {
        let dw = sq_dt * normal();
        let dzeta = sq_dt * normal();
        // Adaptive homodyne: local oscillator tracks the current estimate.
        let current = two_sq_n * (phase - est) * dt + dzeta;
        let y = current + sq_4n * est * dt;
        est += -4.0 * flux * v * est * dt + sq_4n * v * y;
        phase += sq_ell * dw;
        if cfg.gain == GainSchedule::Riccati {
            v += (ell - 4.0 * flux * v * v) * dt;
        }

        let e = phase - est;
        if !e.is_finite() {
            return Err(Error::Breakdown(format!("estimate diverged at step {step}")));
        }
        if e.abs() > 0.5 {
            far_run += 1;
            if far_run > 100 {
                return Err(Error::Breakdown(format!(
                    "|phase error| stayed above 0.5 rad for {far_run} steps at t = {}",
                    (step + 1) as f64 * dt
                )));
            }
        } else {
            far_run = 0;
        }
        if step >= burn_in {
            let i = step - burn_in;
            sum_sq += e * e;
            sum_err += e;
            let b = (i / per_batch).min(batches - 1);
            batch_sq[b] += e * e;
            batch_err[b] += e;
        }
        if let Some(p) = paths.as_mut() {
            if step % cfg.record_every == 0 {
                p.t.push((step + 1) as f64 * dt);
                p.phase.push(phase);
                p.estimate.push(est);
            }
        }
    }

    let n = n_samples as f64;
    let sizes: Vec<f64> = (0..batches)
        .map(|b| {
            if b == batches - 1 {
                (n_samples - per_batch * (batches - 1)) as f64
            } else {
                per_batch as f64
            }
        })
        .collect();
    let batch_se = |sums: &[f64], mean: f64| -> f64 {
        if batches < 2 {
            return f64::NAN;
        }
        let means: Vec<f64> = sums.iter().zip(&sizes).map(|(s, c)| s / c).collect();
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        (var / batches as f64).sqrt()
    };
    let mse = sum_sq / n;
    let mean_error = sum_err / n;
    Ok(EstimationRun {
        dt,
        steps,
        seed: cfg.seed,
        ell,
        flux,
        gain: cfg.gain,
        burn_in_steps: burn_in,
        initial_error_variance: v0,
        mse,
        mse_std_error: batch_se(&batch_sq, mse),
        mean_error,
        mean_error_std_error: batch_se(&batch_err, mean_error),
        paths,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub coherence: f64,
    pub target_mse: f64,
    pub seeds: Vec<u64>,
    pub mse: Vec<f64>,
    pub mean_mse: f64,
    /// Standard error of `mean_mse` across seeds.
    pub std_error: f64,
    pub mean_error: f64,
    pub mean_error_std_error: f64,
}

impl EnsembleSummary {
    /// |mean − target| in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.mean_mse - self.target_mse).abs() / self.std_error
    }
}

/// Runs one trajectory per seed in parallel; results are ordered by seed list.
pub fn seed_ensemble(base: &FilterConfig, seeds: &[u64]) -> Result<EnsembleSummary> {
    if seeds.len() < 2 {
        return Err(domain("an ensemble needs at least two seeds"));
    }
    let runs: Vec<EstimationRun> = seeds
        .par_iter()
        .map(|&s| {
            let mut cfg = base.clone();
            cfg.seed = s;
            cfg.record_every = 0;
            simulate_filter_with(&cfg)
        })
        .collect::<Result<_>>()?;
    let n = runs.len() as f64;
    let stats = |xs: Vec<f64>| -> (f64, f64) {
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    };
    let mse: Vec<f64> = runs.iter().map(|r| r.mse).collect();
    let (mean_mse, std_error) = stats(mse.clone());
    let (mean_error, mean_error_std_error) = stats(runs.iter().map(|r| r.mean_error).collect());
    let coherence = beam_coherence(base.flux, base.ell);
    Ok(EnsembleSummary {
        coherence,
        target_mse: coherence.powf(-0.5),
        seeds: seeds.to_vec(),
        mse,
        mean_mse,
        std_error,
        mean_error,
        mean_error_std_error,
    })
}

/// Configuration used by the verification suites: dt = τ_F/500 and
/// `tau_multiple` filter times of data after a 10·τ_F burn-in.
pub fn reference_config(coherence: f64, flux: f64, tau_multiple: f64, seed: u64) -> FilterConfig {
    let ell = 4.0 * flux / coherence;
    let tau = filter_timescale(flux, ell);
    let dt = tau / 500.0;
    let steps = ((tau_multiple + 10.0) * tau / dt).round() as usize;
    FilterConfig::new(ell, flux, dt, steps, seed)
}

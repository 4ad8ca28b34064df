//! The `hlaser` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::analytics::{self, LinearizedPrediction};
use crate::config::{Command, RunConfig, Settings, Suite};
use crate::correlations::{self, linear_fit};
use crate::error::{domain, Error, Result};
use crate::filter::{reference_config, seed_ensemble};
use crate::liouvillian::dense;
use crate::model::{Family, LaserModel, Variant};
use crate::output::{num, Table};
use crate::pr_ensemble::diffusion_report;
use crate::steady::{exact_steady_state, gaussian_steady_state, negativity_diagnostic};
use crate::Liouvillian;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hlaser",
    version,
    about = "Heisenberg-limited laser models: exact observables and linearized cross-checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Key-value config file (TOML); flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

/// A finished command: its table and whether every check passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub passed: bool,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Outcome { table, passed: true }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args` (program name first), runs the command and writes its
/// output. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match resolve(cli).and_then(|cfg| execute_and_write(&cfg)) {
        Ok(o) if o.passed => EXIT_OK,
        Ok(_) => {
            eprintln!("verification failed");
            EXIT_VERIFY_FAILED
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Layers the flags over the config file, if any.
pub fn resolve(cli: Cli) -> Result<RunConfig> {
    let settings = match &cli.config {
        Some(path) => cli.settings.over(Settings::from_file(path)?),
        None => cli.settings,
    };
    Ok(RunConfig::new(cli.command, settings))
}

fn execute_and_write(cfg: &RunConfig) -> Result<Outcome> {
    let outcome = execute(cfg)?;
    let format = cfg.format();
    match &cfg.settings.out {
        Some(path) => {
            let file =
                std::fs::File::create(path).map_err(|e| domain(format!("cannot create {}: {e}", path.display())))?;
            outcome.table.write(format, std::io::BufWriter::new(file))?;
        }
        None => outcome.table.write(format, std::io::stdout().lock())?,
    }
    Ok(outcome)
}

/// Runs the command on a pool of `--threads` workers.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let threads = cfg.settings.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| domain(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Steady => cmd_steady(cfg).map(Outcome::ok),
        Command::G1 => cmd_g1(cfg).map(Outcome::ok),
        Command::G2 => cmd_g2(cfg).map(Outcome::ok),
        Command::Spectrum => cmd_spectrum(cfg).map(Outcome::ok),
        Command::Mandelq => cmd_mandelq(cfg).map(Outcome::ok),
        Command::Coherence => cmd_coherence(cfg).map(Outcome::ok),
        Command::CoherenceSweep => cmd_coherence_sweep(cfg).map(Outcome::ok),
        Command::DiffusionDistance => cmd_diffusion_distance(cfg).map(Outcome::ok),
        Command::FilterSim => cmd_filter_sim(cfg).map(Outcome::ok),
        Command::Verify => cmd_verify(cfg),
    }
}

fn command_name(c: Command) -> String {
    serde_json::to_value(c)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn header(cfg: &RunConfig, columns: &[&str]) -> Table {
    let mut t = Table::new(columns);
    t.meta("tool", "hlaser")
        .meta("version", env!("CARGO_PKG_VERSION"))
        .meta("command", command_name(cfg.command))
        .meta("config", cfg.to_canonical_json());
    t
}

fn model_header(cfg: &RunConfig, model: &LaserModel, columns: &[&str]) -> Result<Table> {
    let mut t = header(cfg, columns);
    let opts = cfg.ode_options()?;
    t.meta("family", model.family.label())
        .meta("dim", model.dim as u64)
        .meta_num("mu", model.mu())
        .meta_num("p", model.p)
        .meta_num("k", model.k())
        .meta_num("flux", model.flux)
        .meta(
            "variant",
            if cfg.variant() == Variant::Exact {
                "exact"
            } else {
                "linearized"
            },
        )
        .meta("time_unit", if cfg.settings.flux.is_some() { "1/flux" } else { "1/N" })
        .meta_num("rtol", opts.rtol)
        .meta_num("atol", opts.atol);
    Ok(t)
}

fn build(cfg: &RunConfig) -> Result<(LaserModel, Liouvillian)> {
    let model = cfg.model()?;
    let liou = Liouvillian::new(model, cfg.variant())?;
    Ok((model, liou))
}

fn cmd_steady(cfg: &RunConfig) -> Result<Table> {
    let (model, liou) = build(cfg)?;
    let numeric = liou.steady_state();
    let exact = exact_steady_state(model.dim, model.p)?;
    let gauss = gaussian_steady_state(model.dim, model.p)?;
    let mut t = model_header(cfg, &model, &["n", "weight_exact", "weight_numeric", "weight_gaussian"])?;
    let (mean, var) = numeric.mean_and_variance();
    t.meta_num("mean", mean)
        .meta_num("variance", var)
        .meta_num("negativity", negativity_diagnostic(numeric));
    for n in 0..model.dim {
        t.push_nums(&[n as f64, exact.weights()[n], numeric.weights()[n], gauss.weights()[n]])?;
    }
    Ok(t)
}

/// 0 followed by geometric points up to --t-max, or the default grid.
fn time_grid(cfg: &RunConfig, model: &LaserModel) -> Result<Vec<f64>> {
    match cfg.settings.t_max {
        None => Ok(correlations::default_time_grid(model)),
        Some(tm) if tm > 0.0 && tm.is_finite() => {
            let n = cfg.settings.points.unwrap_or(200).max(2);
            let lo = tm * 1e-4;
            let mut g = vec![0.0];
            g.extend((0..n).map(|i| lo * (tm / lo).powf(i as f64 / (n - 1) as f64)));
            Ok(g)
        }
        Some(tm) => Err(domain(format!("--t-max must be positive, got {tm}"))),
    }
}

fn cmd_g1(cfg: &RunConfig) -> Result<Table> {
    let (model, liou) = build(cfg)?;
    let grid = match cfg.settings.t_max {
        None => correlations::default_g1_grid(&liou)?,
        Some(_) => time_grid(cfg, &model)?,
    };
    let opts = cfg.ode_options()?;
    let s = correlations::g1_with(&liou, &grid, Some(&opts))?;
    let mut t = model_header(cfg, &model, &["t", "g1", "g1_lin"])?;
    for (&x, &y) in s.grid.iter().zip(&s.values) {
        t.push_nums(&[
            x,
            y,
            analytics::g1_lin(model.family, model.p, model.mu(), model.flux, x),
        ])?;
    }
    Ok(t)
}

fn cmd_g2(cfg: &RunConfig) -> Result<Table> {
    let (model, liou) = build(cfg)?;
    let grid = time_grid(cfg, &model)?;
    let opts = cfg.ode_options()?;
    let s = correlations::g2_with(&liou, &grid, Some(&opts))?;
    let mut t = model_header(cfg, &model, &["t", "g2", "g2_lin"])?;
    for (&x, &y) in s.grid.iter().zip(&s.values) {
        t.push_nums(&[
            x,
            y,
            analytics::g2_lin(model.family, model.p, model.mu(), model.flux, x),
        ])?;
    }
    Ok(t)
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Table> {
    let (model, liou) = build(cfg)?;
    let default = correlations::default_frequency_grid(&model);
    let top = match cfg.settings.omega_max {
        None => *default.last().unwrap(),
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(w) => return Err(domain(format!("--omega-max must be positive, got {w}"))),
    };
    let n = cfg.settings.points.unwrap_or(default.len()).max(2);
    let grid: Vec<f64> = (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect();
    let s = correlations::intensity_spectrum(&liou, &grid)?;
    let mut t = model_header(cfg, &model, &["omega", "s", "s_lin"])?;
    t.meta("frequency_unit", if cfg.settings.flux.is_some() { "flux" } else { "N" });
    if !s.failed.is_empty() {
        t.meta(
            "failed_points",
            s.failed.iter().map(|&i| Value::from(i as u64)).collect::<Vec<_>>(),
        );
    }
    for (&w, &y) in s.grid.iter().zip(&s.values) {
        t.push_nums(&[
            w,
            y,
            analytics::spectrum_lin(model.family, model.p, model.mu(), model.flux, w),
        ])?;
    }
    Ok(t)
}

fn cmd_mandelq(cfg: &RunConfig) -> Result<Table> {
    let (model, liou) = build(cfg)?;
    let windows: Vec<f64> = match cfg.settings.window {
        Some(w) => vec![w],
        None => {
            let scale = 1.0 / (model.flux * model.k());
            let hi = cfg.settings.t_max.unwrap_or(100.0 * scale);
            let lo = hi * 1e-4;
            let n = cfg.settings.points.unwrap_or(40).max(2);
            (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
        }
    };
    let values: Vec<f64> = windows
        .par_iter()
        .map(|&w| correlations::mandel_q(&liou, w))
        .collect::<Result<_>>()?;
    let mut t = model_header(cfg, &model, &["t", "mandel_q", "mandel_q_lin"])?;
    for (&w, &q) in windows.iter().zip(&values) {
        t.push_nums(&[
            w,
            q,
            analytics::mandel_q_lin(model.family, model.p, model.mu(), model.flux, w),
        ])?;
    }
    Ok(t)
}

const COHERENCE_COLUMNS: [&str; 6] = [
    "p",
    "coherence",
    "coherence_lin",
    "epsilon",
    "heisenberg_bound",
    "below_bound",
];

fn coherence_row(model: &LaserModel, variant: Variant) -> Result<Vec<Value>> {
    let liou = Liouvillian::new(*model, variant)?;
    let c = correlations::coherence(&liou)?;
    let lin = LinearizedPrediction::for_model(model).coherence;
    let bound = analytics::heisenberg_bound(model.mu());
    Ok(vec![
        num(model.p),
        num(c),
        num(lin),
        num(c / lin - 1.0),
        num(bound),
        Value::Bool(c < bound),
    ])
}

fn cmd_coherence(cfg: &RunConfig) -> Result<Table> {
    let (model, liou) = build(cfg)?;
    let mut t = model_header(cfg, &model, &COHERENCE_COLUMNS)?;
    t.meta_num("coherence_time_integral", correlations::coherence_time_integral(&liou)?);
    t.push(coherence_row(&model, cfg.variant())?)?;
    Ok(t)
}

fn cmd_coherence_sweep(cfg: &RunConfig) -> Result<Table> {
    let ps = cfg.p_sweep((10.0, 100.0, 10))?;
    let models: Vec<LaserModel> = ps.iter().map(|&p| cfg.model_with_p(p)).collect::<Result<_>>()?;
    let variant = cfg.variant();
    let rows: Vec<Vec<Value>> = models
        .par_iter()
        .map(|m| coherence_row(m, variant))
        .collect::<Result<_>>()?;
    let mut t = model_header(cfg, &models[0], &COHERENCE_COLUMNS)?;
    for r in rows {
        t.push(r)?;
    }
    Ok(t)
}

fn diffusion_rows(models: &[LaserModel]) -> Result<(Vec<Vec<f64>>, f64)> {
    let reports = models.par_iter().map(diffusion_report).collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = reports
        .iter()
        .map(|r| {
            vec![
                r.p,
                r.r,
                r.r_best,
                r.ell_analytic,
                r.ell_best,
                r.ell_best / r.ell_analytic,
                r.clamped_mass,
            ]
        })
        .collect();
    let lx: Vec<f64> = reports.iter().map(|r| r.p.ln()).collect();
    let ly: Vec<f64> = reports.iter().map(|r| r.r.ln()).collect();
    let slope = if reports.len() >= 2 {
        linear_fit(&lx, &ly).0
    } else {
        f64::NAN
    };
    Ok((rows, slope))
}

const DIFFUSION_COLUMNS: [&str; 7] = [
    "p",
    "r",
    "r_best",
    "ell_analytic",
    "ell_best",
    "ell_ratio",
    "clamped_mass",
];

fn cmd_diffusion_distance(cfg: &RunConfig) -> Result<Table> {
    let ps = cfg.p_sweep((10.0, 50.0, 5))?;
    let models: Vec<LaserModel> = ps.iter().map(|&p| cfg.model_with_p(p)).collect::<Result<_>>()?;
    let (rows, slope) = diffusion_rows(&models)?;
    let mut t = model_header(cfg, &models[0], &DIFFUSION_COLUMNS)?;
    t.meta_num("loglog_slope", slope);
    for r in rows {
        t.push_nums(&r)?;
    }
    Ok(t)
}

fn cmd_filter_sim(cfg: &RunConfig) -> Result<Table> {
    let s = &cfg.settings;
    let coherence = s.coherence.unwrap_or(1e4);
    let tau_multiple = s.tau_multiple.unwrap_or(2000.0);
    let n = s.seeds.unwrap_or(20) as u64;
    let flux = cfg.flux();
    if !(coherence > 0.0 && tau_multiple > 0.0) {
        return Err(domain("--coherence and --tau-multiple must be positive"));
    }
    let base = reference_config(coherence, flux, tau_multiple, cfg.seed());
    let seeds: Vec<u64> = (0..n).map(|i| cfg.seed() + i).collect();
    let summary = seed_ensemble(&base, &seeds)?;
    let mut t = header(cfg, &["seed", "mse"]);
    t.meta_num("coherence", coherence)
        .meta_num("flux", flux)
        .meta_num("ell", base.ell)
        .meta_num("dt", base.dt)
        .meta("steps", base.steps as u64)
        .meta_num("target_mse", summary.target_mse)
        .meta_num("mean_mse", summary.mean_mse)
        .meta_num("std_error", summary.std_error)
        .meta_num("z_score", summary.z_score())
        .meta_num("mean_error", summary.mean_error);
    for (seed, mse) in summary.seeds.iter().zip(&summary.mse) {
        t.push(vec![Value::from(*seed), num(*mse)])?;
    }
    Ok(t)
}

struct Report {
    table: Table,
    passed: bool,
}

impl Report {
    fn new(cfg: &RunConfig, suite: &str) -> Self {
        let mut table = header(cfg, &["check", "value", "tolerance", "pass"]);
        table.meta("suite", suite);
        Report { table, passed: true }
    }

    fn check(&mut self, name: String, value: f64, tolerance: f64, ok: bool) -> Result<()> {
        self.passed &= ok;
        self.table
            .push(vec![Value::String(name), num(value), num(tolerance), Value::Bool(ok)])
    }

    fn finish(mut self) -> Outcome {
        self.table.meta("passed", self.passed);
        Outcome {
            table: self.table,
            passed: self.passed,
        }
    }
}

fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.settings.suite.unwrap_or(Suite::Quick) {
        Suite::Quick => verify_quick(cfg),
        Suite::Fig3 => verify_fig3(cfg),
        Suite::Filter => verify_filter(cfg),
    }
}

fn random_family(rng: &mut ChaCha8Rng) -> Family {
    match rng.random_range(0..3) {
        0 => Family::PLambda {
            lambda: rng.random_range(0.0..=1.0),
        },
        1 => Family::PQ {
            q: rng.random_range(-1.0..=1.0),
        },
        _ => Family::PFamily,
    }
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Small-dimension invariants and cross-checks, all at D ≤ 51.
fn verify_quick(cfg: &RunConfig) -> Result<Outcome> {
    let mut rep = Report::new(cfg, "quick");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.random_range(3..=6);
        let m = LaserModel::new(random_family(&mut rng), d, rng.random_range(1.0..5.0), 1.0)?;
        let l = Liouvillian::new(m, Variant::Exact)?;
        let a = dense::for_liouvillian(&l)?;
        let b = dense::from_sectors(&l)?;
        worst = worst.max((a - b).amax());
    }
    rep.check(
        "sector generator equals dense oracle (D=3..6)".into(),
        worst,
        1e-12,
        worst < 1e-12,
    )?;

    let (mut tr_err, mut herm_err) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let m = LaserModel::new(random_family(&mut rng), 21, rng.random_range(1.0..8.0), 1.0)?;
        let l = Liouvillian::new(m, Variant::Exact)?;
        let rho = random_state(&mut rng, 21);
        let out = l.apply_to_state(&rho)?;
        let scale = out.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        tr_err = tr_err.max(out.trace().norm() / scale);
        herm_err = herm_err.max((&out - out.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm())) / scale);
    }
    rep.check("generator output is traceless".into(), tr_err, 1e-12, tr_err < 1e-12)?;
    rep.check(
        "generator preserves Hermiticity".into(),
        herm_err,
        1e-12,
        herm_err < 1e-12,
    )?;

    let mut ss = 0.0f64;
    for fam in [
        Family::PFamily,
        Family::PLambda { lambda: 0.5 },
        Family::PLambda { lambda: 1.0 },
    ] {
        let l = Liouvillian::new(LaserModel::new(fam, 51, 4.0, 1.0)?, Variant::Exact)?;
        let e = exact_steady_state(51, 4.0)?;
        for (a, b) in l.steady_state().weights().iter().zip(e.weights()) {
            ss = ss.max((a - b).abs());
        }
    }
    rep.check(
        "steady state matches sine-power law (D=51)".into(),
        ss,
        1e-10,
        ss < 1e-10,
    )?;

    for fam in [Family::PLambda { lambda: 0.5 }, Family::PQ { q: -1.0 }] {
        let l = Liouvillian::new(LaserModel::new(fam, 51, 10.0, 1.0)?, Variant::Exact)?;
        let a = correlations::coherence(&l)?;
        let b = correlations::coherence_time_integral(&l)?;
        let rel = (b / a - 1.0).abs();
        rep.check(
            format!("{}: coherence resolvent vs time integral", fam.label()),
            rel,
            1e-6,
            rel < 1e-6,
        )?;

        let t = 5.0 / l.model().k();
        let q1 = correlations::mandel_q(&l, t)?;
        let q2 = correlations::mandel_q_closed_form(&l, t)?;
        let diff = (q1 - q2).abs();
        rep.check(
            format!("{}: Mandel-Q quadrature vs closed form", fam.label()),
            diff,
            1e-3,
            diff < 1e-3,
        )?;

        let s0 = correlations::intensity_spectrum(&l, &[0.0])?.values[0];
        let qlong = correlations::mandel_q_closed_form(&l, 1e6 / l.model().k())?;
        let gap = (s0 - 1.0 - qlong).abs();
        rep.check(
            format!("{}: S(0)/N - 1 equals long-time Mandel-Q", fam.label()),
            gap,
            1e-4,
            gap < 1e-4,
        )?;

        let om = [0.0, l.model().k(), 4.0 * l.model().k()];
        let a = correlations::intensity_spectrum(&l, &om)?.values;
        let b = correlations::intensity_spectrum_time_integral(&l, &om)?.values;
        let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        rep.check(
            format!("{}: spectrum resolvent vs time integral", fam.label()),
            diff,
            1e-6,
            diff < 1e-6,
        )?;
    }
    Ok(rep.finish())
}

/// Pure-phase-diffusion sweep at μ = 500. The table is the sweep itself;
/// slopes and check outcomes go in the metadata.
fn verify_fig3(cfg: &RunConfig) -> Result<Outcome> {
    let mut columns = vec!["family"];
    columns.extend(DIFFUSION_COLUMNS);
    let mut t = header(cfg, &columns);
    t.meta("suite", "fig3");
    let mut passed = true;
    let mut check = |t: &mut Table, name: String, value: f64, ok: bool| {
        passed &= ok;
        t.meta(
            &format!("check {name}"),
            format!("{value:.6} {}", if ok { "PASS" } else { "FAIL" }),
        );
    };
    let ps = [10.0, 20.0, 30.0, 40.0, 50.0];
    let settings = [
        (Family::PFamily, true),
        (Family::PLambda { lambda: 0.5 }, true),
        (Family::PQ { q: -1.0 }, false),
    ];
    for (fam, fit_slope) in settings {
        let models: Vec<LaserModel> = ps
            .iter()
            .map(|&p| LaserModel::with_mu(fam, 500, p, 1.0))
            .collect::<Result<_>>()?;
        let (rows, slope) = diffusion_rows(&models)?;
        let label = fam.label();
        let rs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let decreasing = rs.windows(2).all(|w| w[1] < w[0]);
        check(&mut t, format!("{label} R decreasing"), rs[rs.len() - 1], decreasing);
        t.meta_num(&format!("slope {label}"), slope);
        if fit_slope {
            check(
                &mut t,
                format!("{label} slope -1.17 +- 0.15"),
                slope,
                (slope + 1.17).abs() <= 0.15,
            );
        }
        let ratio = rows[rows.len() - 1][5];
        check(
            &mut t,
            format!("{label} ell*/ell at p=50 within 5%"),
            ratio,
            (ratio - 1.0).abs() <= 0.05,
        );
        for r in rows {
            let mut cells = vec![Value::String(label.clone())];
            cells.extend(r.into_iter().map(num));
            t.push(cells)?;
        }
    }
    t.meta("passed", passed);
    Ok(Outcome { table: t, passed })
}

fn verify_filter(cfg: &RunConfig) -> Result<Outcome> {
    let mut rep = Report::new(cfg, "filter");
    let n = cfg.settings.seeds.unwrap_or(20) as u64;
    let tau_multiple = cfg.settings.tau_multiple.unwrap_or(2000.0);
    let seeds: Vec<u64> = (0..n).map(|i| cfg.seed() + i).collect();
    for c in [1e4, 1e6] {
        let base = reference_config(c, cfg.flux(), tau_multiple, cfg.seed());
        let s = seed_ensemble(&base, &seeds)?;
        let z = s.z_score();
        rep.check(
            format!(
                "coherence {c:e}: MSE {:.5e} vs {:.5e}, z-score",
                s.mean_mse, s.target_mse
            ),
            z,
            3.0,
            z <= 3.0,
        )?;
    }
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        let mut v = vec!["hlaser"];
        v.extend_from_slice(args);
        resolve(Cli::try_parse_from(v).unwrap()).unwrap()
    }

    #[test]
    fn negative_q_parses() {
        let c = cfg(&["steady", "--family", "pq", "--q", "-1", "--mu", "30", "--p", "4"]);
        assert_eq!(c.family().unwrap(), Family::PQ { q: -1.0 });
    }

    #[test]
    fn steady_three_levels() {
        let c = cfg(&["steady", "--dim", "3", "--p", "2", "--family", "pfamily"]);
        let t = execute(&c).unwrap().table;
        let w: Vec<f64> = t
            .column("weight_exact")
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert_eq!(w.len(), 3);
        for (a, b) in w.iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn usage_errors_map_to_two() {
        assert_eq!(
            run(["hlaser", "steady", "--mu", "3", "--dim", "7", "--p", "2", "--family", "pfamily"]),
            EXIT_USAGE
        );
        assert_eq!(run(["hlaser", "no-such-command"]), EXIT_USAGE);
    }
}

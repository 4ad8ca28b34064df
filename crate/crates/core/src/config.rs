//! Run configuration shared by the command line and config files.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{Family, LaserModel, Variant};
use crate::propagate::OdeOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Stationary photon-number distribution
    Steady,
    /// First-order coherence G¹(t)
    G1,
    /// Second-order correlation g²(t)
    G2,
    /// Intensity noise spectrum S_I(ω)
    Spectrum,
    /// Mandel-Q over a range of counting windows
    Mandelq,
    /// Coherence 𝔠 for a single model
    Coherence,
    /// Coherence against p
    CoherenceSweep,
    /// Pure-phase-diffusion distance R against p
    DiffusionDistance,
    /// Monte-Carlo adaptive phase filter
    FilterSim,
    /// Run a verification suite
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Plambda,
    Pq,
    Pfamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Quick,
    Fig3,
    Filter,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    match s {
        "exact" => Ok(Variant::Exact),
        "linearized" => Ok(Variant::Linearized),
        _ => Err(format!("unknown variant '{s}' (expected exact or linearized)")),
    }
}

/// Every tunable. All fields are optional so that flags can be layered over a
/// config file; defaults are applied by the accessors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyKind>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Mean photon number μ; D = 2μ+1
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<usize>,
    /// Hilbert-space dimension D (odd)
    #[arg(long = "dim", global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Output flux 𝒩; without it times are in units of 1/𝒩
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux: Option<f64>,
    /// exact or linearized
    #[arg(long, global = true, value_parser = parse_variant)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    /// Largest time on the grid
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Largest angular frequency on the grid
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    /// Number of grid points
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Single Mandel-Q counting window
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_points: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    /// Beam coherence 𝔠 for filter-sim
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherence: Option<f64>,
    /// Filter run length in units of τ_F after burn-in
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_multiple: Option<f64>,
    /// Number of filter seeds, counted up from --seed
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    /// Output file; stdout when absent
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! layer {
    ($top:expr, $base:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// `self` wins wherever it has a value.
    pub fn over(self, base: Settings) -> Settings {
        layer!(
            self,
            base,
            family,
            lambda,
            q,
            mu,
            dim,
            p,
            flux,
            variant,
            t_max,
            omega_max,
            points,
            window,
            p_min,
            p_max,
            p_points,
            suite,
            coherence,
            tau_multiple,
            seeds,
            rtol,
            atol,
            out,
            format,
            seed,
            threads
        )
    }

    pub fn from_toml_str(text: &str) -> Result<Settings> {
        toml::from_str(text).map_err(|e| domain(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Settings> {
        let text =
            std::fs::read_to_string(path).map_err(|e| domain(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub settings: Settings,
}

impl RunConfig {
    pub fn new(command: Command, settings: Settings) -> Self {
        RunConfig { command, settings }
    }

    /// Compact JSON with fields in declaration order and unset fields omitted.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration is always serializable")
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| domain(format!("config JSON: {e}")))
    }

    pub fn family(&self) -> Result<Family> {
        let s = &self.settings;
        let kind = s.family.ok_or_else(|| domain("--family is required"))?;
        let fam = match kind {
            FamilyKind::Plambda => {
                if s.q.is_some() {
                    return Err(domain("--q belongs to the pq family"));
                }
                Family::PLambda {
                    lambda: s.lambda.ok_or_else(|| domain("plambda needs --lambda"))?,
                }
            }
            FamilyKind::Pq => {
                if s.lambda.is_some() {
                    return Err(domain("--lambda belongs to the plambda family"));
                }
                Family::PQ {
                    q: s.q.ok_or_else(|| domain("pq needs --q"))?,
                }
            }
            FamilyKind::Pfamily => {
                if s.lambda.is_some() || s.q.is_some() {
                    return Err(domain("pfamily takes neither --lambda nor --q"));
                }
                Family::PFamily
            }
        };
        Ok(fam)
    }

    /// D from exactly one of --mu and --dim.
    pub fn dim(&self) -> Result<usize> {
        match (self.settings.mu, self.settings.dim) {
            (Some(_), Some(_)) => Err(domain("give exactly one of --mu and --dim")),
            (None, None) => Err(domain("one of --mu or --dim is required")),
            (Some(mu), None) => Ok(2 * mu + 1),
            (None, Some(d)) if d % 2 == 1 => Ok(d),
            (None, Some(d)) => Err(domain(format!("--dim must be odd (D = 2μ+1), got {d}"))),
        }
    }

    pub fn flux(&self) -> f64 {
        self.settings.flux.unwrap_or(1.0)
    }

    pub fn variant(&self) -> Variant {
        self.settings.variant.unwrap_or(Variant::Exact)
    }

    pub fn model_with_p(&self, p: f64) -> Result<LaserModel> {
        LaserModel::new(self.family()?, self.dim()?, p, self.flux())
    }

    pub fn model(&self) -> Result<LaserModel> {
        let p = self.settings.p.ok_or_else(|| domain("--p is required"))?;
        self.model_with_p(p)
    }

    pub fn format(&self) -> Format {
        self.settings.format.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.settings.seed.unwrap_or(0)
    }

    pub fn ode_options(&self) -> Result<OdeOptions> {
        let mut o = OdeOptions::default();
        if let Some(r) = self.settings.rtol {
            if !(r > 0.0 && r < 1.0) {
                return Err(domain(format!("--rtol must lie in (0, 1), got {r}")));
            }
            o.rtol = r;
        }
        if let Some(a) = self.settings.atol {
            if !(a > 0.0 && a.is_finite()) {
                return Err(domain(format!("--atol must be positive, got {a}")));
            }
            o.atol = a;
        }
        Ok(o)
    }

    /// `p_points` values spread linearly over [p_min, p_max].
    pub fn p_sweep(&self, default: (f64, f64, usize)) -> Result<Vec<f64>> {
        let s = &self.settings;
        let lo = s.p_min.unwrap_or(default.0);
        let hi = s.p_max.unwrap_or(default.1);
        let n = s.p_points.unwrap_or(default.2);
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
            return Err(domain(format!("bad p sweep [{lo}, {hi}] with {n} points")));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: Settings) -> RunConfig {
        RunConfig::new(Command::G2, s)
    }

    #[test]
    fn exactly_one_of_mu_and_dim() {
        let mut s = Settings {
            mu: Some(5),
            dim: Some(11),
            ..Default::default()
        };
        assert!(cfg(s.clone()).dim().is_err());
        s.dim = None;
        assert_eq!(cfg(s.clone()).dim().unwrap(), 11);
        s.mu = None;
        s.dim = Some(10);
        assert!(cfg(s).dim().is_err());
    }

    #[test]
    fn family_parameters_checked() {
        let s = Settings {
            family: Some(FamilyKind::Pq),
            lambda: Some(0.5),
            ..Default::default()
        };
        assert!(cfg(s).family().is_err());
        let s = Settings {
            family: Some(FamilyKind::Pq),
            q: Some(-1.0),
            ..Default::default()
        };
        assert_eq!(cfg(s).family().unwrap(), Family::PQ { q: -1.0 });
    }

    #[test]
    fn flags_win_over_file() {
        let file = Settings::from_toml_str("family = \"pq\"\nq = -1.0\nmu = 30\np = 4.0\n").unwrap();
        let flags = Settings {
            p: Some(8.0),
            ..Default::default()
        };
        let s = flags.over(file);
        assert_eq!(s.p, Some(8.0));
        assert_eq!(s.q, Some(-1.0));
        assert!(Settings::from_toml_str("colour = 3").is_err());
    }

    #[test]
    fn canonical_json_round_trip() {
        let s = Settings {
            family: Some(FamilyKind::Plambda),
            lambda: Some(0.5),
            mu: Some(250),
            p: Some(50.0),
            variant: Some(Variant::Linearized),
            out: Some("x.csv".into()),
            ..Default::default()
        };
        let c = RunConfig::new(Command::CoherenceSweep, s);
        let j = c.to_canonical_json();
        let back = RunConfig::from_json(&j).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_canonical_json(), j);
    }
}

//! JSON experiment configuration. Decibel units exist only here; the resolved
//! [`ExperimentConfig`] carries watts and linear ratios.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::Scenario;
use crate::model::{ArrayConfig, CommParams, ModelError, Position, SensingParams, SystemLayout};

/// The canonical default configuration.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../../configs/default.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "PROPOSED_I")]
    ProposedI,
    #[serde(rename = "PROPOSED_II")]
    ProposedII,
    #[serde(rename = "BENCHMARK_I")]
    BenchmarkI,
    #[serde(rename = "BENCHMARK_II")]
    BenchmarkII,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::ProposedI, Scheme::ProposedII, Scheme::BenchmarkI, Scheme::BenchmarkII];

    pub fn scenario(self) -> Scenario {
        match self {
            Scheme::ProposedI | Scheme::BenchmarkI => Scenario::Synchronized,
            Scheme::ProposedII | Scheme::BenchmarkII => Scenario::Unsynchronized,
        }
    }

    pub fn is_proposed(self) -> bool {
        matches!(self, Scheme::ProposedI | Scheme::ProposedII)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ProposedI => "PROPOSED_I",
            Scheme::ProposedII => "PROPOSED_II",
            Scheme::BenchmarkI => "BENCHMARK_I",
            Scheme::BenchmarkII => "BENCHMARK_II",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PMaxDbm,
    GammaDb,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PMaxDbm => "p_max_dbm",
            SweepAxis::GammaDb => "gamma_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSection {
    pub bs_positions: Vec<[f64; 2]>,
    pub cu_positions: Vec<[f64; 2]>,
    /// `N_t = N_r`.
    pub n_antennas: i64,
    pub spacing_ratio: f64,
    /// Per-BS boresight in degrees from +x; defaults to facing the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boresights_deg: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSection {
    pub noise_power_dbm: f64,
    pub rcs: f64,
    pub kappa_sq: f64,
    pub d_ref_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommSection {
    pub noise_power_dbm: f64,
    pub rician_factor_db: f64,
    pub pl_exponent: f64,
    pub pl_ref_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSection {
    pub center: [f64; 2],
    pub side_m: f64,
    pub grid_dim: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedSection {
    pub p_max_dbm: f64,
    pub gamma_db: f64,
}

/// On-disk schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub layout: LayoutSection,
    pub sensing: SensingSection,
    pub comm: CommSection,
    pub target_area: AreaSection,
    pub sweep: SweepSection,
    pub fixed: FixedSection,
    pub p_fa: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub channel_draws: i64,
    pub seed: u64,
    pub n_g: i64,
    pub trials_mc: i64,
    pub solver_tol: f64,
    pub rank_one_eps: f64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        parse_config_file(DEFAULT_CONFIG_JSON).expect("bundled default config parses")
    }
}

/// Figure presets: they fix the sweep, the fixed parameter, `N_a` and `p_fa`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Detection probability versus `P_max`.
    Fig2,
    /// Detection probability versus the SINR target.
    Fig3,
}

impl ConfigFile {
    pub fn apply_preset(&mut self, preset: Preset) {
        match preset {
            Preset::Fig2 => {
                self.layout.n_antennas = 32;
                self.sweep = SweepSection {
                    axis: SweepAxis::PMaxDbm,
                    values: (0..=8).map(|i| 30.0 + 2.0 * i as f64).collect(),
                };
                self.fixed.gamma_db = 10.0;
                self.p_fa = vec![1e-3, 1e-6];
            }
            Preset::Fig3 => {
                self.layout.n_antennas = 16;
                self.sweep = SweepSection {
                    axis: SweepAxis::GammaDb,
                    values: (0..=10).map(|i| 2.0 * i as f64).collect(),
                };
                self.fixed.p_max_dbm = 42.0;
                self.p_fa = vec![1e-3, 1e-4];
            }
        }
    }
}

/// Validated configuration in SI units.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub layout: SystemLayout,
    pub sensing: SensingParams,
    pub comm: CommParams,
    pub area_center: Position,
    pub side: f64,
    pub grid_dim: usize,
    pub sweep_axis: SweepAxis,
    /// Sweep values in config units (dBm or dB).
    pub sweep_values: Vec<f64>,
    pub p_max_w: f64,
    pub gamma_linear: f64,
    pub p_fa: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub channel_draws: usize,
    pub seed: u64,
    pub n_g: usize,
    pub trials_mc: u64,
    pub solver_tol: f64,
    pub rank_one_eps: f64,
    /// The file this was resolved from.
    pub source: ConfigFile,
}

impl ExperimentConfig {
    /// `(P_max [W], Gamma [linear])` at sweep index `idx`.
    pub fn operating_point(&self, idx: usize) -> (f64, f64) {
        let v = self.sweep_values[idx];
        match self.sweep_axis {
            SweepAxis::PMaxDbm => (dbm_to_watts(v), self.gamma_linear),
            SweepAxis::GammaDb => (self.p_max_w, db_to_linear(v)),
        }
    }
}

pub fn parse_config_file(text: &str) -> Result<ConfigFile, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn positive_count(field: &str, v: i64) -> Result<usize, ConfigError> {
    if v < 1 {
        return Err(invalid(field, format!("must be at least 1, got {v}")));
    }
    usize::try_from(v).map_err(|_| invalid(field, "too large"))
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(field, format!("must be positive and finite, got {v}")));
    }
    Ok(v)
}

fn finite(field: &str, v: f64) -> Result<f64, ConfigError> {
    if !v.is_finite() {
        return Err(invalid(field, format!("must be finite, got {v}")));
    }
    Ok(v)
}

fn model_err(field: &str) -> impl Fn(ModelError) -> ConfigError + '_ {
    move |e| invalid(field, e.to_string())
}

pub fn resolve_config(file: ConfigFile) -> Result<ExperimentConfig, ConfigError> {
    let l = &file.layout;
    let n = positive_count("layout.n_antennas", l.n_antennas)?;
    let array = ArrayConfig::new(n, n, positive("layout.spacing_ratio", l.spacing_ratio)?).map_err(model_err("layout"))?;
    let bs: Vec<Position> = l.bs_positions.iter().copied().map(Position::from).collect();
    let cu: Vec<Position> = l.cu_positions.iter().copied().map(Position::from).collect();
    if bs.is_empty() {
        return Err(invalid("layout.bs_positions", "at least one BS is required"));
    }
    if bs.len() != cu.len() {
        return Err(invalid("layout.cu_positions", format!("expected {} CUs, got {}", bs.len(), cu.len())));
    }
    let layout = match &l.boresights_deg {
        Some(deg) => SystemLayout::with_boresights(bs, cu, array, deg.iter().map(|d| d.to_radians()).collect())
            .map_err(model_err("layout.boresights_deg"))?,
        None => SystemLayout::new(bs, cu, array).map_err(model_err("layout"))?,
    };

    let s = &file.sensing;
    let sensing = SensingParams::new(
        positive("sensing.rcs", s.rcs)?,
        positive("sensing.kappa_sq", s.kappa_sq)?,
        positive("sensing.d_ref_m", s.d_ref_m)?,
        positive("sensing.noise_power_dbm", dbm_to_watts(finite("sensing.noise_power_dbm", s.noise_power_dbm)?))?,
    )
    .map_err(model_err("sensing"))?;

    let c = &file.comm;
    let comm = CommParams::new(
        positive("comm.noise_power_dbm", dbm_to_watts(finite("comm.noise_power_dbm", c.noise_power_dbm)?))?,
        db_to_linear(finite("comm.rician_factor_db", c.rician_factor_db)?),
        finite("comm.pl_exponent", c.pl_exponent)?,
        db_to_linear(finite("comm.pl_ref_gain_db", c.pl_ref_gain_db)?),
    )
    .map_err(model_err("comm"))?;

    let a = &file.target_area;
    let area_center = Position::new(finite("target_area.center", a.center[0])?, finite("target_area.center", a.center[1])?);
    let side = positive("target_area.side_m", a.side_m)?;
    let grid_dim = positive_count("target_area.grid_dim", a.grid_dim)?;

    if file.sweep.values.is_empty() {
        return Err(invalid("sweep.values", "must not be empty"));
    }
    for v in &file.sweep.values {
        finite("sweep.values", *v)?;
    }
    let p_max_w = dbm_to_watts(finite("fixed.p_max_dbm", file.fixed.p_max_dbm)?);
    let gamma_linear = db_to_linear(finite("fixed.gamma_db", file.fixed.gamma_db)?);

    if file.p_fa.is_empty() {
        return Err(invalid("p_fa", "must not be empty"));
    }
    if let Some(p) = file.p_fa.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(invalid("p_fa", format!("every entry must lie in (0, 1), got {p}")));
    }
    if file.schemes.is_empty() {
        return Err(invalid("schemes", "must not be empty"));
    }
    let channel_draws = positive_count("channel_draws", file.channel_draws)?;
    let n_g = positive_count("n_g", file.n_g)?;
    let trials_mc = positive_count("trials_mc", file.trials_mc)? as u64;
    let solver_tol = positive("solver_tol", file.solver_tol)?;
    let rank_one_eps = positive("rank_one_eps", file.rank_one_eps)?;
    if rank_one_eps >= 1.0 {
        return Err(invalid("rank_one_eps", "must be below 1"));
    }

    // probe the grid so geometry errors surface as config errors
    crate::model::build_target_grid(&layout, &sensing, area_center, side, grid_dim).map_err(model_err("target_area"))?;

    Ok(ExperimentConfig {
        layout,
        sensing,
        comm,
        area_center,
        side,
        grid_dim,
        sweep_axis: file.sweep.axis,
        sweep_values: file.sweep.values.clone(),
        p_max_w,
        gamma_linear,
        p_fa: file.p_fa.clone(),
        schemes: file.schemes.clone(),
        channel_draws,
        seed: file.seed,
        n_g,
        trials_mc,
        solver_tol,
        rank_one_eps,
        source: file,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    resolve_config(parse_config_file(&text)?)
}

//! Figure sweeps: sweep value x scheme points, each averaged over channel draws.
//!
//! Channel draw `a` uses the same realization at every sweep value and for every
//! scheme (common random numbers), so curves differ only through the swept
//! parameter. Infeasible draws are resampled up to `RETRY_FACTOR` times the
//! requested count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scheme};
use super::HarnessError;
use crate::detection::detection_probability;
use crate::model::{build_target_grid, sample_comm_channels, TargetGrid};
use crate::optimizer::{comm_benchmark, solve_proposed, DetectionProblem, OptimizeError, ProposedOutcome, SolveOptions};
use crate::rng::derive_seed;

pub const RETRY_FACTOR: usize = 10;

/// Seed stream tags.
const CHANNEL_STREAM: u64 = 0;
const RANDOMIZATION_STREAM: u64 = 1;

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scheme: Scheme,
    pub scenario: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub p_fa: f64,
    pub pd_mean: Option<f64>,
    pub pd_min: Option<f64>,
    pub pd_max: Option<f64>,
    pub min_energy_mean_w: Option<f64>,
    /// Absent for the benchmark, which has no relaxation bound.
    pub sdr_bound_mean_w: Option<f64>,
    pub feasible_rate: f64,
    pub rank_one_rate: Option<f64>,
    pub wall_ms: f64,
}

/// One feasible channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawOutcome {
    /// Channel-draw index; equal indices mean equal channels.
    pub attempt: usize,
    pub min_energy: f64,
    pub sdr_bound: Option<f64>,
    pub rank_one: bool,
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub scheme: Scheme,
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub draws: Vec<DrawOutcome>,
    pub attempts: usize,
    pub infeasible: usize,
    /// Solver failures, recorded and skipped like infeasible draws.
    pub failures: Vec<String>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<PointOutcome>,
    pub records: Vec<ResultRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Record wall time per point. Off by default so outputs are byte-stable.
    pub timing: bool,
}

pub(crate) fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

enum DrawResult {
    Feasible(DrawOutcome),
    Infeasible,
    Failed(String),
}

fn solve_draw(cfg: &ExperimentConfig, grid: &TargetGrid, scheme: Scheme, sweep_index: usize, attempt: usize) -> DrawResult {
    let (p_max, gamma) = cfg.operating_point(sweep_index);
    let gammas = vec![gamma; cfg.layout.k()];
    let channels = match sample_comm_channels(&cfg.layout, &cfg.comm, derive_seed(cfg.seed, &[CHANNEL_STREAM, attempt as u64])) {
        Ok(c) => c,
        Err(e) => return DrawResult::Failed(e.to_string()),
    };
    let problem = DetectionProblem {
        scenario: scheme.scenario(),
        channels: &channels,
        grid,
        array: &cfg.layout.array,
        params: &cfg.sensing,
        gamma: &gammas,
        p_max,
    };
    if scheme.is_proposed() {
        let opts = SolveOptions {
            tol: cfg.solver_tol,
            n_g: cfg.n_g,
            epsilon: cfg.rank_one_eps,
            seed: derive_seed(cfg.seed, &[RANDOMIZATION_STREAM, sweep_index as u64, scheme as u64, attempt as u64]),
        };
        match solve_proposed(&problem, &opts) {
            Ok(ProposedOutcome::Solved(r)) => DrawResult::Feasible(DrawOutcome {
                attempt,
                min_energy: r.achieved_min_energy,
                sdr_bound: Some(r.sdr_bound),
                rank_one: r.rank_one_direct,
            }),
            Ok(ProposedOutcome::Infeasible) => DrawResult::Infeasible,
            Err(e) => DrawResult::Failed(e.to_string()),
        }
    } else {
        match comm_benchmark(&channels, &gammas, p_max) {
            Ok(b) => match problem.min_energy(&b.beamformers) {
                Ok(e) => DrawResult::Feasible(DrawOutcome {
                    attempt,
                    min_energy: e,
                    sdr_bound: None,
                    rank_one: b.rank_one,
                }),
                Err(e) => DrawResult::Failed(e.to_string()),
            },
            Err(OptimizeError::BenchmarkInfeasible(_)) => DrawResult::Infeasible,
            Err(e) => DrawResult::Failed(e.to_string()),
        }
    }
}

fn run_point(cfg: &ExperimentConfig, grid: &TargetGrid, scheme: Scheme, sweep_index: usize, timing: bool) -> PointOutcome {
    let start = Instant::now();
    let mut out = PointOutcome {
        scheme,
        sweep_index,
        sweep_value: cfg.sweep_values[sweep_index],
        draws: Vec::with_capacity(cfg.channel_draws),
        attempts: 0,
        infeasible: 0,
        failures: Vec::new(),
        wall_ms: 0.0,
    };
    let cap = cfg.channel_draws * RETRY_FACTOR;
    while out.draws.len() < cfg.channel_draws && out.attempts < cap {
        match solve_draw(cfg, grid, scheme, sweep_index, out.attempts) {
            DrawResult::Feasible(d) => out.draws.push(d),
            DrawResult::Infeasible => out.infeasible += 1,
            DrawResult::Failed(msg) => out.failures.push(format!("draw {}: {msg}", out.attempts)),
        }
        out.attempts += 1;
    }
    if timing {
        out.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Aggregates one point into a record per `p_fa`.
pub fn point_records(cfg: &ExperimentConfig, point: &PointOutcome) -> Result<Vec<ResultRecord>, HarnessError> {
    let noise = cfg.sensing.noise_power_d;
    cfg.p_fa
        .iter()
        .map(|&p_fa| {
            let pds = point
                .draws
                .iter()
                .map(|d| detection_probability(d.min_energy.max(0.0), p_fa, noise))
                .collect::<Result<Vec<f64>, _>>()?;
            let n = point.draws.len();
            Ok(ResultRecord {
                scheme: point.scheme,
                scenario: point.scheme.scenario().label().to_string(),
                sweep_name: cfg.sweep_axis.name().to_string(),
                sweep_value: point.sweep_value,
                p_fa,
                pd_mean: mean(pds.iter().copied()),
                pd_min: pds.iter().copied().reduce(f64::min),
                pd_max: pds.iter().copied().reduce(f64::max),
                min_energy_mean_w: mean(point.draws.iter().map(|d| d.min_energy)),
                sdr_bound_mean_w: if point.scheme.is_proposed() {
                    mean(point.draws.iter().filter_map(|d| d.sdr_bound))
                } else {
                    None
                },
                feasible_rate: if point.attempts == 0 { 0.0 } else { n as f64 / point.attempts as f64 },
                rank_one_rate: (n > 0).then(|| point.draws.iter().filter(|d| d.rank_one).count() as f64 / n as f64),
                wall_ms: point.wall_ms,
            })
        })
        .collect()
}

/// Runs every sweep value x scheme point; output order is sweep-major, then
/// scheme order of the config, then `p_fa` order.
pub fn run_sweep(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<SweepOutcome, HarnessError> {
    let grid = build_target_grid(&cfg.layout, &cfg.sensing, cfg.area_center, cfg.side, cfg.grid_dim)?;
    let tasks: Vec<(usize, Scheme)> = (0..cfg.sweep_values.len())
        .flat_map(|i| cfg.schemes.iter().map(move |&s| (i, s)))
        .collect();
    let points: Vec<PointOutcome> = with_pool(opts.jobs, || {
        tasks
            .par_iter()
            .map(|&(i, s)| run_point(cfg, &grid, s, i, opts.timing))
            .collect()
    })?;
    let mut records = Vec::with_capacity(points.len() * cfg.p_fa.len());
    for p in &points {
        records.extend(point_records(cfg, p)?);
    }
    Ok(SweepOutcome { points, records })
}

//! Monte Carlo check of the closed-form detection probabilities on reflection
//! vectors built from the configured scene.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::detection::{detection_probability, reflection_vector, simulate_detector_partitioned, Scenario};
use crate::model::build_target_grid;
use crate::optimizer::BeamformerSet;
use crate::rng::{cscg_vector, derive_seed, rng_from_seed};

/// `2 E / sigma_d^2` values of the grid cases.
pub const SNR_GRID: [f64; 4] = [0.25, 1.0, 4.0, 25.0];
pub const PFA_GRID: [f64; 3] = [1e-1, 1e-2, 1e-3];
/// Fixed so results do not depend on the worker count.
const PARTITIONS: usize = 8;

const BEAM_STREAM: u64 = 2;
const DETECTOR_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub case: String,
    pub scenario: Scenario,
    pub point_index: usize,
    /// `2 E / sigma_d^2`.
    pub snr: f64,
    pub p_fa: f64,
    pub energy_w: f64,
    pub pd_closed: f64,
    pub pd_empirical: f64,
    pub pd_tol: f64,
    pub pfa_empirical: f64,
    pub pfa_tol: f64,
    pub trials: u64,
    pub pass: bool,
}

fn three_sigma(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// The 12 grid cases, then a near-zero-energy case and a saturated case.
pub fn validation_cases() -> Vec<(String, f64, f64)> {
    let mut cases = Vec::new();
    for &snr in &SNR_GRID {
        for &p_fa in &PFA_GRID {
            cases.push((format!("grid_snr{snr}_pfa{p_fa:e}"), snr, p_fa));
        }
    }
    cases.push(("near_zero_energy".to_string(), 1e-10, 1e-1));
    cases.push(("saturated".to_string(), 100.0, 1e-3));
    cases
}

pub fn run_detection_validation(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<ValidationRecord>, HarnessError> {
    let grid = build_target_grid(&cfg.layout, &cfg.sensing, cfg.area_center, cfg.side, cfg.grid_dim)?;
    let sigma = cfg.sensing.noise_power_d;
    let k = cfg.layout.k();
    let n = cfg.layout.array.n_tx;
    let trials = cfg.trials_mc;

    let run = || {
        validation_cases()
            .into_iter()
            .enumerate()
            .map(|(idx, (case, snr, p_fa))| -> Result<ValidationRecord, HarnessError> {
                let scenario = Scenario::ALL[idx % 2];
                let m = idx % grid.len();
                let mut rng = rng_from_seed(derive_seed(cfg.seed, &[BEAM_STREAM, idx as u64]));
                let bf = BeamformerSet::new((0..k).map(|_| cscg_vector(&mut rng, n, 1.0)).collect());
                let raw = reflection_vector(scenario, &bf, &grid, m, &cfg.sensing, &cfg.layout.array)?.stacked;
                let target_energy = snr * sigma / 2.0;
                let alpha = &raw * Complex::new((target_energy / raw.norm_squared()).sqrt(), 0.0);
                let energy = alpha.norm_squared();
                let rates = simulate_detector_partitioned(
                    &alpha,
                    sigma,
                    p_fa,
                    trials,
                    derive_seed(cfg.seed, &[DETECTOR_STREAM, idx as u64]),
                    PARTITIONS,
                )?;
                let pd_closed = detection_probability(energy, p_fa, sigma)?;
                let pd_tol = three_sigma(pd_closed, trials);
                let pfa_tol = three_sigma(p_fa, trials);
                let pass = (rates.empirical_pd - pd_closed).abs() <= pd_tol && (rates.empirical_pfa - p_fa).abs() <= pfa_tol;
                Ok(ValidationRecord {
                    case,
                    scenario,
                    point_index: m,
                    snr: 2.0 * energy / sigma,
                    p_fa,
                    energy_w: energy,
                    pd_closed,
                    pd_empirical: rates.empirical_pd,
                    pd_tol,
                    pfa_empirical: rates.empirical_pfa,
                    pfa_tol,
                    trials,
                    pass,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    };
    super::sweep::with_pool(jobs, run)?
}

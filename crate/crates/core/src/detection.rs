//! Matched-filter observation model, Neyman-Pearson detector and its closed
//! forms, plus a Monte Carlo detector used to check them.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;
use thiserror::Error;

use crate::model::{steering_vector, ArrayConfig, CVector, CMatrix, CommChannelSet, SensingParams, TargetGrid};
use crate::optimizer::{BeamformerSet, CovarianceSet};
use crate::rng::{cscg, derive_seed, rng_from_seed};

#[derive(Debug, Error, PartialEq)]
pub enum DetectionError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("point index {index} out of range for a grid of {len} points")]
    PointIndex { index: usize, len: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate detector: {0}")]
    Degenerate(String),
}

/// BS time-synchronization regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// Direct and cross reflection links are all usable.
    #[serde(rename = "I")]
    Synchronized,
    /// Only direct links (k = i) are usable.
    #[serde(rename = "II")]
    Unsynchronized,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Synchronized, Scenario::Unsynchronized];

    /// Whether the link BS `i` -> target -> BS `k` contributes.
    pub fn includes(self, k: usize, i: usize) -> bool {
        match self {
            Scenario::Synchronized => true,
            Scenario::Unsynchronized => k == i,
        }
    }

    /// Usable `(k, i)` pairs, `k` outer.
    pub fn links(self, n_bs: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..n_bs)
            .flat_map(move |k| (0..n_bs).map(move |i| (k, i)))
            .filter(move |&(k, i)| self.includes(k, i))
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::Synchronized => "I",
            Scenario::Unsynchronized => "II",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Stacked reflection vector `alpha` (or an observation `d`).
#[derive(Debug, Clone, PartialEq)]
pub struct MFObservation {
    pub stacked: CVector,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionEnergy {
    pub value: f64,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub p_fa: f64,
    pub threshold: f64,
}

impl OperatingPoint {
    pub fn new(energy: f64, p_fa: f64, sigma_d_sq: f64) -> Result<Self, DetectionError> {
        Ok(Self {
            p_fa,
            threshold: detector_threshold(energy, p_fa, sigma_d_sq)?,
        })
    }
}

fn check_point(grid: &TargetGrid, point_index: usize) -> Result<(), DetectionError> {
    if point_index >= grid.len() {
        return Err(DetectionError::PointIndex {
            index: point_index,
            len: grid.len(),
        });
    }
    Ok(())
}

fn check_grid_k(grid: &TargetGrid, k: usize) -> Result<(), DetectionError> {
    match grid.angles.first() {
        Some(a) if a.len() == k => Ok(()),
        _ => Err(DetectionError::Dimension(format!("grid is not built for {k} BSs"))),
    }
}

/// Transmit steering vectors of every BS toward grid point `m`.
pub(crate) fn transmit_steering(grid: &TargetGrid, m: usize, array: &ArrayConfig) -> Vec<CVector> {
    grid.angles[m]
        .iter()
        .map(|&th| steering_vector(th, array.n_tx, array.spacing_ratio))
        .collect()
}

/// Per-BS weight `N_r zeta^2 sum_{k in links(i)} beta_{k,i}` at point `m`.
pub(crate) fn link_weights(scenario: Scenario, grid: &TargetGrid, m: usize, params: &SensingParams, array: &ArrayConfig) -> Vec<f64> {
    let k = grid.angles[m].len();
    let scale = array.n_rx as f64 * params.rcs * params.rcs;
    let gains = &grid.path_gains[m];
    (0..k)
        .map(|i| scale * (0..k).filter(|&kk| scenario.includes(kk, i)).map(|kk| gains[(kk, i)]).sum::<f64>())
        .collect()
}

/// `N_r zeta^2 sum_{(k,i) in links} beta_{k,i} |a_{t,i}^T w_i|^2` at grid point `point_index`.
pub fn reflection_energy(
    scenario: Scenario,
    beamformers: &BeamformerSet,
    grid: &TargetGrid,
    point_index: usize,
    params: &SensingParams,
    array: &ArrayConfig,
) -> Result<ReflectionEnergy, DetectionError> {
    check_point(grid, point_index)?;
    let k = beamformers.len();
    check_grid_k(grid, k)?;
    if beamformers.vectors.iter().any(|w| w.len() != array.n_tx) {
        return Err(DetectionError::Dimension(format!("beamformers must have length {}", array.n_tx)));
    }
    let a_t = transmit_steering(grid, point_index, array);
    let weights = link_weights(scenario, grid, point_index, params, array);
    let value = (0..k)
        .map(|i| weights[i] * a_t[i].dot(&beamformers.vectors[i]).norm_sqr())
        .sum();
    Ok(ReflectionEnergy { value, scenario })
}

/// Covariance form `N_r zeta^2 sum beta_{k,i} tr(W_i a_t^* a_t^T)`.
pub fn reflection_energy_from_covariance(
    scenario: Scenario,
    covariances: &CovarianceSet,
    grid: &TargetGrid,
    point_index: usize,
    params: &SensingParams,
    array: &ArrayConfig,
) -> Result<ReflectionEnergy, DetectionError> {
    check_point(grid, point_index)?;
    let k = covariances.len();
    check_grid_k(grid, k)?;
    for w in &covariances.matrices {
        if w.nrows() != array.n_tx || w.ncols() != array.n_tx {
            return Err(DetectionError::Dimension(format!("covariances must be {0}x{0}", array.n_tx)));
        }
        if !netisac_conic::is_hermitian(w, netisac_conic::program::HERMITIAN_TOL) {
            return Err(DetectionError::Domain("covariance is not Hermitian".into()));
        }
    }
    let a_t = transmit_steering(grid, point_index, array);
    let weights = link_weights(scenario, grid, point_index, params, array);
    let value = (0..k)
        .map(|i| {
            let a = &a_t[i];
            // tr(W a* a^T) = a^T W a*
            weights[i] * (a.transpose() * &covariances.matrices[i] * a.conjugate())[(0, 0)].re
        })
        .sum();
    Ok(ReflectionEnergy { value, scenario })
}

/// Stacked `alpha_{k,i} = H_{k,i} w_i` over the scenario's links, `k` outer.
pub fn reflection_vector(
    scenario: Scenario,
    beamformers: &BeamformerSet,
    grid: &TargetGrid,
    point_index: usize,
    params: &SensingParams,
    array: &ArrayConfig,
) -> Result<MFObservation, DetectionError> {
    check_point(grid, point_index)?;
    let k = beamformers.len();
    check_grid_k(grid, k)?;
    if beamformers.vectors.iter().any(|w| w.len() != array.n_tx) {
        return Err(DetectionError::Dimension(format!("beamformers must have length {}", array.n_tx)));
    }
    let angles = &grid.angles[point_index];
    let gains = &grid.path_gains[point_index];
    let a_t = transmit_steering(grid, point_index, array);
    let a_r: Vec<CVector> = angles
        .iter()
        .map(|&th| steering_vector(th, array.n_rx, array.spacing_ratio))
        .collect();
    let mut stacked = Vec::new();
    for (kk, i) in scenario.links(k) {
        let proj = a_t[i].dot(&beamformers.vectors[i]);
        let amp = proj * (gains[(kk, i)].sqrt() * params.rcs);
        stacked.extend(a_r[kk].iter().map(|v| v * amp));
    }
    Ok(MFObservation {
        stacked: CVector::from_vec(stacked),
        scenario,
    })
}

/// Upper tail of the standard normal.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of [`q_function`] by Newton iteration guarded by a bisection bracket.
pub fn q_inverse(p: f64) -> Result<f64, DetectionError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DetectionError::Domain(format!("q_inverse needs 0 < p < 1, got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        // 1 - p is exact here
        return q_inverse(1.0 - p).map(|x| -x);
    }
    // root lies in (0, 40): Q(40) underflows below every positive double
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    let mut x = (-2.0 * p.ln()).sqrt().clamp(lo, hi);
    for _ in 0..200 {
        let f = q_function(x) - p;
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = normal_pdf(x);
        let mut next = if pdf > 0.0 { x + f / pdf } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

fn check_prob(p_fa: f64) -> Result<(), DetectionError> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(DetectionError::Domain(format!("p_fa must be in (0, 1), got {p_fa}")));
    }
    Ok(())
}

fn check_noise(sigma_d_sq: f64) -> Result<(), DetectionError> {
    if !(sigma_d_sq > 0.0 && sigma_d_sq.is_finite()) {
        return Err(DetectionError::Domain(format!("noise power must be positive, got {sigma_d_sq}")));
    }
    Ok(())
}

/// `Q(Q^{-1}(p_fa) - sqrt(2 E / sigma_d^2))`.
pub fn detection_probability(energy: f64, p_fa: f64, sigma_d_sq: f64) -> Result<f64, DetectionError> {
    check_prob(p_fa)?;
    check_noise(sigma_d_sq)?;
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(DetectionError::Domain(format!("energy must be nonnegative, got {energy}")));
    }
    if energy == 0.0 {
        return Ok(p_fa);
    }
    Ok(q_function(q_inverse(p_fa)? - (2.0 * energy / sigma_d_sq).sqrt()))
}

/// `delta' = Q^{-1}(p_fa) sqrt(sigma_d^2 E / 2)`.
pub fn detector_threshold(energy: f64, p_fa: f64, sigma_d_sq: f64) -> Result<f64, DetectionError> {
    check_prob(p_fa)?;
    check_noise(sigma_d_sq)?;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(DetectionError::Degenerate(format!("threshold needs positive energy, got {energy}")));
    }
    Ok(q_inverse(p_fa)? * (sigma_d_sq * energy / 2.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorRates {
    pub empirical_pd: f64,
    pub empirical_pfa: f64,
    pub trials: u64,
}

/// `Re(alpha^H d)` for one draw, `d = alpha + z` when the target is present.
fn draw_statistic<R: Rng + ?Sized>(rng: &mut R, alpha: &CVector, sigma_d_sq: f64, present: bool) -> f64 {
    alpha
        .iter()
        .map(|a| {
            let z = cscg(rng, sigma_d_sq);
            let d = if present { a + z } else { z };
            (a.conj() * d).re
        })
        .sum()
}

fn check_alpha(alpha: &CVector) -> Result<f64, DetectionError> {
    let e = alpha.norm_squared();
    if alpha.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(DetectionError::Domain("reflection vector is not finite".into()));
    }
    if e == 0.0 {
        return Err(DetectionError::Degenerate("reflection vector is zero".into()));
    }
    Ok(e)
}

/// Samples of the test statistic under H1 (`present`) or H0.
pub fn sample_statistic(alpha: &CVector, sigma_d_sq: f64, present: bool, trials: usize, seed: u64) -> Result<Vec<f64>, DetectionError> {
    check_alpha(alpha)?;
    check_noise(sigma_d_sq)?;
    let mut rng = rng_from_seed(seed);
    Ok((0..trials).map(|_| draw_statistic(&mut rng, alpha, sigma_d_sq, present)).collect())
}

/// Monte Carlo run of the clairvoyant detector; one trial is one H1 draw and one H0 draw.
pub fn simulate_detector(alpha: &CVector, sigma_d_sq: f64, p_fa: f64, trials: u64, seed: u64) -> Result<DetectorRates, DetectionError> {
    simulate_detector_partitioned(alpha, sigma_d_sq, p_fa, trials, seed, 1)
}

/// As [`simulate_detector`], with trials split over `partitions` independent
/// sub-streams run in parallel. Reproducible for a fixed `(seed, partitions)`.
pub fn simulate_detector_partitioned(
    alpha: &CVector,
    sigma_d_sq: f64,
    p_fa: f64,
    trials: u64,
    seed: u64,
    partitions: usize,
) -> Result<DetectorRates, DetectionError> {
    let energy = check_alpha(alpha)?;
    if trials == 0 {
        return Err(DetectionError::Domain("trials must be at least 1".into()));
    }
    if partitions == 0 {
        return Err(DetectionError::Domain("partitions must be at least 1".into()));
    }
    let threshold = detector_threshold(energy, p_fa, sigma_d_sq)?;
    let parts = partitions as u64;
    let (hits, alarms) = (0..parts)
        .into_par_iter()
        .map(|p| {
            let n = trials / parts + u64::from(p < trials % parts);
            let mut rng = rng_from_seed(if parts == 1 { seed } else { derive_seed(seed, &[p]) });
            let mut hits = 0u64;
            let mut alarms = 0u64;
            for _ in 0..n {
                hits += u64::from(draw_statistic(&mut rng, alpha, sigma_d_sq, true) > threshold);
                alarms += u64::from(draw_statistic(&mut rng, alpha, sigma_d_sq, false) > threshold);
            }
            (hits, alarms)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(DetectorRates {
        empirical_pd: hits as f64 / trials as f64,
        empirical_pfa: alarms as f64 / trials as f64,
        trials,
    })
}

/// Per-CU SINR `|h_kk^H w_k|^2 / (sum_{i != k} |h_ki^H w_i|^2 + sigma_c^2)`.
pub fn sinr_eval(beamformers: &BeamformerSet, channels: &CommChannelSet) -> Result<Vec<f64>, DetectionError> {
    let k = channels.k();
    if beamformers.len() != k {
        return Err(DetectionError::Dimension(format!("{} beamformers for {k} BSs", beamformers.len())));
    }
    if beamformers.vectors.iter().any(|w| w.len() != channels.n_tx()) {
        return Err(DetectionError::Dimension("beamformer and channel lengths differ".into()));
    }
    let gain = |cu: usize, bs: usize| channels.get(cu, bs).dotc(&beamformers.vectors[bs]).norm_sqr();
    Ok((0..k)
        .map(|cu| {
            let interference: f64 = (0..k).filter(|&i| i != cu).map(|i| gain(cu, i)).sum();
            gain(cu, cu) / (interference + channels.noise_power_c)
        })
        .collect())
}

/// `a^* a^T`, the matrix with `tr(W A) = |a^T w|^2` for `W = w w^H`.
pub(crate) fn steering_outer(a: &CVector) -> CMatrix {
    a.conjugate() * a.transpose()
}

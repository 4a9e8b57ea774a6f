//! Communication-only design: minimum total power meeting the SINR targets,
//! then a common scale-up to the per-BS budget.

use nalgebra::{Complex, DMatrix};
use netisac_conic::{solve_conic, ConicProgram, LinearFunctional, SolveStatus};

use super::recovery::extract_rank_one;
use super::sdr::push_sinr_rows;
use super::{BeamformerSet, OptimizeError, DEFAULT_N_G, RANK_ONE_EPS};
use crate::model::{CMatrix, CVector, CommChannelSet};
use crate::rng::{cscg_vector, derive_seed, rng_from_seed};

const STAGE1_TOL: f64 = 1e-9;
const FALLBACK_SEED: u64 = 0x6265_6e63;

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    /// Scaled output beamformers.
    pub beamformers: BeamformerSet,
    /// Minimum-power beamformers before scaling.
    pub min_power: BeamformerSet,
    /// Optimal value of the relaxed minimum-power problem, watts.
    pub relaxed_power: f64,
    /// Amplitude factor applied in stage 2.
    pub scale: f64,
    /// Every stage-1 covariance passed the rank-one test.
    pub rank_one: bool,
}

/// `max -sum_i tr(W_i)` subject to the SINR rows.
pub fn min_power_sdr(channels: &CommChannelSet, gamma: &[f64]) -> Result<ConicProgram, OptimizeError> {
    let k = channels.k();
    if gamma.len() != k {
        return Err(OptimizeError::Dimension(format!("{} SINR targets for {k} CUs", gamma.len())));
    }
    if gamma.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(OptimizeError::Domain("SINR targets must be positive".into()));
    }
    let n = channels.n_tx();
    let mut program = ConicProgram::new(vec![n; k], 0);
    let neg_eye = CMatrix::identity(n, n) * Complex::new(-1.0, 0.0);
    program.maximize((0..k).fold(LinearFunctional::new(), |f, i| f.with_block(i, neg_eye.clone())));
    push_sinr_rows(&mut program, channels, gamma);
    Ok(program)
}

/// Powers meeting every SINR target with equality for fixed unit directions,
/// or `None` when that point is not nonnegative.
pub(crate) fn equality_powers(channels: &CommChannelSet, gamma: &[f64], directions: &[CVector]) -> Option<Vec<f64>> {
    let k = channels.k();
    let a = DMatrix::from_fn(k, k, |cu, i| {
        let g = channels.get(cu, i).dotc(&directions[i]).norm_sqr();
        if i == cu {
            g / gamma[cu]
        } else {
            -g
        }
    });
    let rhs = nalgebra::DVector::from_element(k, channels.noise_power_c);
    let p = a.lu().solve(&rhs)?;
    p.iter().all(|v| *v > 0.0 && v.is_finite()).then(|| p.iter().copied().collect())
}

fn unit(v: &CVector) -> Option<CVector> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / Complex::new(n, 0.0))
}

fn assemble(directions: &[CVector], powers: &[f64]) -> BeamformerSet {
    BeamformerSet::new(directions.iter().zip(powers).map(|(u, p)| u * Complex::new(p.sqrt(), 0.0)).collect())
}

/// Two-stage benchmark design.
pub fn comm_benchmark(channels: &CommChannelSet, gamma: &[f64], p_max: f64) -> Result<BenchmarkResult, OptimizeError> {
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(OptimizeError::Domain("p_max must be positive".into()));
    }
    let program = min_power_sdr(channels, gamma)?;
    let sol = solve_conic(&program, STAGE1_TOL)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::OptimalInaccurate => {}
        SolveStatus::Infeasible => return Err(OptimizeError::BenchmarkInfeasible("SINR targets are unreachable".into())),
        SolveStatus::Unbounded => return Err(OptimizeError::Domain("minimum-power problem reported unbounded".into())),
        SolveStatus::NumericalLimit => return Err(OptimizeError::NumericalLimit("benchmark stage 1")),
    }
    let relaxed_power = -sol.objective;

    let extracted: Option<Vec<CVector>> = sol
        .matrices
        .iter()
        .map(|w| extract_rank_one(w, RANK_ONE_EPS).and_then(|v| unit(&v)))
        .collect();
    let rank_one = extracted.is_some();
    let mut best: Option<(f64, BeamformerSet)> = None;
    if let Some(dirs) = &extracted {
        if let Some(p) = equality_powers(channels, gamma, dirs) {
            best = Some((p.iter().sum(), assemble(dirs, &p)));
        }
    }
    if best.is_none() {
        // principal directions first, then Gaussian candidates from the covariances
        let n = channels.n_tx();
        let eigs: Vec<_> = sol.matrices.iter().map(|w| w.clone().symmetric_eigen()).collect();
        let principal: Option<Vec<CVector>> = eigs
            .iter()
            .map(|e| {
                let idx = e.eigenvalues.imax();
                unit(&e.eigenvectors.column(idx).into_owned())
            })
            .collect();
        let mut candidates: Vec<Vec<CVector>> = principal.into_iter().collect();
        for trial in 0..DEFAULT_N_G {
            let mut rng = rng_from_seed(derive_seed(FALLBACK_SEED, &[trial as u64]));
            let dirs: Option<Vec<CVector>> = eigs
                .iter()
                .map(|e| {
                    let s = e.eigenvalues.map(|l| Complex::new(l.max(0.0).sqrt(), 0.0));
                    unit(&(&e.eigenvectors * CMatrix::from_diagonal(&s) * cscg_vector(&mut rng, n, 1.0)))
                })
                .collect();
            candidates.extend(dirs);
        }
        for dirs in &candidates {
            if let Some(p) = equality_powers(channels, gamma, dirs) {
                let total: f64 = p.iter().sum();
                if best.as_ref().is_none_or(|(b, _)| total < *b) {
                    best = Some((total, assemble(dirs, &p)));
                }
            }
        }
    }
    let (_, min_power) = best.ok_or_else(|| OptimizeError::BenchmarkInfeasible("no rank-one point recovered".into()))?;

    let scale = min_power
        .vectors
        .iter()
        .map(|w| p_max.sqrt() / w.norm())
        .fold(f64::INFINITY, f64::min);
    if scale < 1.0 {
        return Err(OptimizeError::BenchmarkInfeasible(format!(
            "minimum-power design needs {:.3e} W at some BS, budget is {p_max:.3e} W",
            min_power.powers().iter().fold(0.0_f64, |a, &b| a.max(b))
        )));
    }
    Ok(BenchmarkResult {
        beamformers: min_power.scaled(scale),
        min_power,
        relaxed_power,
        scale,
        rank_one,
    })
}

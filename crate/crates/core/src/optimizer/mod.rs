//! Semidefinite relaxation of the worst-case detection problem, rank-one
//! recovery and the communication-only benchmark.

mod benchmark;
mod recovery;
mod sdr;

use nalgebra::Complex;
use netisac_conic::{is_hermitian, ConicError};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::detection::{reflection_energy, sinr_eval, DetectionError, Scenario};
use crate::model::{ArrayConfig, CMatrix, CVector, CommChannelSet, SensingParams, TargetGrid};

pub use benchmark::{comm_benchmark, min_power_sdr, BenchmarkResult};
pub use recovery::{extract_rank_one, gaussian_randomize, solve_power_lp, PowerAllocation};
pub use sdr::build_detection_sdr;

/// Rank-one acceptance threshold on `lambda_1 / tr`.
pub const RANK_ONE_EPS: f64 = 1e-6;
/// Default number of Gaussian randomization trials.
pub const DEFAULT_N_G: usize = 200;
/// Relative SINR slack accepted when checking recovered beamformers.
pub(crate) const SINR_SLACK: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error("solver stopped before convergence in {0}")]
    NumericalLimit(&'static str),
    #[error("power allocation is infeasible for the given directions")]
    LpInfeasible,
    #[error("no randomization trial was feasible (SDR bound {sdr_bound:e})")]
    RandomizationFailure { sdr_bound: f64 },
    #[error("benchmark infeasible: {0}")]
    BenchmarkInfeasible(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub vectors: Vec<CVector>,
}

impl BeamformerSet {
    pub fn new(vectors: Vec<CVector>) -> Self {
        Self { vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Per-BS transmit power `||w_i||^2`.
    pub fn powers(&self) -> Vec<f64> {
        self.vectors.iter().map(|w| w.norm_squared()).collect()
    }

    pub fn outer(&self) -> CovarianceSet {
        CovarianceSet::new(self.vectors.iter().map(|w| w * w.adjoint()).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.vectors.iter().map(|w| w * Complex::new(factor, 0.0)).collect())
    }
}

impl Serialize for BeamformerSet {
    /// Each vector as a list of `[re, im]` pairs.
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Vec<[f64; 2]>> = self
            .vectors
            .iter()
            .map(|w| w.iter().map(|c| [c.re, c.im]).collect())
            .collect();
        v.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    pub matrices: Vec<CMatrix>,
}

impl CovarianceSet {
    pub fn new(matrices: Vec<CMatrix>) -> Self {
        Self { matrices }
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Hermitian to 1e-9 and PSD to `-1e-8` relative to the spectral scale.
    pub fn validate(&self) -> Result<(), OptimizeError> {
        for (i, w) in self.matrices.iter().enumerate() {
            if !w.is_square() || !is_hermitian(w, netisac_conic::program::HERMITIAN_TOL) {
                return Err(OptimizeError::Domain(format!("covariance {i} is not Hermitian")));
            }
            let eig = w.clone().symmetric_eigenvalues();
            let scale = eig.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
            if eig.iter().any(|&l| l < -1e-8 * scale) {
                return Err(OptimizeError::Domain(format!("covariance {i} is not PSD")));
            }
        }
        Ok(())
    }
}

/// One instance of the worst-case detection design problem.
#[derive(Debug, Clone, Copy)]
pub struct DetectionProblem<'a> {
    pub scenario: Scenario,
    pub channels: &'a CommChannelSet,
    pub grid: &'a TargetGrid,
    pub array: &'a ArrayConfig,
    pub params: &'a SensingParams,
    /// Linear SINR targets, one per CU.
    pub gamma: &'a [f64],
    /// Per-BS power budget, watts.
    pub p_max: f64,
}

impl DetectionProblem<'_> {
    pub fn k(&self) -> usize {
        self.channels.k()
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let k = self.channels.k();
        if self.gamma.len() != k {
            return Err(OptimizeError::Dimension(format!("{} SINR targets for {k} CUs", self.gamma.len())));
        }
        if self.channels.n_tx() != self.array.n_tx {
            return Err(OptimizeError::Dimension("channel length differs from N_t".into()));
        }
        if self.grid.is_empty() || self.grid.angles.iter().any(|a| a.len() != k) {
            return Err(OptimizeError::Dimension(format!("grid is empty or not built for {k} BSs")));
        }
        if self.gamma.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(OptimizeError::Domain("SINR targets must be positive".into()));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(OptimizeError::Domain("p_max must be positive".into()));
        }
        Ok(())
    }

    /// Reflection energy at every grid point.
    pub fn energies(&self, bf: &BeamformerSet) -> Result<Vec<f64>, OptimizeError> {
        (0..self.grid.len())
            .map(|m| Ok(reflection_energy(self.scenario, bf, self.grid, m, self.params, self.array)?.value))
            .collect()
    }

    /// Upper bound on the achievable worst-case energy, `min_m sum_i c_i^m N_t P_max`.
    ///
    /// The relaxation and the power LP state their epigraph scalar in these
    /// units so the optimum is O(1) whatever the absolute energy level.
    pub fn energy_scale(&self) -> f64 {
        let n = self.array.n_tx as f64;
        (0..self.grid.len())
            .map(|m| {
                let w = crate::detection::link_weights(self.scenario, self.grid, m, self.params, self.array);
                w.iter().sum::<f64>() * n * self.p_max
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Worst-case reflection energy over the grid.
    pub fn min_energy(&self, bf: &BeamformerSet) -> Result<f64, OptimizeError> {
        Ok(self.energies(bf)?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// SINR targets met to `SINR_SLACK` and powers within budget.
    pub(crate) fn is_feasible(&self, bf: &BeamformerSet) -> Result<bool, OptimizeError> {
        let sinr = sinr_eval(bf, self.channels)?;
        let sinr_ok = sinr.iter().zip(self.gamma).all(|(s, g)| *s >= g * (1.0 - SINR_SLACK));
        let power_ok = bf.powers().iter().all(|&p| p <= self.p_max * (1.0 + 1e-12));
        Ok(sinr_ok && power_ok)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub scenario: Scenario,
    pub beamformers: BeamformerSet,
    /// Optimal value of the relaxation, watts.
    pub sdr_bound: f64,
    pub achieved_min_energy: f64,
    pub per_cu_sinr: Vec<f64>,
    pub per_bs_power: Vec<f64>,
    /// Every SDR covariance passed the rank-one test.
    pub rank_one_direct: bool,
    pub randomization_trials_used: usize,
}

impl SolveReport {
    pub(crate) fn evaluate(
        problem: &DetectionProblem<'_>,
        beamformers: BeamformerSet,
        sdr_bound: f64,
        rank_one_direct: bool,
        randomization_trials_used: usize,
    ) -> Result<Self, OptimizeError> {
        Ok(Self {
            scenario: problem.scenario,
            achieved_min_energy: problem.min_energy(&beamformers)?,
            per_cu_sinr: sinr_eval(&beamformers, problem.channels)?,
            per_bs_power: beamformers.powers(),
            beamformers,
            sdr_bound,
            rank_one_direct,
            randomization_trials_used,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub n_g: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            n_g: DEFAULT_N_G,
            epsilon: RANK_ONE_EPS,
            seed: 0,
        }
    }
}

/// Infeasible relaxations are an outcome, not an error.
#[derive(Debug, Clone)]
pub enum ProposedOutcome {
    Solved(SolveReport),
    Infeasible,
}

/// Relaxation, then eigen-extraction or Gaussian randomization.
pub fn solve_proposed(problem: &DetectionProblem<'_>, opts: &SolveOptions) -> Result<ProposedOutcome, OptimizeError> {
    problem.validate()?;
    let program = build_detection_sdr(problem)?;
    let sol = netisac_conic::solve_conic(&program, opts.tol)?;
    match sol.status {
        netisac_conic::SolveStatus::Optimal | netisac_conic::SolveStatus::OptimalInaccurate => {}
        netisac_conic::SolveStatus::Infeasible => return Ok(ProposedOutcome::Infeasible),
        netisac_conic::SolveStatus::Unbounded => {
            return Err(OptimizeError::Domain("relaxation reported unbounded".into()))
        }
        netisac_conic::SolveStatus::NumericalLimit => return Err(OptimizeError::NumericalLimit("detection SDR")),
    }
    gaussian_randomize(problem, &sol, opts.n_g, opts.epsilon, opts.seed).map(ProposedOutcome::Solved)
}

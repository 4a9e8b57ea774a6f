//! Small dense Hermitian semidefinite programs.
//!
//! Programs are stated over complex Hermitian PSD blocks (see [`ConicProgram`])
//! and solved by a homogeneous self-dual interior-point method on the real
//! symmetric embedding of each block. The same solver handles pure linear
//! programs, which are the degenerate case with no PSD blocks.

mod embed;
mod ipm;
pub mod program;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use embed::{embed, project};
pub use program::{
    is_hermitian, trace_product, CMatrix, ConicProgram, Constraint, LinearFunctional, Sense,
};

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("invalid solver setting: {0}")]
    Settings(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Relative gap and both feasibility residuals within tolerance.
    Optimal,
    /// A dual improving ray certifies that no feasible point exists.
    Infeasible,
    /// A primal improving ray certifies that the objective is unbounded.
    Unbounded,
    /// Iteration limit or stall, but the best iterate is within
    /// `REDUCED_ACCURACY_FACTOR * tol` on gap and both residuals.
    OptimalInaccurate,
    /// Iteration limit reached or progress stalled before convergence.
    NumericalLimit,
}

impl SolveStatus {
    /// `Optimal` or `OptimalInaccurate`.
    pub fn is_optimal(self) -> bool {
        matches!(self, Self::Optimal | Self::OptimalInaccurate)
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub matrices: Vec<CMatrix>,
    pub scalars: Vec<f64>,
    /// Objective (maximization sense) at the returned primal point.
    pub objective: f64,
    /// Dual bound on the objective.
    pub dual_objective: f64,
    /// `|p - d| / (1 + |p| + |d|)` on the equilibrated problem.
    pub duality_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// One multiplier per constraint, in the original row units.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// Equilibrated objectives below this magnitude trigger a rescaled re-solve.
const OBJ_RESCALE_BELOW: f64 = 1e-2;
/// Loosening applied to `tol` when accepting an early-terminated iterate.
pub const REDUCED_ACCURACY_FACTOR: f64 = 1e3;

/// Abstract seam so an external conic solver can be substituted.
pub trait ConicSolver {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution, ConicError>;
}

#[derive(Debug, Clone, Copy)]
pub struct InteriorPoint {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl InteriorPoint {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

impl ConicSolver for InteriorPoint {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution, ConicError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ConicError::Settings(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(ConicError::Settings("max_iter must be at least 1".into()));
        }
        program.validate()?;
        let settings = ipm::IpmSettings {
            tol: self.tol,
            infeas_tol: 1e-8,
            max_iter: self.max_iter,
            step_factor: 0.99,
        };
        // The gap test is relative to 1 + |objective|, which is vacuous when
        // the equilibrated optimum is tiny; re-solve with the cost rescaled by
        // the observed magnitude so the test becomes relative.
        // A rescaled attempt that fails falls back to the last optimal one.
        let mut obj_scale = 1.0;
        let mut attempts = 0;
        let mut last_optimal = None;
        let (res, eq) = loop {
            let mut form = standard_form(program);
            let mut eq = ipm::equilibrate(&mut form, 20);
            if obj_scale != 1.0 {
                form.scale_cost(obj_scale);
                eq.c_scale /= obj_scale;
            }
            let res = ipm::solve(&form, &settings);
            if res.status != ipm::IpmStatus::Optimal {
                break last_optimal.unwrap_or((res, eq));
            }
            let mag = res.pobj.abs().max(res.dobj.abs());
            if attempts < 3 && mag > 0.0 && mag < OBJ_RESCALE_BELOW {
                obj_scale /= mag;
                attempts += 1;
                last_optimal = Some((res, eq));
                continue;
            }
            break (res, eq);
        };

        let status = match res.status {
            ipm::IpmStatus::Optimal => SolveStatus::Optimal,
            ipm::IpmStatus::PrimalInfeasible => SolveStatus::Infeasible,
            ipm::IpmStatus::DualInfeasible => SolveStatus::Unbounded,
            ipm::IpmStatus::IterationLimit | ipm::IpmStatus::Stalled => {
                let loose = REDUCED_ACCURACY_FACTOR * self.tol;
                if res.tau > 0.0 && res.pres <= loose && res.dres <= loose && res.relgap <= loose {
                    SolveStatus::OptimalInaccurate
                } else {
                    SolveStatus::NumericalLimit
                }
            }
        };
        let tau = if res.tau > 0.0 { res.tau } else { 1.0 };
        let x = eq.unscale_primal(&res.x);
        let matrices: Vec<CMatrix> = x
            .mats
            .iter()
            .map(|m| {
                let h = project(&(m / tau));
                (&h + h.adjoint()) * nalgebra::Complex::new(0.5, 0.0)
            })
            .collect();
        let scalars: Vec<f64> = (0..program.n_scalars).map(|j| x.lin[j] / tau).collect();
        let y: DVector<f64> = eq.unscale_dual(&(res.y.clone() / tau));
        let objective = program.objective.eval(&matrices, &scalars);
        let dual_objective = -eq.c_scale * eq.b_scale * res.dobj;
        Ok(ConicSolution {
            status,
            matrices,
            scalars,
            objective,
            dual_objective,
            duality_gap: res.relgap,
            primal_residual: res.pres,
            dual_residual: res.dres,
            duals: y.iter().copied().collect(),
            iterations: res.iterations,
        })
    }
}

/// Solves `program` with the default interior-point settings at tolerance `tol`.
pub fn solve_conic(program: &ConicProgram, tol: f64) -> Result<ConicSolution, ConicError> {
    InteriorPoint::with_tol(tol).solve(program)
}

/// Real standard form: LP variables are `[scalars.., slacks..]`, one slack per inequality.
fn standard_form(program: &ConicProgram) -> ipm::StdForm {
    let dims: Vec<usize> = program.psd_block_dims.iter().map(|d| 2 * d).collect();
    let n_slack = program
        .constraints
        .iter()
        .filter(|c| c.sense != Sense::Eq)
        .count();
    let n_lin = program.n_scalars + n_slack;

    let lower = |f: &LinearFunctional, sign: f64| -> ipm::Elem {
        let mut mats: Vec<Option<DMatrix<f64>>> = vec![None; dims.len()];
        for (b, c) in &f.blocks {
            let e = embed(c) * (0.5 * sign);
            mats[*b] = Some(match mats[*b].take() {
                Some(prev) => prev + e,
                None => e,
            });
        }
        let mut lin = DVector::zeros(n_lin);
        for (s, a) in &f.scalars {
            lin[*s] += sign * a;
        }
        ipm::Elem { mats, lin }
    };

    let mut rows = Vec::with_capacity(program.constraints.len());
    let mut b = DVector::zeros(program.constraints.len());
    let mut slack = program.n_scalars;
    for (i, con) in program.constraints.iter().enumerate() {
        let mut row = lower(&con.functional, 1.0);
        match con.sense {
            Sense::Le => {
                row.lin[slack] = 1.0;
                slack += 1;
            }
            Sense::Ge => {
                row.lin[slack] = -1.0;
                slack += 1;
            }
            Sense::Eq => {}
        }
        b[i] = con.rhs;
        rows.push(row);
    }
    let c = lower(&program.objective, -1.0);
    ipm::StdForm {
        dims,
        n_lin,
        slack_start: program.n_scalars,
        rows,
        b,
        c,
    }
}

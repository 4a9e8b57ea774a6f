//! Rank-one recovery: eigen-extraction, the fixed-direction power LP and
//! Gaussian randomization.

use nalgebra::{Complex, DVector};
use netisac_conic::{solve_conic, ConicProgram, ConicSolution, LinearFunctional, Sense, SolveStatus};
use rayon::prelude::*;

use super::{BeamformerSet, DetectionProblem, OptimizeError, SolveReport};
use crate::detection::{link_weights, transmit_steering};
use crate::model::{CMatrix, CVector};
use crate::rng::{cscg_vector, derive_seed, rng_from_seed};

const LP_TOL: f64 = 1e-9;

/// `sqrt(lambda_1) u_1` when `lambda_1 / tr(W) >= 1 - epsilon`.
pub fn extract_rank_one(w: &CMatrix, epsilon: f64) -> Option<CVector> {
    let tr = w.trace().re;
    if !(tr > 0.0) {
        return None;
    }
    let eig = w.clone().symmetric_eigen();
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if lambda / tr < 1.0 - epsilon {
        return None;
    }
    Some(eig.eigenvectors.column(idx).into_owned() * Complex::new(lambda.sqrt(), 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    /// Worst-case reflection energy at these powers.
    pub objective: f64,
}

impl PowerAllocation {
    pub fn beamformers(&self, directions: &[CVector]) -> BeamformerSet {
        BeamformerSet::new(
            directions
                .iter()
                .zip(&self.powers)
                .map(|(u, &p)| u * Complex::new(p.sqrt(), 0.0))
                .collect(),
        )
    }
}

/// Optimal powers for fixed unit directions: maximize the worst-case energy
/// subject to the SINR rows and `0 <= p_i <= p_max`.
pub fn solve_power_lp(problem: &DetectionProblem<'_>, directions: &[CVector]) -> Result<PowerAllocation, OptimizeError> {
    problem.validate()?;
    let k = problem.k();
    if directions.len() != k || directions.iter().any(|u| u.len() != problem.array.n_tx) {
        return Err(OptimizeError::Dimension("need one length-N_t direction per BS".into()));
    }
    if directions.iter().any(|u| (u.norm() - 1.0).abs() > 1e-9) {
        return Err(OptimizeError::Domain("directions must have unit norm".into()));
    }

    // energy coefficients c[m][i]
    let coeffs: Vec<Vec<f64>> = (0..problem.grid.len())
        .map(|m| {
            let a_t = transmit_steering(problem.grid, m, problem.array);
            let w = link_weights(problem.scenario, problem.grid, m, problem.params, problem.array);
            (0..k).map(|i| w[i] * a_t[i].dot(&directions[i]).norm_sqr()).collect()
        })
        .collect();

    let scale = problem.energy_scale();
    let mut lp = ConicProgram::new(vec![], 1 + k);
    lp.maximize(LinearFunctional::new().with_scalar(0, 1.0));
    for row in &coeffs {
        let f = row
            .iter()
            .enumerate()
            .fold(LinearFunctional::new().with_scalar(0, -1.0), |f, (i, &c)| f.with_scalar(1 + i, c / scale));
        lp.add_constraint(f, Sense::Ge, 0.0);
    }
    for cu in 0..k {
        let mut f = LinearFunctional::new();
        for i in 0..k {
            let g = problem.channels.get(cu, i).dotc(&directions[i]).norm_sqr();
            f = f.with_scalar(1 + i, if i == cu { g / problem.gamma[cu] } else { -g });
        }
        lp.add_constraint(f, Sense::Ge, problem.channels.noise_power_c);
    }
    for i in 0..k {
        lp.add_constraint(LinearFunctional::new().with_scalar(1 + i, 1.0), Sense::Le, problem.p_max);
    }

    let sol = solve_conic(&lp, LP_TOL)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::OptimalInaccurate => {}
        SolveStatus::Infeasible => return Err(OptimizeError::LpInfeasible),
        SolveStatus::Unbounded => return Err(OptimizeError::Domain("power LP reported unbounded".into())),
        SolveStatus::NumericalLimit => return Err(OptimizeError::NumericalLimit("power LP")),
    }
    let powers: Vec<f64> = (0..k).map(|i| sol.scalars[1 + i].clamp(0.0, problem.p_max)).collect();
    let objective = coeffs
        .iter()
        .map(|row| row.iter().zip(&powers).map(|(c, p)| c * p).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(PowerAllocation { powers, objective })
}

fn normalized(v: &CVector) -> Option<CVector> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / Complex::new(n, 0.0))
}

/// Recovers feasible beamformers from an optimal relaxation.
///
/// When every covariance passes the rank-one test the principal components are
/// returned directly (powers refitted by the LP if rounding broke a
/// constraint). Otherwise `n_g` Gaussian candidates `U_i S_i^{1/2} r_i` are
/// drawn, their powers set by the LP, and the best feasible one kept; ties go
/// to the earliest trial.
pub fn gaussian_randomize(
    problem: &DetectionProblem<'_>,
    solution: &ConicSolution,
    n_g: usize,
    epsilon: f64,
    seed: u64,
) -> Result<SolveReport, OptimizeError> {
    problem.validate()?;
    if !solution.status.is_optimal() {
        return Err(OptimizeError::Domain("randomization needs an optimal relaxation".into()));
    }
    let k = problem.k();
    if solution.matrices.len() != k || solution.scalars.is_empty() {
        return Err(OptimizeError::Dimension("solution does not match the problem".into()));
    }
    let sdr_bound = solution.scalars[0] * problem.energy_scale();

    let extracted: Option<Vec<CVector>> = solution.matrices.iter().map(|w| extract_rank_one(w, epsilon)).collect();
    if let Some(vs) = extracted {
        let bf = BeamformerSet::new(vs);
        if problem.is_feasible(&bf)? {
            return SolveReport::evaluate(problem, bf, sdr_bound, true, 0);
        }
        if let Some(dirs) = bf.vectors.iter().map(normalized).collect::<Option<Vec<_>>>() {
            match solve_power_lp(problem, &dirs) {
                Ok(alloc) => {
                    let refit = alloc.beamformers(&dirs);
                    if problem.is_feasible(&refit)? {
                        return SolveReport::evaluate(problem, refit, sdr_bound, true, 0);
                    }
                }
                Err(OptimizeError::LpInfeasible | OptimizeError::NumericalLimit(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }

    if n_g == 0 {
        return Err(OptimizeError::Domain("n_g must be at least 1".into()));
    }
    // U_i S_i^{1/2}
    let factors: Vec<CMatrix> = solution
        .matrices
        .iter()
        .map(|w| {
            let eig = w.clone().symmetric_eigen();
            let s = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| Complex::new(l.max(0.0).sqrt(), 0.0)));
            eig.eigenvectors * CMatrix::from_diagonal(&s)
        })
        .collect();
    let n = problem.array.n_tx;

    let candidates: Vec<Option<(f64, BeamformerSet)>> = (0..n_g)
        .into_par_iter()
        .map(|trial| -> Result<Option<(f64, BeamformerSet)>, OptimizeError> {
            let mut rng = rng_from_seed(derive_seed(seed, &[trial as u64]));
            let dirs: Option<Vec<CVector>> = factors.iter().map(|f| normalized(&(f * cscg_vector(&mut rng, n, 1.0)))).collect();
            let Some(dirs) = dirs else { return Ok(None) };
            let alloc = match solve_power_lp(problem, &dirs) {
                Ok(a) => a,
                Err(OptimizeError::LpInfeasible | OptimizeError::NumericalLimit(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let bf = alloc.beamformers(&dirs);
            if !problem.is_feasible(&bf)? {
                return Ok(None);
            }
            Ok(Some((problem.min_energy(&bf)?, bf)))
        })
        .collect::<Result<_, _>>()?;

    let mut best: Option<(f64, BeamformerSet)> = None;
    for (value, bf) in candidates.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, bf));
        }
    }
    let (_, bf) = best.ok_or(OptimizeError::RandomizationFailure { sdr_bound })?;
    SolveReport::evaluate(problem, bf, sdr_bound, false, n_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::Scenario;
    use crate::model::{build_target_grid, ArrayConfig, CommChannelSet, Position, SensingParams, SystemLayout, TargetGrid};
    use crate::rng::cscg_vector;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn rank_one_examples() {
        let w = CVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.1), c(0.0, -1.0)]);
        let v = extract_rank_one(&(&w * w.adjoint()), 1e-6).unwrap();
        assert!((v.norm_squared() - w.norm_squared()).abs() < 1e-9);
        // equal up to a global phase
        let phase = w.dotc(&v) / w.dotc(&v).norm();
        assert!((&w * phase - &v).norm() < 1e-9);

        let eye = CMatrix::identity(3, 3);
        assert!(extract_rank_one(&eye, 0.5).is_none());
        assert!(extract_rank_one(&CMatrix::zeros(2, 2), 1e-6).is_none());
        // accepted once epsilon reaches 1 - 1/N
        assert!(extract_rank_one(&eye, 1.0 - 1.0 / 3.0 + 1e-12).is_some());
    }

    proptest! {
        #[test]
        fn accepted_extraction_is_close(seed in 0u64..5000, log_eps in -8.0f64..-1.0, mix in 0.0f64..1.0) {
            let eps = 10f64.powf(log_eps);
            let mut rng = rng_from_seed(seed);
            let w = cscg_vector(&mut rng, 4, 1.0);
            let z = cscg_vector(&mut rng, 4, 1.0);
            // perturb with a second component of relative weight ~ mix * eps
            let pert = (&z * z.adjoint()) * Complex::new(mix * eps * w.norm_squared() / z.norm_squared(), 0.0);
            let m = &w * w.adjoint() + pert;
            if let Some(v) = extract_rank_one(&m, eps) {
                let err = (&m - &v * v.adjoint()).norm() / m.norm();
                prop_assert!(err <= (2.0 * eps).sqrt());
            }
        }
    }

    fn single_point_grid(n: usize) -> (SystemLayout, SensingParams, TargetGrid) {
        let layout = SystemLayout::new(
            vec![Position::new(-60.0, 0.0), Position::new(60.0, 0.0)],
            vec![Position::new(-10.0, 0.0), Position::new(10.0, 0.0)],
            ArrayConfig::half_wavelength(n).unwrap(),
        )
        .unwrap();
        let params = SensingParams::new(1.0, 1e-3, 1.0, 1e-13).unwrap();
        let grid = build_target_grid(&layout, &params, Position::new(0.0, 5.0), 1.0, 1).unwrap();
        (layout, params, grid)
    }

    #[test]
    fn single_bs_matched_filter_uses_full_power() {
        let layout = SystemLayout::new(vec![Position::new(0.0, 0.0)], vec![Position::new(10.0, 0.0)], ArrayConfig::half_wavelength(2).unwrap()).unwrap();
        let params = SensingParams::new(1.0, 1e-3, 1.0, 1e-13).unwrap();
        let grid = build_target_grid(&layout, &params, Position::new(20.0, 20.0), 1.0, 1).unwrap();
        let h = CVector::from_vec(vec![c(1e-3, 2e-4), c(-5e-4, 7e-4)]);
        let channels = CommChannelSet::new(vec![vec![h.clone()]], 1e-9).unwrap();
        let u = &h / c(h.norm(), 0.0);
        let p_max = 2.0;
        let feasible_gamma = [h.norm_squared() * p_max / 1e-9 * 0.5];
        let problem = DetectionProblem {
            scenario: Scenario::Synchronized,
            channels: &channels,
            grid: &grid,
            array: &layout.array,
            params: &params,
            gamma: &feasible_gamma,
            p_max,
        };
        let alloc = solve_power_lp(&problem, std::slice::from_ref(&u)).unwrap();
        assert!((alloc.powers[0] / p_max - 1.0).abs() < 1e-8, "{:?}", alloc.powers);

        let hard = [h.norm_squared() * p_max / 1e-9 * 2.0];
        let problem = DetectionProblem { gamma: &hard, ..problem };
        let r = solve_power_lp(&problem, &[u]);
        assert!(matches!(r, Err(OptimizeError::LpInfeasible)), "{r:?}");
    }

    #[test]
    fn two_bs_lp_matches_grid_search() {
        let (layout, params, grid) = single_point_grid(3);
        let mut rng = rng_from_seed(42);
        let mk = |rng: &mut crate::rng::SimRng, s: f64| cscg_vector(rng, 3, s * s);
        let channels = CommChannelSet::new(
            vec![vec![mk(&mut rng, 3e-4), mk(&mut rng, 1e-4)], vec![mk(&mut rng, 1e-4), mk(&mut rng, 3e-4)]],
            1e-10,
        )
        .unwrap();
        // matched to the direct channels, perturbed so cross terms stay nonzero
        let dirs: Vec<CVector> = (0..2)
            .map(|i| normalized(&(channels.get(i, i) + cscg_vector(&mut rng, 3, 1e-8))).unwrap())
            .collect();
        let p_max = 1.0;
        let gamma = [3.0, 2.0];
        for scenario in Scenario::ALL {
            let problem = DetectionProblem {
                scenario,
                channels: &channels,
                grid: &grid,
                array: &layout.array,
                params: &params,
                gamma: &gamma,
                p_max,
            };
            let alloc = solve_power_lp(&problem, &dirs).unwrap();

            // brute force over (p1, p2) at 1e-3 P_max
            let steps = 1000;
            let mut best = f64::NEG_INFINITY;
            for a in 0..=steps {
                for b in 0..=steps {
                    let p = [a as f64 / steps as f64 * p_max, b as f64 / steps as f64 * p_max];
                    let bf = PowerAllocation { powers: p.to_vec(), objective: 0.0 }.beamformers(&dirs);
                    let sinr = crate::detection::sinr_eval(&bf, &channels).unwrap();
                    if sinr.iter().zip(&gamma).all(|(s, g)| s >= g) {
                        best = best.max(problem.min_energy(&bf).unwrap());
                    }
                }
            }
            assert!(best.is_finite(), "grid found no feasible point");
            assert!((alloc.objective - best).abs() <= 1e-2 * best, "{scenario}: lp {} grid {best}", alloc.objective);
            assert!(alloc.objective >= best * (1.0 - 1e-9));
        }
    }
}

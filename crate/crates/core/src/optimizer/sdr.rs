use nalgebra::Complex;
use netisac_conic::{ConicProgram, LinearFunctional, Sense};

use super::{DetectionProblem, OptimizeError};
use crate::detection::{link_weights, steering_outer, transmit_steering};
use crate::model::{CMatrix, CommChannelSet};

/// Appends `tr(h_kk h_kk^H W_k) / G_k - sum_{i != k} tr(h_ki h_ki^H W_i) >= sigma_c^2` for every CU.
pub(super) fn push_sinr_rows(program: &mut ConicProgram, channels: &CommChannelSet, gamma: &[f64]) {
    let k = channels.k();
    for cu in 0..k {
        let mut f = LinearFunctional::new();
        for i in 0..k {
            let h = channels.get(cu, i);
            let outer = h * h.adjoint();
            let coef = if i == cu { 1.0 / gamma[cu] } else { -1.0 };
            f = f.with_block(i, outer * Complex::new(coef, 0.0));
        }
        program.add_constraint(f, Sense::Ge, channels.noise_power_c);
    }
}

/// Relaxed design problem over `W_i >= 0` and an epigraph scalar `t` (index 0).
///
/// Rows, in order: one worst-case energy row per grid point
/// (`sum_i c_i^m tr(W_i A_i^m) / s - t >= 0`, `t` in units of
/// `s = DetectionProblem::energy_scale`),
/// one SINR row per CU, one power row per BS. Objective: maximize `t`.
pub fn build_detection_sdr(problem: &DetectionProblem<'_>) -> Result<ConicProgram, OptimizeError> {
    problem.validate()?;
    let k = problem.k();
    let n = problem.array.n_tx;
    let scale = problem.energy_scale();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(OptimizeError::Domain(format!("energy scale must be positive, got {scale}")));
    }
    let mut program = ConicProgram::new(vec![n; k], 1);
    program.maximize(LinearFunctional::new().with_scalar(0, 1.0));

    for m in 0..problem.grid.len() {
        let a_t = transmit_steering(problem.grid, m, problem.array);
        let weights = link_weights(problem.scenario, problem.grid, m, problem.params, problem.array);
        let mut f = LinearFunctional::new().with_scalar(0, -1.0);
        for i in 0..k {
            f = f.with_block(i, steering_outer(&a_t[i]) * Complex::new(weights[i] / scale, 0.0));
        }
        program.add_constraint(f, Sense::Ge, 0.0);
    }
    push_sinr_rows(&mut program, problem.channels, problem.gamma);
    for i in 0..k {
        program.add_constraint(LinearFunctional::new().with_block(i, CMatrix::identity(n, n)), Sense::Le, problem.p_max);
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::Scenario;
    use crate::model::{build_target_grid, sample_comm_channels, ArrayConfig, CommParams, Position, SensingParams, SystemLayout};

    #[test]
    fn structure_for_three_bs_nine_points() {
        let layout = SystemLayout::new(
            vec![Position::new(-60.0, 0.0), Position::new(60.0, 0.0), Position::new(0.0, 60.0)],
            vec![Position::new(-10.0, 0.0), Position::new(10.0, 0.0), Position::new(0.0, 10.0)],
            ArrayConfig::half_wavelength(4).unwrap(),
        )
        .unwrap();
        let params = SensingParams::new(1.0, 1e-3, 1.0, 1e-13).unwrap();
        let grid = build_target_grid(&layout, &params, Position::new(0.0, 0.0), 3.0, 3).unwrap();
        let comm = CommParams::new(4e-12, 10.0, 3.0, 1e-3).unwrap();
        let channels = sample_comm_channels(&layout, &comm, 1).unwrap();
        let gamma = [10.0; 3];
        for scenario in Scenario::ALL {
            let problem = DetectionProblem {
                scenario,
                channels: &channels,
                grid: &grid,
                array: &layout.array,
                params: &params,
                gamma: &gamma,
                p_max: 10.0,
            };
            let p = build_detection_sdr(&problem).unwrap();
            assert_eq!(p.psd_block_dims, vec![4, 4, 4]);
            assert_eq!(p.n_scalars, 1);
            assert_eq!(p.n_constraints(), 15);
            p.validate().unwrap();
        }
        let bad_gamma = [10.0; 2];
        let problem = DetectionProblem {
            scenario: Scenario::Synchronized,
            channels: &channels,
            grid: &grid,
            array: &layout.array,
            params: &params,
            gamma: &bad_gamma,
            p_max: 10.0,
        };
        assert!(matches!(build_detection_sdr(&problem), Err(OptimizeError::Dimension(_))));
    }
}

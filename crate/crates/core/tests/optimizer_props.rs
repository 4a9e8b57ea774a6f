//! Structural properties of the relaxation on small random instances.

use nalgebra::Complex;
use proptest::prelude::*;

use netisac::detection::Scenario;
use netisac::model::{
    build_target_grid, sample_comm_channels, ArrayConfig, CommChannelSet, CommParams, Position, SensingParams,
    SystemLayout, TargetGrid,
};
use netisac::optimizer::{comm_benchmark, OptimizeError, solve_proposed, DetectionProblem, ProposedOutcome, SolveOptions};

struct Scene {
    layout: SystemLayout,
    sensing: SensingParams,
    grid: TargetGrid,
    channels: CommChannelSet,
}

fn scene(seed: u64) -> Scene {
    let layout = SystemLayout::new(
        vec![Position::new(-60.0, 0.0), Position::new(60.0, 0.0), Position::new(0.0, 60.0)],
        vec![Position::new(-30.0, 10.0), Position::new(30.0, 10.0), Position::new(5.0, 30.0)],
        ArrayConfig::new(3, 3, 0.5).unwrap(),
    )
    .unwrap();
    let sensing = SensingParams::new(1.0, 3e-10, 1.0, 10f64.powf(-13.2)).unwrap();
    let comm = CommParams::new(10f64.powf(-11.4), 10.0, 3.0, 1e-3).unwrap();
    let grid = build_target_grid(&layout, &sensing, Position::new(0.0, 0.0), 3.0, 2).unwrap();
    let channels = sample_comm_channels(&layout, &comm, seed).unwrap();
    Scene { layout, sensing, grid, channels }
}

fn bound(s: &Scene, channels: &CommChannelSet, scenario: Scenario, gamma: f64, p_max: f64) -> Option<f64> {
    let gamma = vec![gamma; 3];
    let problem = DetectionProblem {
        scenario,
        channels,
        grid: &s.grid,
        array: &s.layout.array,
        params: &s.sensing,
        gamma: &gamma,
        p_max,
    };
    let opts = SolveOptions { n_g: 10, ..SolveOptions::default() };
    match solve_proposed(&problem, &opts).unwrap() {
        ProposedOutcome::Solved(r) => Some(r.sdr_bound),
        ProposedOutcome::Infeasible => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    // channels scaled by c and noise by c^2 describe the same SINR constraints
    #[test]
    fn sinr_rows_are_scale_invariant(seed in 0u64..1000, log_c in -2.0f64..2.0, gamma_db in 0.0f64..15.0) {
        let s = scene(seed);
        let c = 10f64.powf(log_c);
        let scaled = CommChannelSet::new(
            s.channels.channels.iter().map(|row| row.iter().map(|h| h * Complex::new(c, 0.0)).collect()).collect(),
            s.channels.noise_power_c * c * c,
        )
        .unwrap();
        let g = 10f64.powf(gamma_db / 10.0);
        let a = bound(&s, &s.channels, Scenario::Synchronized, g, 10.0);
        let b = bound(&s, &scaled, Scenario::Synchronized, g, 10.0);
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a / b - 1.0).abs() < 1e-6, "{a} vs {b}"),
            (None, None) => {}
            other => prop_assert!(false, "feasibility changed under scaling: {other:?}"),
        }
    }

    // every benchmark output is feasible for the relaxation, so it cannot beat the bound
    #[test]
    fn relaxation_bound_dominates_benchmark(seed in 0u64..1000, p_dbm in 34.0f64..46.0, gamma_db in 0.0f64..15.0) {
        let s = scene(seed);
        let p_max = 10f64.powf((p_dbm - 30.0) / 10.0);
        let g = 10f64.powf(gamma_db / 10.0);
        let gamma = vec![g; 3];
        let bench = match comm_benchmark(&s.channels, &gamma, p_max) {
            Ok(b) => b,
            Err(OptimizeError::BenchmarkInfeasible(_)) => return Ok(()),
            Err(e) => panic!("benchmark failed: {e}"),
        };
        for scenario in Scenario::ALL {
            let problem = DetectionProblem {
                scenario,
                channels: &s.channels,
                grid: &s.grid,
                array: &s.layout.array,
                params: &s.sensing,
                gamma: &gamma,
                p_max,
            };
            let e_bench = problem.min_energy(&bench.beamformers).unwrap();
            let ub = bound(&s, &s.channels, scenario, g, p_max).expect("benchmark feasible implies relaxation feasible");
            prop_assert!(ub >= e_bench * (1.0 - 1e-6), "{scenario}: bound {ub} < benchmark {e_bench}");
        }
    }

    // scenario I counts a superset of the reflected links
    #[test]
    fn synchronized_bound_dominates(seed in 0u64..1000, p_dbm in 34.0f64..46.0, gamma_db in 0.0f64..15.0) {
        let s = scene(seed);
        let p_max = 10f64.powf((p_dbm - 30.0) / 10.0);
        let g = 10f64.powf(gamma_db / 10.0);
        let one = bound(&s, &s.channels, Scenario::Synchronized, g, p_max);
        let two = bound(&s, &s.channels, Scenario::Unsynchronized, g, p_max);
        match (one, two) {
            (Some(a), Some(b)) => prop_assert!(a >= b * (1.0 - 1e-6), "{a} < {b}"),
            (None, None) => {}
            other => prop_assert!(false, "scenarios disagree on feasibility: {other:?}"),
        }
    }
}

//! End-to-end: scene -> relaxation -> beamformers, with the reported energies
//! recomputed from explicit target response matrices.

use netisac::detection::{sinr_eval, Scenario};
use netisac::model::{
    build_target_grid, sample_comm_channels, steering_vector, target_response, ArrayConfig, CommParams, Position,
    SensingParams, SystemLayout, TargetGrid,
};
use netisac::optimizer::{solve_proposed, BeamformerSet, DetectionProblem, ProposedOutcome, SolveOptions};

fn scene(n: usize) -> (SystemLayout, SensingParams, CommParams) {
    let layout = SystemLayout::new(
        vec![Position::new(-60.0, 0.0), Position::new(60.0, 0.0), Position::new(0.0, 60.0)],
        vec![Position::new(-30.0, 10.0), Position::new(30.0, 10.0), Position::new(5.0, 30.0)],
        ArrayConfig::new(n, n, 0.5).unwrap(),
    )
    .unwrap();
    let sensing = SensingParams::new(1.0, 3e-10, 1.0, 10f64.powf(-13.2)).unwrap();
    let comm = CommParams::new(10f64.powf(-11.4), 10.0, 3.0, 1e-3).unwrap();
    (layout, sensing, comm)
}

/// `sum over links of ||sqrt(beta) zeta a_r(theta_k) a_t(theta_i)^T w_i||^2`.
fn explicit_energy(
    scenario: Scenario,
    bf: &BeamformerSet,
    grid: &TargetGrid,
    m: usize,
    sensing: &SensingParams,
    array: &ArrayConfig,
) -> f64 {
    let k = bf.len();
    let mut e = 0.0;
    for kk in 0..k {
        for i in 0..k {
            if scenario == Scenario::Unsynchronized && kk != i {
                continue;
            }
            let a_r = steering_vector(grid.angles[m][kk], array.n_rx, array.spacing_ratio);
            let a_t = steering_vector(grid.angles[m][i], array.n_tx, array.spacing_ratio);
            let h = target_response(sensing, array, grid.path_gains[m][(kk, i)], &a_r, &a_t).unwrap();
            e += (h * &bf.vectors[i]).norm_squared();
        }
    }
    e
}

#[test]
fn reports_agree_with_independent_recomputation() {
    let (layout, sensing, comm) = scene(4);
    let grid = build_target_grid(&layout, &sensing, Position::new(0.0, 0.0), 3.0, 3).unwrap();
    let gamma = [10.0; 3];
    let p_max = 10f64.powf(1.2);
    for seed in 0..3u64 {
        let channels = sample_comm_channels(&layout, &comm, seed).unwrap();
        let mut energies = Vec::new();
        for scenario in Scenario::ALL {
            let problem = DetectionProblem {
                scenario,
                channels: &channels,
                grid: &grid,
                array: &layout.array,
                params: &sensing,
                gamma: &gamma,
                p_max,
            };
            let opts = SolveOptions { seed, ..SolveOptions::default() };
            let ProposedOutcome::Solved(rep) = solve_proposed(&problem, &opts).unwrap() else {
                panic!("seed {seed}: unexpectedly infeasible");
            };
            let oracle = (0..grid.len())
                .map(|m| explicit_energy(scenario, &rep.beamformers, &grid, m, &sensing, &layout.array))
                .fold(f64::INFINITY, f64::min);
            assert!((rep.achieved_min_energy / oracle - 1.0).abs() < 1e-10, "{scenario} seed {seed}");
            assert!(rep.achieved_min_energy <= rep.sdr_bound * (1.0 + 1e-6));

            let sinr = sinr_eval(&rep.beamformers, &channels).unwrap();
            assert_eq!(sinr, rep.per_cu_sinr);
            assert!(sinr.iter().all(|s| *s >= 10.0 * (1.0 - 1e-6)), "{sinr:?}");
            assert_eq!(rep.per_bs_power, rep.beamformers.powers());
            assert!(rep.per_bs_power.iter().all(|p| *p <= p_max * (1.0 + 1e-9)));
            energies.push(rep.sdr_bound);
        }
        // the synchronized relaxation has the larger feasible objective
        assert!(energies[0] >= energies[1] * (1.0 - 1e-8));
    }
}

#[test]
fn solve_is_deterministic_in_the_seed() {
    let (layout, sensing, comm) = scene(4);
    let grid = build_target_grid(&layout, &sensing, Position::new(0.0, 0.0), 3.0, 2).unwrap();
    let channels = sample_comm_channels(&layout, &comm, 11).unwrap();
    let gamma = [10.0; 3];
    let problem = DetectionProblem {
        scenario: Scenario::Unsynchronized,
        channels: &channels,
        grid: &grid,
        array: &layout.array,
        params: &sensing,
        gamma: &gamma,
        p_max: 10.0,
    };
    let opts = SolveOptions { seed: 5, n_g: 20, ..SolveOptions::default() };
    let a = solve_proposed(&problem, &opts).unwrap();
    let b = solve_proposed(&problem, &opts).unwrap();
    match (a, b) {
        (ProposedOutcome::Solved(a), ProposedOutcome::Solved(b)) => {
            assert_eq!(a.beamformers, b.beamformers);
            assert_eq!(a.sdr_bound.to_bits(), b.sdr_bound.to_bits());
        }
        _ => panic!("expected solved outcomes"),
    }
}

#[test]
fn unreachable_sinr_is_reported_infeasible() {
    let (layout, sensing, comm) = scene(2);
    let grid = build_target_grid(&layout, &sensing, Position::new(0.0, 0.0), 3.0, 2).unwrap();
    let channels = sample_comm_channels(&layout, &comm, 3).unwrap();
    let gamma = [1e9; 3];
    let problem = DetectionProblem {
        scenario: Scenario::Synchronized,
        channels: &channels,
        grid: &grid,
        array: &layout.array,
        params: &sensing,
        gamma: &gamma,
        p_max: 1.0,
    };
    let out = solve_proposed(&problem, &SolveOptions::default()).unwrap();
    assert!(matches!(out, ProposedOutcome::Infeasible));
}

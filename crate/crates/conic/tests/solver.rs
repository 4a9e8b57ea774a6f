use nalgebra::{Complex, SymmetricEigen};
use netisac_conic::{solve_conic, CMatrix, ConicProgram, LinearFunctional, Sense, SolveStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    (&g + g.adjoint()) * Complex::new(0.5, 0.0)
}

fn lambda_max(a: &CMatrix) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.max()
}

fn trace_bounded(a: &CMatrix, bound: f64) -> ConicProgram {
    let n = a.nrows();
    let mut p = ConicProgram::new(vec![n], 0);
    p.maximize(LinearFunctional::new().with_block(0, a.clone()));
    p.add_constraint(
        LinearFunctional::new().with_block(0, CMatrix::identity(n, n)),
        Sense::Le,
        bound,
    );
    p
}

#[test]
fn max_trace_product_equals_top_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [1usize, 2, 5, 12] {
        let mut a = random_hermitian(n, &mut rng);
        // keep lambda_max positive so the bound is attained at tr(W) = 1
        let shift = 1.0 - SymmetricEigen::new(a.clone()).eigenvalues.min();
        a += CMatrix::identity(n, n) * Complex::new(shift, 0.0);
        let sol = solve_conic(&trace_bounded(&a, 1.0), 1e-9).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let lm = lambda_max(&a);
        assert!(((sol.objective - lm) / lm).abs() < 1e-7, "n={n}: {} vs {lm}", sol.objective);
        assert!(sol.duality_gap <= 1e-8);
    }
}

#[test]
fn contradictory_trace_bounds_are_infeasible() {
    let mut p = ConicProgram::new(vec![3], 0);
    p.maximize(LinearFunctional::new().with_block(0, CMatrix::identity(3, 3)));
    let id = CMatrix::identity(3, 3);
    p.add_constraint(LinearFunctional::new().with_block(0, id.clone()), Sense::Le, 1.0);
    p.add_constraint(LinearFunctional::new().with_block(0, id), Sense::Ge, 2.0);
    let sol = solve_conic(&p, 1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn small_lp_matches_vertex() {
    // max x + 2y  s.t. x + y <= 4, x <= 3, y <= 2  -> (2, 2), value 6
    let mut p = ConicProgram::new(vec![], 2);
    p.maximize(LinearFunctional::new().with_scalar(0, 1.0).with_scalar(1, 2.0));
    p.add_constraint(LinearFunctional::new().with_scalar(0, 1.0).with_scalar(1, 1.0), Sense::Le, 4.0);
    p.add_constraint(LinearFunctional::new().with_scalar(0, 1.0), Sense::Le, 3.0);
    p.add_constraint(LinearFunctional::new().with_scalar(1, 1.0), Sense::Le, 2.0);
    let sol = solve_conic(&p, 1e-10).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 6.0).abs() < 1e-8);
    assert!((sol.scalars[0] - 2.0).abs() < 1e-7 && (sol.scalars[1] - 2.0).abs() < 1e-7);
}

#[test]
fn unbounded_lp_is_flagged() {
    let mut p = ConicProgram::new(vec![], 2);
    p.maximize(LinearFunctional::new().with_scalar(0, 1.0));
    p.add_constraint(LinearFunctional::new().with_scalar(0, 1.0).with_scalar(1, -1.0), Sense::Le, 1.0);
    let sol = solve_conic(&p, 1e-9).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

#[test]
fn equality_constrained_complex_sdp() {
    // min tr(W) s.t. |h^H w|^2 = tr(h h^H W) >= 1 with h complex: optimum 1/|h|^2, W rank one along h.
    let h = nalgebra::DVector::from_vec(vec![Complex::new(1.0, 1.0), Complex::new(0.0, -2.0)]);
    let hh = &h * h.adjoint();
    let mut p = ConicProgram::new(vec![2], 0);
    p.maximize(LinearFunctional::new().with_block(0, -CMatrix::identity(2, 2)));
    p.add_constraint(LinearFunctional::new().with_block(0, hh.clone()), Sense::Ge, 1.0);
    let sol = solve_conic(&p, 1e-10).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let hn = h.norm_squared();
    assert!((sol.objective + 1.0 / hn).abs() < 1e-9);
    let w = &sol.matrices[0];
    let expect = &hh * Complex::new(1.0 / (hn * hn), 0.0);
    assert!((w - expect).norm() < 1e-6);
}

#[test]
fn mixed_block_and_scalar_max_min() {
    // max t s.t. tr(A_m W) >= t for two diagonal A_m, tr(W) <= 1.
    let a1 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]));
    let a2 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex::new(0.0, 0.0), Complex::new(3.0, 0.0)]));
    let mut p = ConicProgram::new(vec![2], 1);
    p.maximize(LinearFunctional::new().with_scalar(0, 1.0));
    for a in [a1, a2] {
        p.add_constraint(LinearFunctional::new().with_block(0, a).with_scalar(0, -1.0), Sense::Ge, 0.0);
    }
    p.add_constraint(LinearFunctional::new().with_block(0, CMatrix::identity(2, 2)), Sense::Le, 1.0);
    let sol = solve_conic(&p, 1e-10).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    // w1 = 3/4, w2 = 1/4 -> t = 3/4
    assert!((sol.objective - 0.75).abs() < 1e-8, "{}", sol.objective);
}

#[test]
fn tiny_coefficient_row_is_not_absorbed_by_its_slack() {
    // 1e-10 p >= 4e-10 with p <= 2 has no solution
    let mut p = ConicProgram::new(vec![], 1);
    p.maximize(LinearFunctional::new().with_scalar(0, 1.0));
    p.add_constraint(LinearFunctional::new().with_scalar(0, 1e-10), Sense::Ge, 4e-10);
    p.add_constraint(LinearFunctional::new().with_scalar(0, 1.0), Sense::Le, 2.0);
    assert_eq!(solve_conic(&p, 1e-9).unwrap().status, SolveStatus::Infeasible);

    // same row with a reachable target: min p = 3
    let mut p = ConicProgram::new(vec![], 1);
    p.maximize(LinearFunctional::new().with_scalar(0, -1.0));
    p.add_constraint(LinearFunctional::new().with_scalar(0, 1e-10), Sense::Ge, 3e-10);
    p.add_constraint(LinearFunctional::new().with_scalar(0, 1.0), Sense::Le, 5.0);
    let sol = solve_conic(&p, 1e-9).unwrap();
    assert!(sol.status.is_optimal());
    assert!((sol.scalars[0] - 3.0).abs() < 1e-7, "{}", sol.scalars[0]);
}

#[test]
fn tiny_optimum_is_relatively_accurate() {
    // max t s.t. t <= 1e-12 p1, t <= 2e-12 p2, p1 + p2 <= 3  ->  p = (2, 1), t = 2e-12
    let mut p = ConicProgram::new(vec![], 3);
    p.maximize(LinearFunctional::new().with_scalar(0, 1.0));
    p.add_constraint(LinearFunctional::new().with_scalar(1, 1e-12).with_scalar(0, -1.0), Sense::Ge, 0.0);
    p.add_constraint(LinearFunctional::new().with_scalar(2, 2e-12).with_scalar(0, -1.0), Sense::Ge, 0.0);
    p.add_constraint(LinearFunctional::new().with_scalar(1, 1.0).with_scalar(2, 1.0), Sense::Le, 3.0);
    let sol = solve_conic(&p, 1e-9).unwrap();
    assert!(sol.status.is_optimal());
    assert!((sol.objective / 2e-12 - 1.0).abs() < 1e-7, "{}", sol.objective);
    assert!((sol.scalars[1] - 2.0).abs() < 1e-6 && (sol.scalars[2] - 1.0).abs() < 1e-6, "{:?}", sol.scalars);
}

#[test]
fn status_optimality_helper() {
    assert!(SolveStatus::Optimal.is_optimal());
    assert!(SolveStatus::OptimalInaccurate.is_optimal());
    assert!(!SolveStatus::NumericalLimit.is_optimal());
    assert!(!SolveStatus::Infeasible.is_optimal());
}

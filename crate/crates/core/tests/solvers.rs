use std::sync::Arc;

use sihg::linalg::{max_abs_diff, norm, Matrix};
use sihg::problem::{BlockGradFn, BlockVector, Lipschitz, MinimaxProblem};
use sihg::rng::SeededRng;
use sihg::solvers::{
    dsihg_run, line3_q, mgda_baseline_run, msihg_gd_run, msihg_run, msihg_run_with, spdhg_bilinear_run,
    ssihg_run, ssihg_run_with,
};
use sihg::zoo::{make_bilinear, make_block_bilinear, make_block_quadratic_game, random_gaussian_matrix, BilinearGame};
use sihg::{Error, InnerSolverConfig, Prox, SolverConfig, SolverState, TraceRow};

fn collect_states(
    run: impl FnOnce(&mut dyn FnMut(&TraceRow, &SolverState)),
) -> Vec<SolverState> {
    let mut states = Vec::new();
    run(&mut |_, s| states.push(s.clone()));
    states
}

fn scalar_pair() -> MinimaxProblem {
    make_block_bilinear(vec![Matrix::identity(1), Matrix::identity(1)])
        .unwrap()
        .with_initial_point(vec![1.0], BlockVector::from_blocks(vec![vec![0.0], vec![0.0]]))
        .unwrap()
}

#[test]
fn ssihg_two_scalar_blocks_hand_unrolled() {
    let problem = scalar_pair();
    let (sigma, tau) = (0.1, 0.1);
    let config = SolverConfig::new(sigma, tau, 2).with_seed(7).with_stride(1);
    let states = collect_states(|obs| {
        ssihg_run_with(&problem, &config, obs).unwrap();
    });

    // same stream the solver draws blocks from
    let mut rng = SeededRng::new(7);
    let (i0, i1) = (rng.index(2), rng.index(2));

    // k = 0: q⁰ = ∇_wφ(w⁰, δ⁰) = 0, so w¹ = w⁰
    let w1 = 1.0;
    let mut d1 = [0.0, 0.0];
    d1[i0] = tau * w1;
    // k = 1: ∇_wφ(w¹, δ¹) = 0.1, ∇_wφ(w¹, δ⁰) = 0, q¹ = 0 − 1·(0.1 − 0) = −0.1
    let g1 = d1[0] + d1[1];
    let q1 = 0.0 - (g1 - 0.0);
    let w2 = w1 - sigma * (g1 + (g1 - q1));
    let mut d2 = d1;
    d2[i1] += tau * w2;

    assert_eq!(states[1].w, vec![w1]);
    assert_eq!(states[1].delta.flat(), &d1);
    assert_eq!(states[1].q, vec![q1]);
    assert!((w2 - 0.97).abs() < 1e-15);
    assert_eq!(states[2].w, vec![w2]);
    assert_eq!(states[2].delta.flat(), &d2);
}

#[test]
fn dsihg_scalar_hand_unrolled() {
    let problem = make_bilinear(Matrix::identity(1), Prox::Zero, Prox::Zero)
        .unwrap()
        .with_initial_point(vec![1.0], BlockVector::from_blocks(vec![vec![0.0]]))
        .unwrap();
    let config = SolverConfig::new(0.1, 0.1, 2).with_stride(1);
    let states = collect_states(|obs| {
        sihg::solvers::dsihg_run_with(&problem, &config, obs).unwrap();
    });
    assert_eq!(states[1].w, vec![1.0]);
    assert!((states[1].delta.flat()[0] - 0.1).abs() < 1e-15);
    // q¹ = ∇_wφ(w⁰, δ⁰) = 0
    assert_eq!(states[1].q, vec![0.0]);
    assert!((states[2].w[0] - 0.98).abs() < 1e-15);
    assert!((states[2].delta.flat()[0] - 0.198).abs() < 1e-15);
}

#[test]
fn ssihg_single_block_equals_dsihg() {
    let problem = make_block_quadratic_game(1, 0.5, 1.0, 0.3, 3).unwrap();
    let config = SolverConfig::new(0.1, 0.1, 200).with_seed(3);
    let a = ssihg_run(&problem, &config).unwrap();
    let b = dsihg_run(&problem, &config).unwrap();
    assert_eq!(a.final_state.w, b.final_state.w);
    assert_eq!(a.final_state.delta, b.final_state.delta);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.dist_w_sq, y.dist_w_sq);
        assert_eq!(x.step_delta_sq, y.step_delta_sq);
    }
}

#[test]
fn dsihg_merges_blocks_into_one() {
    let problem = make_block_quadratic_game(3, 1.0, 0.5, 1.0, 2).unwrap();
    let config = SolverConfig::new(0.1, 0.1, 50);
    let direct = dsihg_run(&problem, &config).unwrap();
    let via_merged = ssihg_run(&problem.merged(), &config).unwrap();
    assert_eq!(direct.final_state.w, via_merged.final_state.w);
    assert_eq!(direct.final_state.delta.flat(), via_merged.final_state.delta.flat());
}

#[test]
fn ssihg_matches_spdhg_on_random_bilinear() {
    let mut rng = SeededRng::new(99);
    for n in [1, 2, 4] {
        let blocks: Vec<Matrix> = (0..n).map(|_| random_gaussian_matrix(4 / n, 4, &mut rng)).collect();
        let game = BilinearGame::new(blocks, Prox::Zero, Prox::Zero).unwrap();
        let problem = game.problem().unwrap();
        let config = SolverConfig::new(0.05, 0.05, 500).with_seed(5).with_stride(1000);
        let mut ws = Vec::new();
        ssihg_run_with(&problem, &config, &mut |_, s| ws.push((s.w.clone(), s.delta.clone()))).unwrap();
        let mut wp = Vec::new();
        sihg::solvers::spdhg_bilinear_run_with(&game, &config, &mut |_, s| {
            wp.push((s.w.clone(), s.delta.clone()))
        })
        .unwrap();
        assert_eq!(ws.len(), wp.len());
        let gap = ws
            .iter()
            .zip(&wp)
            .map(|(a, b)| max_abs_diff(&a.0, &b.0).max(max_abs_diff(a.1.flat(), b.1.flat())))
            .fold(0.0, f64::max);
        assert!(gap <= 1e-12, "n = {n}: gap {gap}");
    }
}

#[test]
fn runs_are_deterministic() {
    let problem = make_block_quadratic_game(4, 1.0, 0.7, 0.5, 2).unwrap();
    let config = SolverConfig::new(0.05, 0.05, 300).with_seed(42).with_stride(7);
    let a = ssihg_run(&problem, &config).unwrap();
    let b = ssihg_run(&problem, &config).unwrap();
    assert_eq!(a.final_state.w, b.final_state.w);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!((x.k, x.residual_sq, x.dist_w_sq, x.dist_delta_sq), (y.k, y.residual_sq, y.dist_w_sq, y.dist_delta_sq));
    }
}

#[test]
fn residual_present_exactly_at_stride_multiples() {
    let problem = make_block_quadratic_game(2, 1.0, 1.0, 1.0, 1).unwrap();
    let config = SolverConfig::new(0.1, 0.1, 35).with_stride(10);
    let trace = ssihg_run(&problem, &config).unwrap();
    assert_eq!(trace.rows.len(), 36);
    for (j, r) in trace.rows.iter().enumerate() {
        assert_eq!(r.k, j);
        assert_eq!(r.residual_sq.is_some(), j % 10 == 0);
        assert!(r.dist_w_sq.is_some());
    }
    assert_eq!(trace.rng_algorithm, "xoshiro256++");
    assert_eq!(trace.seed, config.seed);
}

#[test]
fn stored_q_matches_line3_recomputation() {
    let problem = make_block_quadratic_game(3, 0.4, 1.0, 0.6, 2).unwrap();
    let n = problem.n();
    let config = SolverConfig::new(0.05, 0.05, 60).with_seed(1).with_stride(1);
    let mut worst: f64 = 0.0;
    ssihg_run_with(&problem, &config, &mut |_, s| {
        let prev = problem.grad_w(&s.w_prev, &s.delta_prev).unwrap();
        let cur = problem.grad_w(&s.w, &s.delta).unwrap();
        let mixed = problem.grad_w(&s.w, &s.delta_prev).unwrap();
        worst = worst.max(max_abs_diff(&s.q, &line3_q(n, &prev, &cur, &mixed)));
    })
    .unwrap();
    assert!(worst < 1e-14, "{worst}");
}

#[test]
fn initial_state_has_trivial_history() {
    let problem = make_block_quadratic_game(2, 1.0, 1.0, 1.0, 2).unwrap();
    let config = SolverConfig::new(0.1, 0.1, 0);
    let trace = ssihg_run(&problem, &config).unwrap();
    let s = &trace.final_state;
    assert_eq!(s.k, 0);
    assert_eq!(s.w, s.w_prev);
    assert_eq!(s.delta, s.delta_prev);
    assert_eq!(trace.rows.len(), 1);
}

#[test]
fn box_iterates_stay_feasible() {
    let mut rng = SeededRng::new(8);
    let a = random_gaussian_matrix(3, 3, &mut rng);
    let problem = make_bilinear(a, Prox::Quadratic { lambda: 0.1 }, Prox::Box { radius: 0.2 }).unwrap();
    let config = SolverConfig::new(0.1, 0.3, 200).with_stride(50);
    let mut worst: f64 = 0.0;
    ssihg_run_with(&problem, &config, &mut |_, s| {
        worst = worst.max(s.delta.flat().iter().map(|d| d.abs()).fold(0.0, f64::max));
    })
    .unwrap();
    assert!(worst <= 0.2);
}

#[test]
fn small_steps_move_little() {
    let problem = make_block_quadratic_game(1, 1.0, 2.0, 1.0, 2).unwrap();
    let start = problem.initial_point().clone();
    let sup = norm(&problem.grad_w(&start.w, &start.delta).unwrap());
    for sigma in [1e-2, 1e-4, 1e-6] {
        let config = SolverConfig::new(sigma, sigma, 1);
        let trace = dsihg_run(&problem, &config).unwrap();
        let moved = norm(&sihg::linalg::sub(&trace.final_state.w, &start.w));
        assert!(moved <= sigma * 2.0 * sup * (1.0 + 1e-12));
    }
}

#[test]
fn inner_failure_reports_outer_iteration() {
    // δ-convex coupling with τ|c| > 1: the fixed-point inner loop diverges
    let problem = make_block_quadratic_game(1, 1.0, 1.0, -30.0, 1).unwrap();
    let inner = InnerSolverConfig {
        max_iter: 5,
        ..InnerSolverConfig::default()
    };
    let config = SolverConfig::new(0.1, 0.1, 5).with_inner(inner).with_stride(1000);
    match ssihg_run(&problem, &config) {
        Err(Error::InnerNonConvergence {
            iteration,
            inner_iterations,
            residual,
        }) => {
            assert_eq!(iteration, 0);
            assert_eq!(inner_iterations, 5);
            assert!(residual > 0.0);
        }
        other => panic!("expected inner non-convergence, got {other:?}"),
    }
}

#[test]
fn msihg_combined_direction() {
    // scalar gradients 0.5 (current) and 0.2 (previous) give 2·0.5 − 0.2
    assert_eq!(2.0 * 0.5 - 0.2, 0.8);
}

fn box_scalar(radius: f64) -> MinimaxProblem {
    make_bilinear(Matrix::identity(1), Prox::Zero, Prox::Box { radius })
        .unwrap()
        .with_initial_point(vec![1.0], BlockVector::from_blocks(vec![vec![0.0]]))
        .unwrap()
}

#[test]
fn msihg_single_block_hand_unrolled() {
    let problem = box_scalar(1.0);
    let (sigma, tau) = (0.1, 0.1);
    let config = SolverConfig::new(sigma, tau, 2).with_stride(1);
    let states = collect_states(|obs| {
        msihg_run_with(&problem, &config, obs).unwrap();
    });
    // epoch 1: δ¹ = Π(0 + τ·w⁰); seeded previous gradient ∇_wφ(w⁰, δ⁰) = 0
    let d1 = tau * 1.0;
    let w1 = 1.0 - sigma * (2.0 * d1 - 0.0);
    // epoch 2: previous gradient is ∇_wφ(w⁰, δ¹) = δ¹
    let d2 = d1 + tau * w1;
    let w2 = w1 - sigma * (2.0 * d2 - d1);
    assert!((states[1].w[0] - w1).abs() < 1e-15);
    assert!((states[1].delta.flat()[0] - d1).abs() < 1e-15);
    assert!((states[2].w[0] - w2).abs() < 1e-15);
    assert!((states[2].delta.flat()[0] - d2).abs() < 1e-15);
    assert!((w2 - 0.9504).abs() < 1e-12);
}

#[test]
fn msihg_requires_box_indicators() {
    let problem = make_bilinear(Matrix::identity(2), Prox::Zero, Prox::Zero).unwrap();
    let config = SolverConfig::new(0.1, 0.1, 3);
    assert!(matches!(msihg_run(&problem, &config), Err(Error::Unsupported(_))));
    assert!(matches!(mgda_baseline_run(&problem, &config, 3), Err(Error::Unsupported(_))));
}

fn box_blocks(n: usize, eps: f64) -> MinimaxProblem {
    let mut rng = SeededRng::new(21);
    let blocks: Vec<Matrix> = (0..n).map(|_| random_gaussian_matrix(2, 3, &mut rng)).collect();
    BilinearGame::new(blocks, Prox::Zero, Prox::Box { radius: eps })
        .unwrap()
        .problem()
        .unwrap()
}

#[test]
fn msihg_iterates_stay_in_box() {
    let problem = box_blocks(4, 0.3);
    let config = SolverConfig::new(0.05, 0.5, 100).with_stride(1000);
    let mut worst: f64 = 0.0;
    msihg_run_with(&problem, &config, &mut |_, s| {
        worst = worst.max(s.delta.flat().iter().map(|d| d.abs()).fold(0.0, f64::max));
    })
    .unwrap();
    assert!(worst <= 0.3);
}

#[test]
fn heavy_ball_without_momentum_is_plain() {
    let problem = box_blocks(3, 0.5);
    let config = SolverConfig::new(0.05, 0.1, 40).with_seed(4);
    let a = msihg_run(&problem, &config).unwrap();
    let b = msihg_gd_run(&problem, &config, 0.0).unwrap();
    assert_eq!(a.final_state.w, b.final_state.w);
    assert_eq!(a.final_state.delta, b.final_state.delta);
    assert!(matches!(msihg_gd_run(&problem, &config, 1.0), Err(Error::InvalidConfig(_))));
}

#[test]
fn heavy_ball_constant_direction_closed_form() {
    let d = 0.7;
    let grad_w: BlockGradFn = Arc::new(move |_, _, _| vec![d]);
    let grad_d: BlockGradFn = Arc::new(|_, _, _| vec![0.0]);
    let problem = MinimaxProblem::new(
        1,
        vec![1],
        Prox::Zero,
        vec![Prox::Box { radius: 1.0 }],
        grad_w,
        grad_d,
        Lipschitz::new(0.0, 0.0, 0.0),
    )
    .unwrap();
    let (sigma, beta) = (0.1, 0.9);
    let config = SolverConfig::new(sigma, 0.1, 3);
    let trace = msihg_gd_run(&problem, &config, beta).unwrap();
    let expected = sigma * d * (1.0 + (1.0 + beta) + (1.0 + beta + beta * beta));
    assert!((problem.initial_point().w[0] - trace.final_state.w[0] - expected).abs() < 1e-14);
}

#[test]
fn spdhg_orbit_is_bounded() {
    let game = BilinearGame::new(vec![Matrix::identity(2)], Prox::Zero, Prox::Zero).unwrap();
    let config = SolverConfig::new(0.05, 0.05, 1000).with_stride(1000);
    let mut peak: f64 = 0.0;
    sihg::solvers::spdhg_bilinear_run_with(&game, &config, &mut |_, s| {
        let z = norm(&s.w).hypot(norm(s.delta.flat()));
        peak = peak.max(z);
    })
    .unwrap();
    // start at ‖z⁰‖ = 2
    assert!(peak < 4.0, "{peak}");
}

#[test]
fn spdhg_zero_coupling_decouples() {
    let game = BilinearGame::new(
        vec![Matrix::zeros(1, 1)],
        Prox::Quadratic { lambda: 1.0 },
        Prox::Quadratic { lambda: 2.0 },
    )
    .unwrap();
    let config = SolverConfig::new(0.1, 0.2, 5);
    let trace = spdhg_bilinear_run(&game, &config).unwrap();
    let w = 1.0 / 1.1f64.powi(5);
    let d = 1.0 / 1.4f64.powi(5);
    assert!((trace.final_state.w[0] - w).abs() < 1e-14);
    assert!((trace.final_state.delta.flat()[0] - d).abs() < 1e-14);
}

#[test]
fn mgda_without_ascent_is_descent_at_random_delta() {
    let problem = box_blocks(2, 0.25);
    let config = SolverConfig::new(0.1, 0.1, 30).with_seed(9);
    let trace = mgda_baseline_run(&problem, &config, 0).unwrap();
    assert_eq!(trace.rows.len(), 31);
    let trace = mgda_baseline_run(&problem, &config, 10).unwrap();
    assert!(trace.final_state.delta.flat().iter().all(|d| d.abs() <= 0.25));
}

use sihg::analysis::{saddle_residual_sq, SamplingDomain};
use sihg::linalg::{max_abs_diff, Matrix};
use sihg::nn::{MlpShape, ToyDataset};
use sihg::problem::BlockVector;
use sihg::rng::SeededRng;
use sihg::solvers::ssihg_run;
use sihg::zoo::{
    make_bilinear, make_block_bilinear, make_block_quadratic_game, make_quadratic_coupling, make_quadratic_game,
    make_toy_at, oracle_self_test, random_gaussian_matrix, ProblemFamily, ProblemSpec, ProxSpec,
};
use sihg::{Error, Prox, SolverConfig};

#[test]
fn every_family_passes_the_oracle_self_test() {
    let mut rng = SeededRng::new(1);
    let sym = |m: Matrix| Matrix::from_fn(m.rows, m.cols, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
    let problems = vec![
        make_bilinear(random_gaussian_matrix(3, 2, &mut rng), Prox::Quadratic { lambda: 0.3 }, Prox::Box { radius: 0.5 })
            .unwrap(),
        make_quadratic_game(-0.1, 1.0, 0.5, 2).unwrap(),
        make_block_bilinear(vec![random_gaussian_matrix(2, 3, &mut rng), random_gaussian_matrix(1, 3, &mut rng)]).unwrap(),
        make_block_quadratic_game(3, 1.0, 0.5, 2.0, 2).unwrap(),
        make_quadratic_coupling(
            sym(random_gaussian_matrix(2, 2, &mut rng)),
            vec![(random_gaussian_matrix(2, 2, &mut rng), sym(random_gaussian_matrix(2, 2, &mut rng)))],
        )
        .unwrap(),
        make_toy_at(&ToyDataset::blobs(20, 3), MlpShape::toy(8), 0.3, 4, 0).unwrap(),
    ];
    for p in &problems {
        let rep = oracle_self_test(p, &SamplingDomain::symmetric(1.0), 20, 7).unwrap();
        assert!(rep.max_rel_error < 1e-6, "{rep:?}");
        if let Some(r) = rep.known_solution_residual {
            assert!(r <= 1e-18);
        }
    }
}

#[test]
fn quadratic_game_degenerates_to_identity_bilinear() {
    let q = make_quadratic_game(0.0, 1.0, 0.0, 2).unwrap();
    let b = make_bilinear(Matrix::identity(2), Prox::Zero, Prox::Zero).unwrap();
    let mut rng = SeededRng::new(2);
    for _ in 0..20 {
        let w: Vec<f64> = (0..2).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let d = BlockVector::from_blocks(vec![(0..2).map(|_| rng.uniform(-3.0, 3.0)).collect()]);
        assert_eq!(q.grad_w(&w, &d).unwrap(), b.grad_w(&w, &d).unwrap());
        assert_eq!(q.grad_delta(&w, &d).unwrap(), b.grad_delta(&w, &d).unwrap());
    }
    assert_eq!(q.lipschitz().l12, 1.0);
    assert!((b.lipschitz().l12 - 1.0).abs() < 1e-12);
}

#[test]
fn single_block_bilinear_matches_plain_bilinear() {
    let mut rng = SeededRng::new(3);
    let a = random_gaussian_matrix(3, 3, &mut rng);
    let p1 = make_block_bilinear(vec![a.clone()]).unwrap();
    let p2 = make_bilinear(a, Prox::Zero, Prox::Zero).unwrap();
    let config = SolverConfig::new(0.1, 0.1, 100).with_seed(4);
    let t1 = ssihg_run(&p1, &config).unwrap();
    let t2 = ssihg_run(&p2, &config).unwrap();
    assert_eq!(t1.final_state.w, t2.final_state.w);
    assert_eq!(t1.final_state.delta, t2.final_state.delta);
}

#[test]
fn block_bilinear_rejects_mismatched_columns() {
    let r = make_block_bilinear(vec![Matrix::zeros(2, 3), Matrix::zeros(2, 2)]);
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
}

#[test]
fn bilinear_constants() {
    let mut rng = SeededRng::new(5);
    let a = random_gaussian_matrix(4, 3, &mut rng);
    let p = make_bilinear(a.clone(), Prox::Zero, Prox::Zero).unwrap();
    let l = p.lipschitz();
    assert_eq!((l.l11, l.l22), (0.0, 0.0));
    // ‖A‖₂ dominates ‖Ax‖ for unit x
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let ax = a.matvec(&x);
        let ratio = sihg::linalg::norm(&ax) / sihg::linalg::norm(&x);
        assert!(ratio <= l.l12 + 1e-9);
    }
}

#[test]
fn box_bilinear_boundary_points() {
    let eps = 0.2;
    let a = Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]);
    let p = make_bilinear(a, Prox::Zero, Prox::Box { radius: eps }).unwrap();
    // δ₂ on the boundary with (Aw)₂ = 0 in its normal cone, Aᵀδ = 0
    let r = saddle_residual_sq(&p, &[0.0, 5.0], &BlockVector::from_blocks(vec![vec![0.0, eps]])).unwrap();
    assert_eq!(r.total_sq, 0.0);
    // δ₁ = ε with (Aw)₁ > 0: the ascent direction points outward, so the
    // δ-part vanishes; the w-part is ‖Aᵀδ‖² = ε²
    let r = saddle_residual_sq(&p, &[0.7, 0.0], &BlockVector::from_blocks(vec![vec![eps, 0.0]])).unwrap();
    assert_eq!(r.delta_part_sq, 0.0);
    assert!((r.w_part_sq - eps * eps).abs() < 1e-15);
}

#[test]
fn toy_at_partition_and_zero_perturbation() {
    let data = ToyDataset::blobs(100, 0);
    let p = make_toy_at(&data, MlpShape::default(), 0.3, 10, 1).unwrap();
    assert_eq!(p.n(), 10);
    assert!(p.block_dims().iter().all(|&d| d == 40));
    assert!((0..10).all(|i| p.prox_g(i).box_radius() == Some(0.3)));
    let w = p.initial_point().w.clone();
    let zero = BlockVector::zeros(p.block_dims());
    let params = sihg::nn::MlpParams::from_flat(MlpShape::default(), w.clone()).unwrap();
    let natural = sihg::nn::loss_and_grads(&params, &data.inputs, &data.labels).unwrap().loss;
    assert!((p.value(&w, &zero).unwrap() - natural).abs() < 1e-12);
    let l = p.lipschitz();
    assert!(l.l11 > 0.0 && l.l12 > 0.0 && l.l22 > 0.0);
}

#[test]
fn spec_builds_and_applies_initial_point() {
    let spec = ProblemSpec {
        family: ProblemFamily::Bilinear {
            a: Matrix::identity(1),
            f: ProxSpec::Zero,
            g: ProxSpec::Box { radius: 0.5 },
        },
        initial: Some(vec![1.0, 0.25]),
        certified: None,
    };
    let p = spec.build().unwrap();
    assert_eq!(p.initial_point().w, vec![1.0]);
    assert_eq!(p.initial_point().delta.flat(), &[0.25]);
    let bad = ProblemSpec {
        initial: Some(vec![1.0, 0.75]),
        ..spec.clone()
    };
    assert!(bad.build().is_err());
    let short = ProblemSpec {
        initial: Some(vec![1.0]),
        ..spec
    };
    assert!(matches!(short.build(), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn default_start_is_clipped_ones() {
    let p = make_bilinear(Matrix::identity(2), Prox::Zero, Prox::Box { radius: 0.3 }).unwrap();
    assert_eq!(p.initial_point().w, vec![1.0, 1.0]);
    assert_eq!(p.initial_point().delta.flat(), &[0.3, 0.3]);
    let q = make_quadratic_game(1.0, 1.0, 1.0, 2).unwrap();
    assert!(max_abs_diff(q.initial_point().delta.flat(), &[1.0, 1.0]) == 0.0);
}

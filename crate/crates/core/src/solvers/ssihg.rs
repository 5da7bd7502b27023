//! Stochastic semi-implicit hybrid gradient and its deterministic (`n = 1`)
//! specialization.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::all_finite;
use crate::problem::MinimaxProblem;

use super::trace::{Algorithm, Recorder, SolverState, Trace};
use super::{block_ascent, Observer};

/// `qᵏ = ∇_wφ(wᵏ⁻¹, δᵏ⁻¹) − (n−1){∇_wφ(wᵏ, δᵏ) − ∇_wφ(wᵏ, δᵏ⁻¹)}`.
pub fn line3_q(n: usize, grad_prev: &[f64], grad_cur: &[f64], grad_mixed: &[f64]) -> Vec<f64> {
    let m = (n - 1) as f64;
    grad_prev
        .iter()
        .zip(grad_cur.iter().zip(grad_mixed))
        .map(|(p, (c, x))| p - m * (c - x))
        .collect()
}

pub fn ssihg_run(problem: &MinimaxProblem, config: &SolverConfig) -> Result<Trace> {
    ssihg_run_with(problem, config, &mut |_, _| {})
}

pub fn ssihg_run_with(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    observer: Observer<'_>,
) -> Result<Trace> {
    run_hybrid(problem, config, Algorithm::Ssihg, true, observer)
}

/// The deterministic method: all blocks merged into one, updated every step.
pub fn dsihg_run(problem: &MinimaxProblem, config: &SolverConfig) -> Result<Trace> {
    dsihg_run_with(problem, config, &mut |_, _| {})
}

pub fn dsihg_run_with(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    observer: Observer<'_>,
) -> Result<Trace> {
    let merged = problem.merged();
    run_hybrid(&merged, config, Algorithm::Dsihg, false, observer)
}

fn block_grads(problem: &MinimaxProblem, state: &SolverState) -> Result<Vec<Vec<f64>>> {
    (0..problem.n())
        .map(|i| problem.grad_w_block(i, &state.w, state.delta.block(i)))
        .collect()
}

fn sum(blocks: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for b in blocks {
        for (o, v) in out.iter_mut().zip(b) {
            *o += v;
        }
    }
    out
}

fn run_hybrid(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    algorithm: Algorithm,
    hat: bool,
    observer: Observer<'_>,
) -> Result<Trace> {
    config.validate()?;
    let n = problem.n();
    let dim = problem.dim_w();
    let (sigma, theta) = (config.sigma, config.theta);

    let mut state = SolverState::initial(problem, config.seed);
    let mut recorder = Recorder::new(config, hat);

    // ∇_wφ(wᵏ, δᵏ); with (w⁻¹, δ⁻¹) = (w⁰, δ⁰) the first q is the same vector.
    let mut grad_cur = sum(&block_grads(problem, &state)?, dim);
    state.q = grad_cur.clone();
    recorder.record(problem, config, &state, observer)?;

    for k in 0..config.iterations {
        let z: Vec<f64> = state
            .w
            .iter()
            .zip(grad_cur.iter().zip(&state.q))
            .map(|(w, (g, q))| w - sigma * (g + theta * (g - q)))
            .collect();
        let w_next = problem.prox_f().apply(&z, sigma)?;
        if !all_finite(&w_next) {
            return Err(Error::NonFinite("w update"));
        }

        let i = state.rng.index(n);
        let delta_i = block_ascent(
            problem,
            config,
            i,
            &w_next,
            state.delta.block(i),
            &mut state.noise_rng,
            k,
        )?;
        if !all_finite(&delta_i) {
            return Err(Error::NonFinite("delta update"));
        }

        let mut delta_next = state.delta.clone();
        delta_next.block_mut(i).copy_from_slice(&delta_i);
        state.w_prev = std::mem::replace(&mut state.w, w_next);
        state.delta_prev = std::mem::replace(&mut state.delta, delta_next);
        state.k = k + 1;

        let mut blocks = block_grads(problem, &state)?;
        let grad_new = sum(&blocks, dim);
        let q = if n > 1 {
            blocks[i] = problem.grad_w_block(i, &state.w, state.delta_prev.block(i))?;
            let grad_mixed = sum(&blocks, dim);
            line3_q(n, &grad_cur, &grad_new, &grad_mixed)
        } else {
            grad_cur.clone()
        };
        state.q = q;
        grad_cur = grad_new;

        recorder.record(problem, config, &state, observer)?;
    }

    Ok(Trace {
        algorithm,
        rows: recorder.rows,
        final_state: state,
        config: *config,
        seed: config.seed,
        rng_algorithm: crate::rng::SeededRng::ALGORITHM,
    })
}

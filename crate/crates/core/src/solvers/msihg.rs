//! Multi-step semi-implicit hybrid gradient: one shuffled pass over the
//! blocks per epoch, each block ascent followed by an extrapolated `w` step.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::all_finite;
use crate::problem::MinimaxProblem;

use super::trace::{Algorithm, Recorder, SolverState, Trace};
use super::{block_ascent, require_box_blocks, Observer};

pub fn msihg_run(problem: &MinimaxProblem, config: &SolverConfig) -> Result<Trace> {
    msihg_run_with(problem, config, &mut |_, _| {})
}

pub fn msihg_run_with(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    observer: Observer<'_>,
) -> Result<Trace> {
    run_epochs(problem, config, None, observer)
}

/// Heavy-ball variant: `v ← βv + d`, `w ← w − σv`. With `β = 0` the iterates
/// coincide with [`msihg_run`].
pub fn msihg_gd_run(problem: &MinimaxProblem, config: &SolverConfig, momentum: f64) -> Result<Trace> {
    msihg_gd_run_with(problem, config, momentum, &mut |_, _| {})
}

pub fn msihg_gd_run_with(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    momentum: f64,
    observer: Observer<'_>,
) -> Result<Trace> {
    if !(0.0..1.0).contains(&momentum) {
        return Err(Error::InvalidConfig(format!("momentum must be in [0, 1), got {momentum}")));
    }
    run_epochs(problem, config, Some(momentum), observer)
}

fn run_epochs(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    momentum: Option<f64>,
    observer: Observer<'_>,
) -> Result<Trace> {
    config.validate()?;
    require_box_blocks(problem)?;
    let n = problem.n();
    let sigma = config.sigma;

    let mut state = SolverState::initial(problem, config.seed);
    let mut recorder = Recorder::new(config, false);
    let mut velocity = vec![0.0; problem.dim_w()];
    // Previous block gradient, carried across epochs.
    let mut grad_prev: Option<Vec<f64>> = None;
    recorder.record(problem, config, &state, observer)?;

    let mut step = 0;
    for epoch in 0..config.iterations {
        let epoch_start_w = state.w.clone();
        let epoch_start_delta = state.delta.clone();
        let order = state.rng.permutation(n);
        for &i in &order {
            let prev = match grad_prev.take() {
                Some(g) => g,
                None => problem.grad_w_block(i, &state.w, state.delta.block(i))?,
            };
            let delta_i = block_ascent(
                problem,
                config,
                i,
                &state.w,
                state.delta.block(i),
                &mut state.noise_rng,
                step,
            )?;
            if !all_finite(&delta_i) {
                return Err(Error::NonFinite("delta update"));
            }
            let grad = problem.grad_w_block(i, &state.w, &delta_i)?;
            let dir: Vec<f64> = grad.iter().zip(&prev).map(|(g, p)| 2.0 * g - p).collect();
            let z: Vec<f64> = match momentum {
                None => state.w.iter().zip(&dir).map(|(w, d)| w - sigma * d).collect(),
                Some(beta) => {
                    for (v, d) in velocity.iter_mut().zip(&dir) {
                        *v = beta * *v + d;
                    }
                    state.w.iter().zip(&velocity).map(|(w, v)| w - sigma * v).collect()
                }
            };
            let w_next = problem.prox_f().apply(&z, sigma)?;
            if !all_finite(&w_next) {
                return Err(Error::NonFinite("w update"));
            }
            state.w = w_next;
            state.delta.block_mut(i).copy_from_slice(&delta_i);
            grad_prev = Some(grad);
            step += 1;
        }
        state.w_prev = epoch_start_w;
        state.delta_prev = epoch_start_delta;
        state.q = grad_prev.clone().unwrap_or_default();
        state.k = epoch + 1;
        recorder.record(problem, config, &state, observer)?;
    }

    Ok(Trace {
        algorithm: if momentum.is_some() { Algorithm::MsihgGd } else { Algorithm::Msihg },
        rows: recorder.rows,
        final_state: state,
        config: *config,
        seed: config.seed,
        rng_algorithm: crate::rng::SeededRng::ALGORITHM,
    })
}

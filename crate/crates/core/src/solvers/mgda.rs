//! Multi-step gradient descent-ascent: fresh random `δ` every iteration, a
//! fixed number of projected sign-ascent steps, then one descent step on `w`.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::implicit::{pgd_step_size, sign0};
use crate::linalg::all_finite;
use crate::problem::MinimaxProblem;

use super::trace::{Algorithm, Recorder, Trace, SolverState};
use super::{require_box_blocks, Observer};

pub fn mgda_baseline_run(problem: &MinimaxProblem, config: &SolverConfig, inner_steps: usize) -> Result<Trace> {
    mgda_baseline_run_with(problem, config, inner_steps, &mut |_, _| {})
}

pub fn mgda_baseline_run_with(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    inner_steps: usize,
    observer: Observer<'_>,
) -> Result<Trace> {
    config.validate()?;
    let radii = require_box_blocks(problem)?;
    let sigma = config.sigma;

    let mut state = SolverState::initial(problem, config.seed);
    let mut recorder = Recorder::new(config, false);
    recorder.record(problem, config, &state, observer)?;

    for k in 0..config.iterations {
        let mut delta = state.delta.clone();
        for (i, &eps) in radii.iter().enumerate() {
            for d in delta.block_mut(i) {
                *d = state.noise_rng.uniform(-eps, eps);
            }
            if inner_steps > 0 {
                let eta = pgd_step_size(eps, inner_steps);
                for _ in 0..inner_steps {
                    let g = problem.grad_delta_block(i, &state.w, delta.block(i))?;
                    for (d, gj) in delta.block_mut(i).iter_mut().zip(&g) {
                        *d = (*d + eta * sign0(*gj)).clamp(-eps, eps);
                    }
                }
            }
        }
        let grad = problem.grad_w(&state.w, &delta)?;
        let z: Vec<f64> = state.w.iter().zip(&grad).map(|(w, g)| w - sigma * g).collect();
        let w_next = problem.prox_f().apply(&z, sigma)?;
        if !all_finite(&w_next) {
            return Err(Error::NonFinite("w update"));
        }
        state.w_prev = std::mem::replace(&mut state.w, w_next);
        state.delta_prev = std::mem::replace(&mut state.delta, delta);
        state.q = grad;
        state.k = k + 1;
        recorder.record(problem, config, &state, observer)?;
    }

    Ok(Trace {
        algorithm: Algorithm::Mgda,
        rows: recorder.rows,
        final_state: state,
        config: *config,
        seed: config.seed,
        rng_algorithm: crate::rng::SeededRng::ALGORITHM,
    })
}

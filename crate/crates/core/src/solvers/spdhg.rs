//! Stochastic primal-dual hybrid gradient for bilinear couplings, written
//! with explicit dual updates and an incrementally maintained `Aᵀδ`.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::all_finite;
use crate::zoo::BilinearGame;

use super::trace::{Algorithm, Recorder, SolverState, Trace};
use super::Observer;

pub fn spdhg_bilinear_run(game: &BilinearGame, config: &SolverConfig) -> Result<Trace> {
    spdhg_bilinear_run_with(game, config, &mut |_, _| {})
}

pub fn spdhg_bilinear_run_with(
    game: &BilinearGame,
    config: &SolverConfig,
    observer: Observer<'_>,
) -> Result<Trace> {
    config.validate()?;
    let problem = game.problem()?;
    let n = problem.n();
    let (sigma, tau) = (config.sigma, config.tau);
    let step_scale = config.theta * n as f64;

    let mut state = SolverState::initial(&problem, config.seed);
    let mut recorder = Recorder::new(config, true);

    // z = Σᵢ Aᵢᵀδᵢ and its extrapolation
    let mut z = vec![0.0; problem.dim_w()];
    for (i, a) in game.blocks.iter().enumerate() {
        for (acc, v) in z.iter_mut().zip(a.tmatvec(state.delta.block(i))) {
            *acc += v;
        }
    }
    let mut z_bar = z.clone();
    state.q = z.clone();
    recorder.record(&problem, config, &state, observer)?;

    for k in 0..config.iterations {
        let primal: Vec<f64> = state.w.iter().zip(&z_bar).map(|(w, g)| w - sigma * g).collect();
        let w_next = game.prox_f.apply(&primal, sigma)?;

        let i = state.rng.index(n);
        let a = &game.blocks[i];
        let aw = a.matvec(&w_next);
        let dual: Vec<f64> = state
            .delta
            .block(i)
            .iter()
            .zip(&aw)
            .map(|(d, v)| d + tau * v)
            .collect();
        let delta_i = game.prox_g[i].apply(&dual, tau)?;
        if !all_finite(&w_next) || !all_finite(&delta_i) {
            return Err(Error::NonFinite("spdhg update"));
        }

        let change: Vec<f64> = delta_i.iter().zip(state.delta.block(i)).map(|(a, b)| a - b).collect();
        let dz = a.tmatvec(&change);
        for ((zj, zb), d) in z.iter_mut().zip(z_bar.iter_mut()).zip(&dz) {
            *zj += d;
            *zb = *zj + step_scale * d;
        }

        let mut delta_next = state.delta.clone();
        delta_next.block_mut(i).copy_from_slice(&delta_i);
        state.w_prev = std::mem::replace(&mut state.w, w_next);
        state.delta_prev = std::mem::replace(&mut state.delta, delta_next);
        state.q = z.clone();
        state.k = k + 1;
        recorder.record(&problem, config, &state, observer)?;
    }

    Ok(Trace {
        algorithm: Algorithm::Spdhg,
        rows: recorder.rows,
        final_state: state,
        config: *config,
        seed: config.seed,
        rng_algorithm: crate::rng::SeededRng::ALGORITHM,
    })
}

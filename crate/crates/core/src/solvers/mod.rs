//! The semi-implicit hybrid gradient family and reference baselines.
//!
//! Every run is single-threaded, owns its [`SolverState`], and returns a
//! [`Trace`]. An optional observer sees every recorded row together with the
//! state it was computed from.

mod mgda;
mod msihg;
mod spdhg;
mod ssihg;
mod trace;

pub use mgda::{mgda_baseline_run, mgda_baseline_run_with};
pub use msihg::{msihg_gd_run, msihg_gd_run_with, msihg_run, msihg_run_with};
pub use spdhg::{spdhg_bilinear_run, spdhg_bilinear_run_with};
pub use ssihg::{dsihg_run, dsihg_run_with, line3_q, ssihg_run, ssihg_run_with};
pub use trace::{Algorithm, SolverState, Trace, TraceRow};

use crate::config::{DeltaStep, SolverConfig};
use crate::error::{Error, Result};
use crate::implicit::{pgd_surrogate_step, solve_block};
use crate::problem::MinimaxProblem;
use crate::rng::SeededRng;

/// Observer callback: `(row, state)`.
pub type Observer<'a> = &'a mut dyn FnMut(&TraceRow, &SolverState);

/// Ascent step on block `i` at `w` from `delta_i`, as configured.
pub(crate) fn block_ascent(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    i: usize,
    w: &[f64],
    delta_i: &[f64],
    noise: &mut SeededRng,
    iteration: usize,
) -> Result<Vec<f64>> {
    match config.delta_step {
        DeltaStep::Implicit => solve_block(problem, i, w, delta_i, config.tau, &config.inner)
            .map(|r| r.delta_plus)
            .map_err(|e| match e {
                Error::InnerNonConvergence {
                    inner_iterations,
                    residual,
                    ..
                } => Error::InnerNonConvergence {
                    iteration,
                    inner_iterations,
                    residual,
                },
                other => other,
            }),
        DeltaStep::Surrogate { steps, eta } => {
            let eps = problem.prox_g(i).box_radius().ok_or_else(|| {
                Error::Unsupported("surrogate delta step requires box-indicator g_i".into())
            })?;
            let mut failure = None;
            let mut grad = |u: &[f64]| match problem.grad_delta_block(i, w, u) {
                Ok(g) => g,
                Err(e) => {
                    failure = Some(e);
                    vec![0.0; u.len()]
                }
            };
            let out = pgd_surrogate_step(&mut grad, delta_i, eps, config.tau, steps, eta, noise)?;
            match failure {
                Some(e) => Err(e),
                None => Ok(out),
            }
        }
    }
}

pub(crate) fn require_box_blocks(problem: &MinimaxProblem) -> Result<Vec<f64>> {
    (0..problem.n())
        .map(|i| {
            problem.prox_g(i).box_radius().ok_or_else(|| {
                Error::Unsupported(format!("block {i}: g_i must be a box indicator"))
            })
        })
        .collect()
}

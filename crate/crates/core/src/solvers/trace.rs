use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{hat_delta, saddle_residual_sq};
use crate::config::SolverConfig;
use crate::error::Result;
use crate::linalg::dist_sq;
use crate::problem::{BlockVector, MinimaxProblem};
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ssihg,
    Dsihg,
    Msihg,
    MsihgGd,
    Spdhg,
    Mgda,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ssihg => "ssihg",
            Algorithm::Dsihg => "dsihg",
            Algorithm::Msihg => "msihg",
            Algorithm::MsihgGd => "msihg_gd",
            Algorithm::Spdhg => "spdhg",
            Algorithm::Mgda => "mgda",
        }
    }
}

/// Iterate pair with one step of history.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub w: Vec<f64>,
    pub w_prev: Vec<f64>,
    pub delta: BlockVector,
    pub delta_prev: BlockVector,
    /// Extrapolation term for the next `w` step (for the hybrid gradient
    /// methods, the extrapolated `q` built from the two stored iterates).
    pub q: Vec<f64>,
    pub k: usize,
    /// Block draws and shuffles.
    pub rng: SeededRng,
    /// Random perturbations (surrogate start, baseline re-initialization).
    pub noise_rng: SeededRng,
}

impl SolverState {
    pub fn initial(problem: &MinimaxProblem, seed: u64) -> Self {
        let p = problem.initial_point();
        Self {
            w: p.w.clone(),
            w_prev: p.w.clone(),
            delta: p.delta.clone(),
            delta_prev: p.delta.clone(),
            q: vec![0.0; problem.dim_w()],
            k: 0,
            rng: SeededRng::new(seed),
            noise_rng: SeededRng::new(derive_seed(seed, NOISE_STREAM)),
        }
    }
}

pub(crate) const NOISE_STREAM: u64 = 0x6e6f697365;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    /// `‖F‖²` at the point the convergence result is stated for: `(wᵏ, δ̂ᵏ)`
    /// for the stochastic method, `(wᵏ, δᵏ)` otherwise.
    pub residual_sq: Option<f64>,
    /// `‖F(wᵏ, δᵏ)‖²`
    pub residual_sq_iterate: Option<f64>,
    pub dist_w_sq: Option<f64>,
    pub dist_delta_sq: Option<f64>,
    /// `‖wᵏ − wᵏ⁻¹‖²`
    pub step_w_sq: f64,
    /// `‖δᵏ − δᵏ⁻¹‖²`
    pub step_delta_sq: f64,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub algorithm: Algorithm,
    pub rows: Vec<TraceRow>,
    pub final_state: SolverState,
    pub config: SolverConfig,
    pub seed: u64,
    pub rng_algorithm: &'static str,
}

impl Trace {
    pub fn residual_points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().filter_map(|r| r.residual_sq.map(|v| (r.k, v)))
    }

    pub fn dist_points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows.iter().filter_map(|r| match (r.dist_w_sq, r.dist_delta_sq) {
            (Some(a), Some(b)) => Some((r.k, a + b)),
            _ => None,
        })
    }
}

/// Builds rows; owns the timer.
pub(crate) struct Recorder {
    start: Instant,
    stride: usize,
    hat: bool,
    pub rows: Vec<TraceRow>,
}

impl Recorder {
    /// `hat`: measure the headline residual at `(wᵏ, δ̂ᵏ)` rather than at
    /// the iterate.
    pub fn new(config: &SolverConfig, hat: bool) -> Self {
        Self {
            start: Instant::now(),
            stride: config.metric_stride,
            hat,
            rows: Vec::new(),
        }
    }

    pub fn record(
        &mut self,
        problem: &MinimaxProblem,
        config: &SolverConfig,
        state: &SolverState,
        observer: &mut dyn FnMut(&TraceRow, &SolverState),
    ) -> Result<()> {
        let (residual_sq, residual_sq_iterate) = if state.k.is_multiple_of(self.stride) {
            let it = saddle_residual_sq(problem, &state.w, &state.delta)?.total_sq;
            let head = if self.hat {
                let dh = hat_delta(problem, &state.w, &state.delta_prev, config.tau, &config.inner)?;
                saddle_residual_sq(problem, &state.w, &dh)?.total_sq
            } else {
                it
            };
            (Some(head), Some(it))
        } else {
            (None, None)
        };
        let (dist_w_sq, dist_delta_sq) = match problem.known_solution() {
            Some(s) => (
                Some(dist_sq(&state.w, &s.w)),
                Some(dist_sq(state.delta.flat(), s.delta.flat())),
            ),
            None => (None, None),
        };
        let row = TraceRow {
            k: state.k,
            residual_sq,
            residual_sq_iterate,
            dist_w_sq,
            dist_delta_sq,
            step_w_sq: dist_sq(&state.w, &state.w_prev),
            step_delta_sq: dist_sq(state.delta.flat(), state.delta_prev.flat()),
            elapsed_ns: self.start.elapsed().as_nanos() as u64,
        };
        observer(&row, state);
        self.rows.push(row);
        Ok(())
    }
}

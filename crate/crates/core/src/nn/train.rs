use serde::{Deserialize, Serialize};

use super::attack::{evaluate, AttackConfig};
use super::data::ToyDataset;
use super::mlp::{MlpParams, MlpShape};
use crate::config::{DeltaStep, SolverConfig};
use crate::error::{Error, Result};
use crate::implicit::{pgd_step_size, sign0};
use crate::problem::{BlockVector, MinimaxProblem};
use crate::rng::{derive_seed, SeededRng};
use crate::solvers::{msihg_gd_run_with, msihg_run_with, SolverState, TraceRow};
use crate::zoo::make_toy_at;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMethod {
    Msihg,
    MsihgGd,
    PgdAt,
    Natural,
}

impl TrainMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TrainMethod::Msihg => "msihg",
            TrainMethod::MsihgGd => "msihg_gd",
            TrainMethod::PgdAt => "pgd_at",
            TrainMethod::Natural => "natural",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Step on `w` for each block objective `φᵢ = (1/n)·batch loss`.
    pub sigma: f64,
    /// Heavy-ball coefficient for `msihg_gd`, `pgd_at` and `natural`.
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Half-width of the surrogate's trust box around the stored `δ`.
    pub tau: f64,
    /// Sign steps per surrogate call.
    pub steps: usize,
    /// Surrogate step size, `2.5ε/T` when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Inner ascent steps of the PGD-AT baseline.
    #[serde(default = "default_pgd_steps")]
    pub pgd_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init_seed: u64,
    /// Attack used for the learning curve's robust accuracy.
    #[serde(default)]
    pub eval_attack: Option<AttackConfig>,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
}

fn default_momentum() -> f64 {
    0.9
}
fn default_batches() -> usize {
    10
}
fn default_pgd_steps() -> usize {
    10
}
fn default_eval_every() -> usize {
    1
}

impl TrainConfig {
    /// Surrogate ratios `τ = ε/2`, `T = 5`.
    pub fn toy(eps: f64, epochs: usize, sigma: f64) -> Self {
        Self {
            epochs,
            sigma,
            momentum: default_momentum(),
            batches: default_batches(),
            tau: eps / 2.0,
            steps: 5,
            eta: None,
            pgd_steps: default_pgd_steps(),
            seed: 0,
            init_seed: 0,
            eval_attack: None,
            eval_every: default_eval_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Clean training loss `Σᵢ φᵢ(w, 0)`.
    pub loss: f64,
    pub natural_acc: Option<f64>,
    pub robust_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub curve: Vec<EpochRecord>,
    /// Perturbations stored at the end (hybrid gradient methods only).
    pub final_delta: Option<BlockVector>,
    /// Perturbations stored after each epoch (hybrid gradient methods only).
    pub delta_history: Vec<BlockVector>,
    /// `max(‖δ‖_∞ − ε)` over every training-time perturbation.
    pub max_box_violation: f64,
    /// Largest signed distance of any perturbation coordinate outside its
    /// interval `[δᵏ − τ, δᵏ + τ] ∩ [−ε, ε]` (hybrid methods).
    pub max_anchor_violation: f64,
}

struct Curve<'a> {
    data: &'a ToyDataset,
    shape: MlpShape,
    config: &'a TrainConfig,
    records: Vec<EpochRecord>,
}

impl Curve<'_> {
    fn push(&mut self, problem: &MinimaxProblem, epoch: usize, w: &[f64]) -> Result<()> {
        let zero = BlockVector::zeros(problem.block_dims());
        let loss = problem.value(w, &zero).unwrap_or(f64::NAN);
        let due = epoch.is_multiple_of(self.config.eval_every.max(1)) || epoch == self.config.epochs;
        let (natural_acc, robust_acc) = if due {
            let params = MlpParams::from_flat(self.shape.clone(), w.to_vec())?;
            match &self.config.eval_attack {
                Some(a) => {
                    let r = evaluate(&params, self.data, a)?;
                    (Some(r.natural_acc), Some(r.robust_acc))
                }
                None => {
                    let r = evaluate(&params, self.data, &AttackConfig::new(0.0, 0, 0))?;
                    (Some(r.natural_acc), None)
                }
            }
        } else {
            (None, None)
        };
        self.records.push(EpochRecord {
            epoch,
            loss,
            natural_acc,
            robust_acc,
        });
        Ok(())
    }
}

/// Trains the toy network by the chosen method on `data` with perturbation
/// radius `eps`.
pub fn at_train(
    method: TrainMethod,
    data: &ToyDataset,
    shape: &MlpShape,
    eps: f64,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if !(0.0..1.0).contains(&config.momentum) {
        return Err(Error::InvalidConfig(format!(
            "momentum must be in [0, 1), got {}",
            config.momentum
        )));
    }
    let problem = make_toy_at(data, shape.clone(), eps, config.batches, config.init_seed)?;
    let mut curve = Curve {
        data,
        shape: shape.clone(),
        config,
        records: Vec::new(),
    };
    match method {
        TrainMethod::Msihg | TrainMethod::MsihgGd => train_hybrid(method, &problem, eps, config, &mut curve),
        TrainMethod::PgdAt | TrainMethod::Natural => train_descent(method, &problem, eps, config, &mut curve),
    }
}

fn train_hybrid(
    method: TrainMethod,
    problem: &MinimaxProblem,
    eps: f64,
    config: &TrainConfig,
    curve: &mut Curve<'_>,
) -> Result<TrainOutcome> {
    let eta = config.eta.unwrap_or_else(|| pgd_step_size(eps, config.steps));
    let solver = SolverConfig::new(config.sigma, config.tau, config.epochs)
        .with_seed(config.seed)
        .with_stride(usize::MAX)
        .with_delta_step(DeltaStep::Surrogate {
            steps: config.steps,
            eta,
        });
    let mut failure = None;
    let mut history = Vec::new();
    let (mut box_v, mut anchor_v) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut observer = |row: &TraceRow, state: &SolverState| {
        for (d, a) in state.delta.flat().iter().zip(state.delta_prev.flat()) {
            box_v = box_v.max(d.abs() - eps);
            if row.k > 0 {
                // same interval arithmetic as the projection, so feasible means <= 0
                let (lo, hi) = ((a - config.tau).max(-eps), (a + config.tau).min(eps));
                anchor_v = anchor_v.max((lo - d).max(d - hi));
            }
        }
        if row.k > 0 {
            history.push(state.delta.clone());
        }
        if failure.is_none() {
            if let Err(e) = curve.push(problem, row.k, &state.w) {
                failure = Some(e);
            }
        }
    };
    let trace = match method {
        TrainMethod::MsihgGd => msihg_gd_run_with(problem, &solver, config.momentum, &mut observer)?,
        _ => msihg_run_with(problem, &solver, &mut observer)?,
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let state = trace.final_state;
    Ok(TrainOutcome {
        params: MlpParams::from_flat(curve.shape.clone(), state.w)?,
        curve: std::mem::take(&mut curve.records),
        final_delta: Some(state.delta),
        delta_history: history,
        max_box_violation: box_v,
        max_anchor_violation: anchor_v,
    })
}

fn train_descent(
    method: TrainMethod,
    problem: &MinimaxProblem,
    eps: f64,
    config: &TrainConfig,
    curve: &mut Curve<'_>,
) -> Result<TrainOutcome> {
    let mut rng = SeededRng::new(config.seed);
    let mut noise = SeededRng::new(derive_seed(config.seed, 0x6e6f697365));
    let mut w = problem.initial_point().w.clone();
    let mut velocity = vec![0.0; w.len()];
    let mut box_v = f64::NEG_INFINITY;
    let eta = pgd_step_size(eps, config.pgd_steps.max(1));
    curve.push(problem, 0, &w)?;
    for epoch in 1..=config.epochs {
        for i in rng.permutation(problem.n()) {
            let dim = problem.block_dims()[i];
            let delta = match method {
                TrainMethod::PgdAt => {
                    let mut d: Vec<f64> = (0..dim).map(|_| noise.uniform(-eps, eps)).collect();
                    for _ in 0..config.pgd_steps {
                        let g = problem.grad_delta_block(i, &w, &d)?;
                        for (dj, gj) in d.iter_mut().zip(&g) {
                            *dj = (*dj + eta * sign0(*gj)).clamp(-eps, eps);
                        }
                    }
                    d
                }
                _ => vec![0.0; dim],
            };
            for d in &delta {
                box_v = box_v.max(d.abs() - eps);
            }
            let g = problem.grad_w_block(i, &w, &delta)?;
            for ((wj, vj), gj) in w.iter_mut().zip(velocity.iter_mut()).zip(&g) {
                *vj = config.momentum * *vj + gj;
                *wj -= config.sigma * *vj;
            }
        }
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("w update"));
        }
        curve.push(problem, epoch, &w)?;
    }
    Ok(TrainOutcome {
        params: MlpParams::from_flat(curve.shape.clone(), w)?,
        curve: std::mem::take(&mut curve.records),
        final_delta: None,
        delta_history: Vec::new(),
        max_box_violation: box_v,
        max_anchor_violation: f64::NEG_INFINITY,
    })
}

use serde::{Deserialize, Serialize};

use super::data::ToyDataset;
use super::mlp::{loss_and_grads, predict, MlpParams};
use crate::error::{Error, Result};
use crate::implicit::{pgd_step_size, sign0};
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub eps: f64,
    pub steps: usize,
    #[serde(default)]
    pub restarts: usize,
    /// Defaults to `2.5ε/T`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl AttackConfig {
    pub fn new(eps: f64, steps: usize, restarts: usize) -> Self {
        Self {
            eps,
            steps,
            restarts,
            eta: None,
            seed: 0,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `PGD-T` or `PGD-T-R`.
    pub fn name(&self) -> String {
        if self.restarts == 0 {
            format!("PGD-{}", self.steps)
        } else {
            format!("PGD-{}-{}", self.steps, self.restarts)
        }
    }

    pub fn step_size(&self) -> f64 {
        match self.eta {
            Some(eta) => eta,
            None if self.steps == 0 => 0.0,
            None => pgd_step_size(self.eps, self.steps),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidConfig(format!("attack eps must be >= 0, got {}", self.eps)));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return Err(Error::InvalidConfig(format!("attack eta must be > 0, got {eta}")));
            }
        }
        Ok(())
    }
}

/// Sign-gradient ascent on the loss inside the `ε`-box around `x`. Trial 0
/// starts at `x`, each restart at a uniform point of the box. Stops at the
/// first misclassified iterate; otherwise returns the highest-loss final
/// iterate. `index` selects the example's random stream.
pub fn pgd_attack(
    params: &MlpParams,
    x: &[f64],
    y: usize,
    attack: &AttackConfig,
    index: u64,
) -> Result<(Vec<f64>, bool)> {
    attack.validate()?;
    let eps = attack.eps;
    let eta = attack.step_size();
    let mut rng = SeededRng::new(derive_seed(attack.seed, index));
    let labels = [y];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for trial in 0..=attack.restarts {
        let mut adv: Vec<f64> = if trial == 0 {
            x.to_vec()
        } else {
            x.iter().map(|v| v + rng.uniform(-eps, eps)).collect()
        };
        for step in 0..=attack.steps {
            if predict(params, &adv)? != y {
                return Ok((adv, true));
            }
            if step == attack.steps {
                break;
            }
            let g = loss_and_grads(params, &adv, &labels)?.grad_input;
            for ((a, xi), gi) in adv.iter_mut().zip(x).zip(&g) {
                *a = (*a + eta * sign0(*gi)).clamp(xi - eps, xi + eps);
            }
        }
        let loss = loss_and_grads(params, &adv, &labels)?.loss;
        if best.as_ref().is_none_or(|(l, _)| loss > *l) {
            best = Some((loss, adv));
        }
    }
    Ok((best.map(|b| b.1).unwrap_or_else(|| x.to_vec()), false))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub natural_acc: f64,
    pub robust_acc: f64,
}

pub fn evaluate(params: &MlpParams, data: &ToyDataset, attack: &AttackConfig) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, found: 0 });
    }
    let (mut natural, mut robust) = (0usize, 0usize);
    for i in 0..data.len() {
        let x = data.input(i);
        let y = data.labels[i];
        if predict(params, x)? == y {
            natural += 1;
        }
        if !pgd_attack(params, x, y, attack, i as u64)?.1 {
            robust += 1;
        }
    }
    let m = data.len() as f64;
    Ok(EvalReport {
        natural_acc: natural as f64 / m,
        robust_acc: robust as f64 / m,
    })
}

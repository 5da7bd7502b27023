//! Solver configuration and step-size admissibility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::MinimaxProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// `u ← prox(δᵏ + τ∇φ(u))`, a contraction when `τL₂₂ < 1`.
    FixedPoint,
    /// Accelerated proximal gradient on the strongly convex subproblem.
    AcceleratedProximal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSolverConfig {
    pub method: InnerMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self {
            method: InnerMethod::FixedPoint,
            tol: 1e-9,
            max_iter: 1000,
        }
    }
}

impl InnerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("inner tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("inner max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// How a block ascent step on `δᵢ` is realized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaStep {
    /// Solve the implicit prox step with the configured inner solver.
    #[default]
    Implicit,
    /// Sign-gradient surrogate on `𝔹ᵢ ∩ {‖δᵢ − δᵢᵏ‖_∞ ≤ τ}`; requires box `gᵢ`.
    Surrogate { steps: usize, eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub sigma: f64,
    pub tau: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub metric_stride: usize,
    #[serde(default)]
    pub inner: InnerSolverConfig,
    #[serde(default)]
    pub delta_step: DeltaStep,
}

fn default_theta() -> f64 {
    1.0
}

fn default_stride() -> usize {
    10
}

impl SolverConfig {
    pub fn new(sigma: f64, tau: f64, iterations: usize) -> Self {
        Self {
            sigma,
            tau,
            theta: 1.0,
            iterations,
            seed: 0,
            metric_stride: 10,
            inner: InnerSolverConfig::default(),
            delta_step: DeltaStep::Implicit,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.metric_stride = stride;
        self
    }

    pub fn with_inner(mut self, inner: InnerSolverConfig) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_delta_step(mut self, step: DeltaStep) -> Self {
        self.delta_step = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if self.metric_stride == 0 {
            return Err(Error::InvalidConfig("metric_stride must be >= 1".into()));
        }
        if let DeltaStep::Surrogate { steps, eta } = self.delta_step {
            if steps == 0 || !(eta > 0.0) {
                return Err(Error::InvalidConfig(
                    "surrogate step needs steps >= 1 and eta > 0".into(),
                ));
            }
        }
        self.inner.validate()
    }
}

/// Evaluation of the step-size conditions for the sublinear and linear rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `κ = max{L₁₂√(στn), L₁₁σ}`
    pub kappa: f64,
    /// `1/3 − ρ(σ⁻¹ + 4L₁₁²σ)`
    pub thm1_bound_w: f64,
    /// `1 − ρ(τ⁻¹ + 12nL₁₂²τ)`
    pub thm1_bound_delta: f64,
    /// `κ < min{thm1_bound_w, thm1_bound_delta}`
    pub thm1_ok: bool,
    /// Supremum of admissible `ρ` for the sublinear rate (0 when none).
    pub rho_max: f64,
    /// The simplified sufficient condition `σ ≤ 1/(6L)`, `τ ≤ 1/(6nL)`.
    pub thm1_simplified_ok: bool,
    /// Whether the configured `θ` equals 1, as the sublinear rate requires.
    pub theta_is_one: bool,
    /// `max{1/(1+μσ), (1 + (n−1)μτ/n)/(1+μτ)}`
    pub thm2_theta: f64,
    /// `κ ≤ 1/3`
    pub thm2_ok: bool,
}

pub fn kappa(sigma: f64, tau: f64, n: usize, l11: f64, l12: f64) -> f64 {
    (l12 * (sigma * tau * n as f64).sqrt()).max(l11 * sigma)
}

/// `θ` required by the linear-rate result for strong-MVI parameter `μ`.
pub fn linear_rate_theta(sigma: f64, tau: f64, n: usize, mu: f64) -> f64 {
    let nf = n as f64;
    let a = 1.0 / (1.0 + mu * sigma);
    let b = (1.0 + (nf - 1.0) * mu * tau / nf) / (1.0 + mu * tau);
    a.max(b)
}

/// Reports (never rejects) whether `(σ, τ, θ)` meet the convergence conditions
/// for the given weak-MVI `ρ` and strong-MVI `μ`.
pub fn validate_config(
    problem: &MinimaxProblem,
    config: &SolverConfig,
    rho: f64,
    mu: f64,
) -> AdmissibilityReport {
    let lc = problem.lipschitz();
    admissibility(config.sigma, config.tau, config.theta, problem.n(), lc.l11, lc.l12, lc.l22, rho, mu)
}

#[allow(clippy::too_many_arguments)]
pub fn admissibility(
    sigma: f64,
    tau: f64,
    theta: f64,
    n: usize,
    l11: f64,
    l12: f64,
    l22: f64,
    rho: f64,
    mu: f64,
) -> AdmissibilityReport {
    let nf = n as f64;
    let kappa = kappa(sigma, tau, n, l11, l12);
    let coef_w = 1.0 / sigma + 4.0 * l11 * l11 * sigma;
    let coef_d = 1.0 / tau + 12.0 * nf * l12 * l12 * tau;
    let thm1_bound_w = 1.0 / 3.0 - rho * coef_w;
    let thm1_bound_delta = 1.0 - rho * coef_d;
    let thm1_ok = kappa < thm1_bound_w.min(thm1_bound_delta);
    let rho_max = ((1.0 / 3.0 - kappa) / coef_w)
        .min((1.0 - kappa) / coef_d)
        .max(0.0);
    let l = l11.max(l12).max(l22);
    let thm1_simplified_ok = l == 0.0 || (sigma <= 1.0 / (6.0 * l) && tau <= 1.0 / (6.0 * nf * l));
    AdmissibilityReport {
        kappa,
        thm1_bound_w,
        thm1_bound_delta,
        thm1_ok,
        rho_max,
        thm1_simplified_ok,
        theta_is_one: theta == 1.0,
        thm2_theta: linear_rate_theta(sigma, tau, n, mu),
        thm2_ok: kappa <= 1.0 / 3.0,
    }
}

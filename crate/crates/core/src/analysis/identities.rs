//! Numeric checks of the identities and inequalities used in the
//! convergence proofs: the block-sampling expectation identities, the
//! extrapolation-error bound, and the telescoped descent budget.

use serde::{Deserialize, Serialize};

use crate::config::{admissibility, kappa};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, dot};
use crate::problem::{BlockVector, MinimaxProblem};
use crate::solvers::{line3_q, Algorithm, Trace};

pub const IDENTITY_TOL: f64 = 1e-12;

fn close(lhs: f64, rhs: f64) -> bool {
    (lhs - rhs).abs() <= IDENTITY_TOL * 1f64.max(lhs.abs()).max(rhs.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: close(lhs, rhs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `r(δ̂) = 𝔼r(δᵏ⁺¹) + (n−1){𝔼r(δᵏ⁺¹) − r(δᵏ)}`
    pub e1: IdentityCheck,
    /// `‖δ − δ̂‖²_{τ⁻¹} = n𝔼‖δ − δᵏ⁺¹‖²_{τ⁻¹} − (n−1)‖δ − δᵏ‖²_{τ⁻¹}`
    pub e2: IdentityCheck,
    /// `‖δ̂ − δᵏ‖² = n𝔼‖δᵏ⁺¹ − δᵏ‖²`
    pub e3: IdentityCheck,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.e1.holds && self.e2.holds && self.e3.holds
    }
}

/// Exact expectations over the uniform block draw: outcome `i` replaces
/// block `i` of `delta_k` by the same block of `delta_hat`. `r(i, δᵢ)` is the
/// separable summand.
pub fn verify_expectation_identities(
    r: &dyn Fn(usize, &[f64]) -> f64,
    delta_k: &BlockVector,
    delta_hat: &BlockVector,
    reference: &BlockVector,
    tau: f64,
) -> Result<IdentityReport> {
    let dims = delta_k.dims();
    for (what, v) in [("delta_hat", delta_hat), ("reference", reference)] {
        if v.dims() != dims {
            return Err(Error::DimensionMismatch {
                what,
                expected: dims.len(),
                found: v.n_blocks(),
            });
        }
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!("tau must be > 0, got {tau}")));
    }
    let n = dims.len();
    let nf = n as f64;
    let r_total = |d: &BlockVector| (0..n).map(|i| r(i, d.block(i))).sum::<f64>();

    let (mut e_r, mut e_ref, mut e_step) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let mut next = delta_k.clone();
        next.block_mut(i).copy_from_slice(delta_hat.block(i));
        e_r += r_total(&next) / nf;
        e_ref += dist_sq(reference.flat(), next.flat()) / tau / nf;
        e_step += dist_sq(next.flat(), delta_k.flat()) / nf;
    }

    let r_k = r_total(delta_k);
    let ref_k = dist_sq(reference.flat(), delta_k.flat()) / tau;
    Ok(IdentityReport {
        e1: IdentityCheck::new(r_total(delta_hat), e_r + (nf - 1.0) * (e_r - r_k)),
        e2: IdentityCheck::new(
            dist_sq(reference.flat(), delta_hat.flat()) / tau,
            nf * e_ref - nf * ref_k + ref_k,
        ),
        e3: IdentityCheck::new(dist_sq(delta_hat.flat(), delta_k.flat()), nf * e_step),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTermReport {
    pub lhs: f64,
    pub rhs: f64,
    pub kappa: f64,
    pub holds: bool,
}

/// Cross-term bound
///
/// ```text
/// |⟨wᵏ − wᵏ⁺¹, ∇_wφ(wᵏ,δᵏ) − qᵏ⟩| ≤ κ‖wᵏ⁺¹−wᵏ‖²_{σ⁻¹} + (κ/2)‖wᵏ−wᵏ⁻¹‖²_{σ⁻¹} + (nκ/2)‖δᵏ−δᵏ⁻¹‖²_{τ⁻¹}
/// ```
///
/// with the extrapolated `qᵏ` and `κ` from the declared Lipschitz constants.
#[allow(clippy::too_many_arguments)]
pub fn verify_lemma4_bound(
    problem: &MinimaxProblem,
    w_next: &[f64],
    w_k: &[f64],
    w_prev: &[f64],
    delta_k: &BlockVector,
    delta_prev: &BlockVector,
    sigma: f64,
    tau: f64,
) -> Result<CrossTermReport> {
    let n = problem.n();
    let grad_cur = problem.grad_w(w_k, delta_k)?;
    let grad_prev = problem.grad_w(w_prev, delta_prev)?;
    let grad_mixed = problem.grad_w(w_k, delta_prev)?;
    let q = line3_q(n, &grad_prev, &grad_cur, &grad_mixed);

    let dw: Vec<f64> = w_k.iter().zip(w_next).map(|(a, b)| a - b).collect();
    let err: Vec<f64> = grad_cur.iter().zip(&q).map(|(a, b)| a - b).collect();
    let lhs = dot(&dw, &err).abs();

    let l = problem.lipschitz();
    let k = kappa(sigma, tau, n, l.l11, l.l12);
    let rhs = k * dist_sq(w_next, w_k) / sigma
        + 0.5 * k * dist_sq(w_k, w_prev) / sigma
        + 0.5 * n as f64 * k * dist_sq(delta_k.flat(), delta_prev.flat()) / tau;
    Ok(CrossTermReport {
        lhs,
        rhs,
        kappa: k,
        holds: lhs <= rhs + IDENTITY_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    /// Weighted sum of squared step lengths.
    pub accumulated: f64,
    /// `½‖w* − w⁰‖²_{σ⁻¹} + ½‖δ* − δ⁰‖²_{τ⁻¹}`
    pub budget: f64,
    pub coef_w: f64,
    pub coef_delta: f64,
    pub iterations: usize,
    pub holds: bool,
}

/// Telescoped descent inequality for a deterministic run:
/// `{1−3κ−3ρ(σ⁻¹+4L₁₁²σ)}/2 Σ‖wᵏ⁺¹−wᵏ‖²_{σ⁻¹} + {1−κ−ρ(τ⁻¹+12L₁₂²τ)}/2 Σ‖δᵏ⁺¹−δᵏ‖²_{τ⁻¹}`
/// is at most the initial-distance budget.
pub fn thm1_budget_check(trace: &Trace, problem: &MinimaxProblem, rho: f64) -> Result<BudgetReport> {
    if trace.algorithm != Algorithm::Dsihg {
        return Err(Error::Unsupported(format!(
            "budget check needs a deterministic trace, got {}",
            trace.algorithm.name()
        )));
    }
    let star = problem.known_solution().ok_or(Error::MissingKnownSolution)?;
    let (sigma, tau) = (trace.config.sigma, trace.config.tau);
    let l = problem.lipschitz();
    let report = admissibility(sigma, tau, trace.config.theta, 1, l.l11, l.l12, l.l22, rho, 0.0);
    if !report.thm1_ok {
        return Err(Error::Inadmissible(format!(
            "kappa = {} against bounds ({}, {}) at rho = {rho}",
            report.kappa, report.thm1_bound_w, report.thm1_bound_delta
        )));
    }
    let k = report.kappa;
    let coef_w = 0.5 * (1.0 - 3.0 * k - 3.0 * rho * (1.0 / sigma + 4.0 * l.l11 * l.l11 * sigma));
    let coef_delta = 0.5 * (1.0 - k - rho * (1.0 / tau + 12.0 * l.l12 * l.l12 * tau));

    let start = problem.initial_point();
    let budget = 0.5 * dist_sq(&star.w, &start.w) / sigma
        + 0.5 * dist_sq(star.delta.flat(), start.delta.flat()) / tau;
    let (sw, sd) = trace
        .rows
        .iter()
        .skip(1)
        .fold((0.0, 0.0), |(a, b), r| (a + r.step_w_sq, b + r.step_delta_sq));
    let accumulated = coef_w * sw / sigma + coef_delta * sd / tau;
    Ok(BudgetReport {
        accumulated,
        budget,
        coef_w,
        coef_delta,
        iterations: trace.rows.len().saturating_sub(1),
        holds: accumulated <= budget * (1.0 + IDENTITY_TOL) + IDENTITY_TOL,
    })
}

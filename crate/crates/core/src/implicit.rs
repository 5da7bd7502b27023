//! Solvers for the implicit block step
//! `δ⁺ = prox_g^τ[δᵏ + τ∇φ(w, δ⁺)]`, equivalently
//! `δ⁺ = argmin g(δ) − φ(w, δ) + ‖δ − δᵏ‖²/(2τ)`,
//! and the sign-gradient surrogate used for adversarial training.

use log::warn;

use crate::config::{InnerMethod, InnerSolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, max_abs};
use crate::problem::MinimaxProblem;
use crate::prox::Prox;
use crate::rng::SeededRng;

/// `u ↦ φ(w, u)` for a fixed `w`.
pub type ValueFn<'a> = dyn Fn(&[f64]) -> f64 + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitResult {
    pub delta_plus: Vec<f64>,
    pub inner_iterations: usize,
    /// `‖δ⁺ − prox_g^τ(δᵏ + τ∇φ(w, δ⁺))‖`
    pub optimality_residual: f64,
    /// Defect after each inner iteration.
    pub history: Vec<f64>,
}

/// Fixed-point defect of `u` for the implicit step.
pub fn implicit_defect(
    prox_g: &Prox,
    grad: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    delta_k: &[f64],
    tau: f64,
    u: &[f64],
) -> Result<f64> {
    let t = fixed_point_map(prox_g, grad, delta_k, tau, u)?;
    Ok(dist_sq(u, &t).sqrt())
}

fn fixed_point_map(
    prox_g: &Prox,
    grad: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    delta_k: &[f64],
    tau: f64,
    u: &[f64],
) -> Result<Vec<f64>> {
    let g = grad(u);
    if g.len() != delta_k.len() {
        return Err(Error::DimensionMismatch {
            what: "implicit gradient",
            expected: delta_k.len(),
            found: g.len(),
        });
    }
    let z: Vec<f64> = delta_k.iter().zip(&g).map(|(d, gi)| d + tau * gi).collect();
    prox_g.apply(&z, tau)
}

/// Picard iteration `u ← prox(δᵏ + τ∇φ(u))` from `u₀ = δᵏ`.
///
/// Contracts with factor `τL₂₂` when `τL₂₂ < 1`; otherwise it is still
/// attempted after a warning.
pub fn solve_implicit_fixed_point(
    prox_g: &Prox,
    grad: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    delta_k: &[f64],
    tau: f64,
    l22: f64,
    inner: &InnerSolverConfig,
) -> Result<ImplicitResult> {
    if tau * l22 >= 1.0 {
        warn!("fixed-point implicit step with tau*L22 = {} >= 1 may not contract", tau * l22);
    }
    let mut u = delta_k.to_vec();
    let mut t = fixed_point_map(prox_g, grad, delta_k, tau, &u)?;
    let mut history = Vec::new();
    for it in 1..=inner.max_iter {
        u = t;
        t = fixed_point_map(prox_g, grad, delta_k, tau, &u)?;
        let defect = dist_sq(&u, &t).sqrt();
        if !defect.is_finite() {
            return Err(Error::NonFinite("fixed-point implicit step"));
        }
        history.push(defect);
        if defect <= inner.tol {
            return Ok(ImplicitResult {
                delta_plus: u,
                inner_iterations: it,
                optimality_residual: defect,
                history,
            });
        }
    }
    Err(Error::InnerNonConvergence {
        iteration: 0,
        inner_iterations: inner.max_iter,
        residual: *history.last().unwrap_or(&f64::INFINITY),
    })
}

/// Accelerated proximal gradient on the strongly convex subproblem
/// `g(u) − φ(u) + ‖u − δᵏ‖²/(2τ)` (smoothness `L₂₂ + 1/τ`, strong convexity
/// `1/τ − L₂₂`). Stops on the same fixed-point defect as
/// [`solve_implicit_fixed_point`], which equals the prox-gradient mapping at
/// step `τ` scaled by `τ`.
///
/// When `value` (the map `u ↦ φ(w, u)`) is available, momentum is reset
/// whenever the objective increases.
pub fn solve_implicit_accel(
    prox_g: &Prox,
    grad: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    value: Option<&ValueFn<'_>>,
    delta_k: &[f64],
    tau: f64,
    l22: f64,
    inner: &InnerSolverConfig,
) -> Result<ImplicitResult> {
    let inv_tau = 1.0 / tau;
    let strong = inv_tau - l22;
    if !(strong > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "accelerated implicit step needs 1/tau > L22 (tau={tau}, L22={l22})"
        )));
    }
    let smooth = l22 + inv_tau;
    let step = 1.0 / smooth;
    let q = strong / smooth;
    let beta = (1.0 - q.sqrt()) / (1.0 + q.sqrt());

    // iterates stay in dom g, so only the quadratic regularizer contributes
    let g_value = |u: &[f64]| match prox_g {
        Prox::Quadratic { lambda } => 0.5 * lambda * u.iter().map(|x| x * x).sum::<f64>(),
        _ => 0.0,
    };
    let objective = |u: &[f64], phi: f64| g_value(u) - phi + 0.5 * inv_tau * dist_sq(u, delta_k);

    let mut x = delta_k.to_vec();
    let mut y = x.clone();
    let mut prev_obj = value.map(|v| objective(&x, v(&x)));
    let mut history = Vec::new();
    for it in 1..=inner.max_iter {
        let gy = grad(&y);
        let z: Vec<f64> = y
            .iter()
            .zip(&gy)
            .zip(delta_k)
            .map(|((yi, gi), dk)| yi - step * (-gi + inv_tau * (yi - dk)))
            .collect();
        let x_next = prox_g.apply(&z, step)?;

        let defect = implicit_defect(prox_g, grad, delta_k, tau, &x_next)?;
        if !defect.is_finite() {
            return Err(Error::NonFinite("accelerated implicit step"));
        }
        history.push(defect);
        if defect <= inner.tol {
            return Ok(ImplicitResult {
                delta_plus: x_next,
                inner_iterations: it,
                optimality_residual: defect,
                history,
            });
        }

        let restart = match (value, prev_obj) {
            (Some(v), Some(p)) => {
                let o = objective(&x_next, v(&x_next));
                prev_obj = Some(o);
                o > p
            }
            _ => false,
        };
        y = if restart {
            x_next.clone()
        } else {
            x_next
                .iter()
                .zip(&x)
                .map(|(xn, xo)| xn + beta * (xn - xo))
                .collect()
        };
        x = x_next;
    }
    Err(Error::InnerNonConvergence {
        iteration: 0,
        inner_iterations: inner.max_iter,
        residual: *history.last().unwrap_or(&f64::INFINITY),
    })
}

/// Dispatch on the configured inner method.
pub fn solve_implicit(
    prox_g: &Prox,
    grad: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    value: Option<&ValueFn<'_>>,
    delta_k: &[f64],
    tau: f64,
    l22: f64,
    inner: &InnerSolverConfig,
) -> Result<ImplicitResult> {
    match inner.method {
        InnerMethod::FixedPoint => solve_implicit_fixed_point(prox_g, grad, delta_k, tau, l22, inner),
        InnerMethod::AcceleratedProximal => {
            solve_implicit_accel(prox_g, grad, value, delta_k, tau, l22, inner)
        }
    }
}

/// Implicit step on block `i` of `problem` at the given `w`.
pub fn solve_block(
    problem: &MinimaxProblem,
    i: usize,
    w: &[f64],
    delta_k_i: &[f64],
    tau: f64,
    inner: &InnerSolverConfig,
) -> Result<ImplicitResult> {
    let mut failure = None;
    let mut grad = |u: &[f64]| match problem.grad_delta_block(i, w, u) {
        Ok(g) => g,
        Err(e) => {
            failure = Some(e);
            vec![f64::NAN; u.len()]
        }
    };
    let value = |u: &[f64]| problem.value_block(i, w, u).unwrap_or(0.0);
    let value_ref: Option<&ValueFn<'_>> = if problem.has_value() { Some(&value) } else { None };
    let res = solve_implicit(
        problem.prox_g(i),
        &mut grad,
        value_ref,
        delta_k_i,
        tau,
        problem.lipschitz().l22,
        inner,
    );
    match failure {
        Some(e) => Err(e),
        None => res,
    }
}

/// Clamp `z` to `{‖u‖_∞ ≤ eps} ∩ {‖u − anchor‖_∞ ≤ tau}` coordinate-wise.
pub fn project_box_intersection(z: &[f64], anchor: &[f64], tau: f64, eps: f64) -> Result<Vec<f64>> {
    if z.len() != anchor.len() {
        return Err(Error::DimensionMismatch {
            what: "anchor",
            expected: z.len(),
            found: anchor.len(),
        });
    }
    z.iter()
        .zip(anchor)
        .enumerate()
        .map(|(j, (&zj, &aj))| {
            let lo = (-eps).max(aj - tau);
            let hi = eps.min(aj + tau);
            if lo > hi {
                Err(Error::EmptyInterval { coord: j, lo, hi })
            } else {
                Ok(zj.clamp(lo, hi))
            }
        })
        .collect()
}

/// `sign` with `sign(0) = 0`.
pub fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Step-size rule `η = 2.5ε/T`.
pub fn pgd_step_size(eps: f64, steps: usize) -> f64 {
    2.5 * eps / steps as f64
}

/// `T` projected sign-gradient ascent steps on `S = 𝔹 ∩ {‖δ − δᵏ‖_∞ ≤ τ}`
/// from a uniformly perturbed start `δᵏ + unif[−τ, τ]` (projected onto `𝔹`).
/// The anchor of `S` is the unperturbed `δᵏ`.
pub fn pgd_surrogate_step(
    grad: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    delta_k: &[f64],
    eps: f64,
    tau: f64,
    steps: usize,
    eta: f64,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if max_abs(delta_k) > eps {
        return Err(Error::InvalidConfig(format!(
            "surrogate anchor outside the eps-box (|delta|_inf = {}, eps = {eps})",
            max_abs(delta_k)
        )));
    }
    let mut u: Vec<f64> = delta_k
        .iter()
        .map(|d| (d + rng.uniform(-tau, tau)).clamp(-eps, eps))
        .collect();
    for _ in 0..steps {
        let g = grad(&u);
        let stepped: Vec<f64> = u.iter().zip(&g).map(|(ui, gi)| ui + eta * sign0(*gi)).collect();
        u = project_box_intersection(&stepped, delta_k, tau, eps)?;
    }
    Ok(u)
}

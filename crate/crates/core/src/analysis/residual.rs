//! Squared norm of the saddle subdifferential
//! `F(w, δ) = (∂f(w) + ∇_wφ, ∂g(δ) − ∇_δφ)` with the infimum over
//! subgradient selections.

use crate::config::InnerSolverConfig;
use crate::error::Result;
use crate::implicit::solve_block;
use crate::linalg::norm_sq;
use crate::problem::{BlockVector, MinimaxProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBreakdown {
    pub total_sq: f64,
    pub w_part_sq: f64,
    pub delta_part_sq: f64,
    /// Minimizing `γ_f ∈ ∂f(w)`.
    pub witness_gamma_f: Vec<f64>,
    /// Minimizing `γ_g ∈ ∂g(δ)`.
    pub witness_gamma_g: BlockVector,
    /// The stacked minimizing element of `F(w, δ)`, `δ`-part block by block.
    pub field_w: Vec<f64>,
    pub field_delta: BlockVector,
}

pub fn saddle_residual_sq(
    problem: &MinimaxProblem,
    w: &[f64],
    delta: &BlockVector,
) -> Result<ResidualBreakdown> {
    let gw = problem.grad_w(w, delta)?;
    let gamma_f = problem.prox_f().select_subgradient(w, &gw)?;
    let field_w: Vec<f64> = gamma_f.iter().zip(&gw).map(|(a, b)| a + b).collect();

    let dims = problem.block_dims();
    let mut gamma_g = BlockVector::zeros(dims);
    let mut field_delta = BlockVector::zeros(dims);
    for i in 0..problem.n() {
        let neg: Vec<f64> = problem
            .grad_delta_block(i, w, delta.block(i))?
            .into_iter()
            .map(|g| -g)
            .collect();
        let gam = problem.prox_g(i).select_subgradient(delta.block(i), &neg)?;
        for (j, (a, b)) in gam.iter().zip(&neg).enumerate() {
            field_delta.block_mut(i)[j] = a + b;
        }
        gamma_g.block_mut(i).copy_from_slice(&gam);
    }
    let w_part_sq = norm_sq(&field_w);
    let delta_part_sq = norm_sq(field_delta.flat());
    Ok(ResidualBreakdown {
        total_sq: w_part_sq + delta_part_sq,
        w_part_sq,
        delta_part_sq,
        witness_gamma_f: gamma_f,
        witness_gamma_g: gamma_g,
        field_w,
        field_delta,
    })
}

/// Full-dimensional implicit update from `(wᵏ, δᵏ⁻¹)`:
/// `δ̂ᵏ = prox_g^τ[δᵏ⁻¹ + τ∇_δφ(wᵏ, δ̂ᵏ)]`, solved block by block.
pub fn hat_delta(
    problem: &MinimaxProblem,
    w_k: &[f64],
    delta_prev: &BlockVector,
    tau: f64,
    inner: &InnerSolverConfig,
) -> Result<BlockVector> {
    let mut out = BlockVector::zeros(problem.block_dims());
    for i in 0..problem.n() {
        let r = solve_block(problem, i, w_k, delta_prev.block(i), tau, inner)?;
        out.block_mut(i).copy_from_slice(&r.delta_plus);
    }
    Ok(out)
}

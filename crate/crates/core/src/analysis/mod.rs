//! Stationarity metrics, MVI certification, rate fitting, and numeric checks
//! of the convergence-proof identities and bounds.

mod identities;
mod lipschitz;
mod mvi;
mod rate;
mod residual;

pub use identities::{
    thm1_budget_check, verify_expectation_identities, verify_lemma4_bound, BudgetReport,
    IdentityCheck, IdentityReport, CrossTermReport, IDENTITY_TOL,
};
pub use lipschitz::estimate_lipschitz;
pub use mvi::{check_mvi, min_weak_rho, weak_rho_bisect, MviKind, MviReport, Sampler, MVI_TOL};
pub use rate::{fit_rate, fit_rate_points, RateFit, RateMode};
pub use residual::{hat_delta, saddle_residual_sq, ResidualBreakdown};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{BlockVector, MinimaxProblem, Point};
use crate::rng::SeededRng;

/// Axis-aligned sampling box `[lo, hi]` applied to every coordinate of
/// `(w, δ)`, intersected with each box-indicator `gᵢ`'s feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingDomain {
    pub lo: f64,
    pub hi: f64,
}

impl SamplingDomain {
    pub fn symmetric(half_width: f64) -> Self {
        Self {
            lo: -half_width,
            hi: half_width,
        }
    }

    pub fn describe(&self) -> String {
        format!("[{}, {}] per coordinate", self.lo, self.hi)
    }

    /// Per-coordinate bounds: `w` first, then the flattened `δ`.
    pub(crate) fn bounds(&self, problem: &MinimaxProblem) -> Result<Vec<(f64, f64)>> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidConfig(format!("empty sampling domain {}", self.describe())));
        }
        let mut out = vec![(self.lo, self.hi); problem.dim_w()];
        for (i, &d) in problem.block_dims().iter().enumerate() {
            let (lo, hi) = match problem.prox_g(i).box_radius() {
                Some(r) => (self.lo.max(-r), self.hi.min(r)),
                None => (self.lo, self.hi),
            };
            if lo > hi {
                return Err(Error::EmptyInterval { coord: i, lo, hi });
            }
            out.extend(std::iter::repeat_n((lo, hi), d));
        }
        Ok(out)
    }
}

pub(crate) fn split_point(problem: &MinimaxProblem, z: Vec<f64>) -> Result<Point> {
    let dw = problem.dim_w();
    let delta = BlockVector::from_flat(z[dw..].to_vec(), problem.block_dims())?;
    let mut w = z;
    w.truncate(dw);
    Ok(Point { w, delta })
}

pub(crate) fn sample_point(bounds: &[(f64, f64)], rng: &mut SeededRng) -> Vec<f64> {
    bounds.iter().map(|&(lo, hi)| rng.uniform(lo, hi)).collect()
}

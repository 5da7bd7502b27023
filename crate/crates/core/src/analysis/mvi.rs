//! Sample-based certification of the weak and strong Minty variational
//! inequalities around a candidate solution. A positive result means
//! "certified on the sampled domain", never a proof.

use serde::{Deserialize, Serialize};

use super::{sample_point, saddle_residual_sq, split_point, SamplingDomain};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, dot};
use crate::problem::{MinimaxProblem, Point};
use crate::rng::SeededRng;

pub const MVI_TOL: f64 = 1e-9;

/// Grid sampling is only used up to this total dimension.
const GRID_MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MviKind {
    /// `⟨F(z), z − z*⟩ ≥ −(ρ/2)‖F(z)‖²`
    Weak,
    /// `⟨F(z), z − z*⟩ ≥ (μ/2)‖z − z*‖²`
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    Grid { per_axis: usize },
    Uniform { samples: usize },
    /// Uniform points plus a grid when the total dimension is at most 4.
    GridAndUniform { per_axis: usize, samples: usize },
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler::GridAndUniform {
            per_axis: 21,
            samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MviReport {
    pub kind: MviKind,
    pub parameter: f64,
    pub min_margin: f64,
    pub samples: usize,
    pub domain: String,
    pub certified: bool,
}

/// `(⟨F(z), z − z*⟩, ‖F(z)‖², ‖z − z*‖²)` at one point.
fn terms(problem: &MinimaxProblem, candidate: &Point, p: &Point) -> Result<(f64, f64, f64)> {
    let r = saddle_residual_sq(problem, &p.w, &p.delta)?;
    let dw: Vec<f64> = p.w.iter().zip(&candidate.w).map(|(a, b)| a - b).collect();
    let dd: Vec<f64> = p
        .delta
        .flat()
        .iter()
        .zip(candidate.delta.flat())
        .map(|(a, b)| a - b)
        .collect();
    let lhs = dot(&r.field_w, &dw) + dot(r.field_delta.flat(), &dd);
    let d = dist_sq(&p.w, &candidate.w) + dist_sq(p.delta.flat(), candidate.delta.flat());
    Ok((lhs, r.total_sq, d))
}

fn for_each_sample(
    problem: &MinimaxProblem,
    sampler: Sampler,
    domain: &SamplingDomain,
    seed: u64,
    mut visit: impl FnMut(&Point) -> Result<()>,
) -> Result<usize> {
    let bounds = domain.bounds(problem)?;
    let dim = bounds.len();
    let (per_axis, uniform) = match sampler {
        Sampler::Grid { per_axis } => (Some(per_axis), 0),
        Sampler::Uniform { samples } => (None, samples),
        Sampler::GridAndUniform { per_axis, samples } => {
            (if dim <= GRID_MAX_DIM { Some(per_axis) } else { None }, samples)
        }
    };
    let mut count = 0;
    if let Some(m) = per_axis {
        if m < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 points per axis".into()));
        }
        let total = m.checked_pow(dim as u32).ok_or_else(|| {
            Error::InvalidConfig(format!("grid of {m}^{dim} points is too large"))
        })?;
        for idx in 0..total {
            let mut rest = idx;
            let z: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| {
                    let j = rest % m;
                    rest /= m;
                    lo + (hi - lo) * j as f64 / (m - 1) as f64
                })
                .collect();
            visit(&split_point(problem, z)?)?;
            count += 1;
        }
    }
    let mut rng = SeededRng::new(seed);
    for _ in 0..uniform {
        let z = sample_point(&bounds, &mut rng);
        visit(&split_point(problem, z)?)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidConfig("sampler produced no points".into()));
    }
    Ok(count)
}

pub fn check_mvi(
    problem: &MinimaxProblem,
    candidate: &Point,
    kind: MviKind,
    parameter: f64,
    sampler: Sampler,
    domain: &SamplingDomain,
    seed: u64,
) -> Result<MviReport> {
    if !(parameter >= 0.0) {
        return Err(Error::InvalidConfig(format!("MVI parameter must be >= 0, got {parameter}")));
    }
    let mut min_margin = f64::INFINITY;
    let samples = for_each_sample(problem, sampler, domain, seed, |p| {
        let (lhs, f_sq, d_sq) = terms(problem, candidate, p)?;
        let margin = match kind {
            MviKind::Weak => lhs + 0.5 * parameter * f_sq,
            MviKind::Strong => lhs - 0.5 * parameter * d_sq,
        };
        min_margin = min_margin.min(margin);
        Ok(())
    })?;
    Ok(MviReport {
        kind,
        parameter,
        min_margin,
        samples,
        domain: domain.describe(),
        certified: min_margin >= -MVI_TOL,
    })
}

/// Smallest `ρ ≥ 0` the samples allow: `max(0, max −2⟨F, z − z*⟩ / ‖F‖²)`.
/// Infinite when some sample has a negative pairing with `F = 0`.
pub fn min_weak_rho(
    problem: &MinimaxProblem,
    candidate: &Point,
    sampler: Sampler,
    domain: &SamplingDomain,
    seed: u64,
) -> Result<f64> {
    let mut rho = 0.0_f64;
    for_each_sample(problem, sampler, domain, seed, |p| {
        let (lhs, f_sq, _) = terms(problem, candidate, p)?;
        if lhs < -MVI_TOL {
            rho = rho.max(if f_sq > 0.0 { -2.0 * lhs / f_sq } else { f64::INFINITY });
        }
        Ok(())
    })?;
    Ok(rho)
}

/// Bisection on the certification outcome of [`check_mvi`] over `[0, rho_hi]`.
/// Returns the smallest certified `ρ` found, or `None` if `rho_hi` fails.
#[allow(clippy::too_many_arguments)]
pub fn weak_rho_bisect(
    problem: &MinimaxProblem,
    candidate: &Point,
    sampler: Sampler,
    domain: &SamplingDomain,
    seed: u64,
    rho_hi: f64,
    rel_tol: f64,
) -> Result<Option<f64>> {
    let ok = |rho: f64| -> Result<bool> {
        Ok(check_mvi(problem, candidate, MviKind::Weak, rho, sampler, domain, seed)?.certified)
    };
    if !ok(rho_hi)? {
        return Ok(None);
    }
    if ok(0.0)? {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0, rho_hi);
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

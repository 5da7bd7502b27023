//! Empirical gradient-Lipschitz constants from random difference quotients.

use super::{sample_point, split_point, SamplingDomain};
use crate::error::{Error, Result};
use crate::linalg::dist_sq;
use crate::problem::{Lipschitz, MinimaxProblem};
use crate::rng::SeededRng;

fn quotient(num: f64, den_sq: f64) -> f64 {
    if den_sq > 0.0 {
        num / den_sq.sqrt()
    } else {
        0.0
    }
}

/// Largest observed quotients over `samples` random pairs:
/// `‖∇_wφ(w,δ)−∇_wφ(w',δ)‖/‖w−w'‖` for `L₁₁`, both mixed quotients pooled
/// for `L₁₂`, and `‖∇_δφ(w,δ)−∇_δφ(w,δ')‖/‖δ−δ'‖` for `L₂₂`. These are lower
/// estimates of the true constants.
pub fn estimate_lipschitz(
    problem: &MinimaxProblem,
    domain: &SamplingDomain,
    samples: usize,
    rng: &mut SeededRng,
) -> Result<Lipschitz> {
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample pair".into()));
    }
    let bounds = domain.bounds(problem)?;
    let mut est = Lipschitz::new(0.0, 0.0, 0.0);
    let diff = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    for _ in 0..samples {
        let p = split_point(problem, sample_point(&bounds, rng))?;
        let q = split_point(problem, sample_point(&bounds, rng))?;
        let gw = problem.grad_w(&p.w, &p.delta)?;
        let gd = problem.grad_delta(&p.w, &p.delta)?;

        let gw_w = problem.grad_w(&q.w, &p.delta)?;
        let gd_w = problem.grad_delta(&q.w, &p.delta)?;
        let dw = dist_sq(&p.w, &q.w);
        est.l11 = est.l11.max(quotient(diff(&gw, &gw_w), dw));
        est.l12 = est.l12.max(quotient(diff(gd.flat(), gd_w.flat()), dw));

        let gw_d = problem.grad_w(&p.w, &q.delta)?;
        let gd_d = problem.grad_delta(&p.w, &q.delta)?;
        let dd = dist_sq(p.delta.flat(), q.delta.flat());
        est.l12 = est.l12.max(quotient(diff(&gw, &gw_d), dd));
        est.l22 = est.l22.max(quotient(diff(gd.flat(), gd_d.flat()), dd));
    }
    if ![est.l11, est.l12, est.l22].iter().all(|c| c.is_finite()) {
        return Err(Error::NonFinite("Lipschitz estimate"));
    }
    Ok(est)
}

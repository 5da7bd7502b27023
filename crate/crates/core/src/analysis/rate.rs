//! Empirical convergence-rate fits on recorded metric series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Power law in `k`, fitted on the residual series.
    Sublinear,
    /// Geometric decay, fitted on the distance-to-solution series.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub mode: RateMode,
    pub points_used: usize,
    /// Least-squares slope of `log(running average)` against `log K`.
    pub running_avg_slope: Option<f64>,
    /// Least-squares slope of `log(value)` against `log k`.
    pub pointwise_slope: Option<f64>,
    /// Largest per-step ratio in the window.
    pub ratio_max: Option<f64>,
    /// Per-step ratio from the window endpoints.
    pub ratio_mean: Option<f64>,
}

fn ls_slope(xy: &[(f64, f64)]) -> Option<f64> {
    if xy.len() < 2 {
        return None;
    }
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn fit_rate(trace: &Trace, mode: RateMode, window: usize) -> Result<RateFit> {
    let points: Vec<(usize, f64)> = match mode {
        RateMode::Sublinear => trace.residual_points().collect(),
        RateMode::Linear => trace.dist_points().collect(),
    };
    fit_rate_points(&points, mode, window)
}

/// `points` are `(k, value)` with strictly increasing `k`. The fit uses the
/// last `window` points with `k ≥ 1`.
pub fn fit_rate_points(points: &[(usize, f64)], mode: RateMode, window: usize) -> Result<RateFit> {
    if window < 2 {
        return Err(Error::InvalidConfig("rate window must be >= 2".into()));
    }
    if points.windows(2).any(|p| p[1].0 <= p[0].0) {
        return Err(Error::InvalidConfig("metric points must be strictly increasing in k".into()));
    }
    let usable: Vec<(usize, f64)> = points.iter().copied().filter(|p| p.0 >= 1).collect();
    if usable.len() < window {
        return Err(Error::InsufficientData {
            needed: window,
            found: usable.len(),
        });
    }
    let tail_start = usable.len() - window;
    let mut fit = RateFit {
        mode,
        points_used: window,
        running_avg_slope: None,
        pointwise_slope: None,
        ratio_max: None,
        ratio_mean: None,
    };
    match mode {
        RateMode::Sublinear => {
            let mut acc = 0.0;
            let mut avg = Vec::with_capacity(usable.len());
            for (j, &(k, v)) in usable.iter().enumerate() {
                acc += v;
                avg.push((k, acc / (j + 1) as f64));
            }
            let xy: Vec<(f64, f64)> = avg[tail_start..]
                .iter()
                .filter(|p| p.1 > 0.0)
                .map(|&(k, a)| ((k as f64).ln(), a.ln()))
                .collect();
            fit.running_avg_slope = ls_slope(&xy);
            let xy: Vec<(f64, f64)> = usable[tail_start..]
                .iter()
                .filter(|p| p.1 > 0.0)
                .map(|&(k, v)| ((k as f64).ln(), v.ln()))
                .collect();
            fit.pointwise_slope = ls_slope(&xy);
        }
        RateMode::Linear => {
            let tail = &usable[tail_start..];
            let ratios: Vec<f64> = tail
                .windows(2)
                .filter(|p| p[0].1 > 0.0 && p[1].1 > 0.0)
                .map(|p| (p[1].1 / p[0].1).powf(1.0 / (p[1].0 - p[0].0) as f64))
                .collect();
            fit.ratio_max = ratios.iter().copied().reduce(f64::max);
            let (first, last) = (tail[0], tail[tail.len() - 1]);
            if first.1 > 0.0 && last.1 > 0.0 {
                fit.ratio_mean = Some((last.1 / first.1).powf(1.0 / (last.0 - first.0) as f64));
            }
        }
    }
    Ok(fit)
}

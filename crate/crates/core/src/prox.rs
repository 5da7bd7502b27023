//! Proximal operators for the convex parts `f` and `gᵢ`.
//!
//! `prox_h^η(z) = argmin_u h(u) + ‖u − z‖² / (2η)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::all_finite;

pub type ProxFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
/// `(x, v) ↦ γ ∈ ∂h(x)` minimizing `‖γ + v‖`.
pub type SelectionFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

fn check_finite(z: &[f64]) -> Result<()> {
    if all_finite(z) {
        Ok(())
    } else {
        Err(Error::NonFinite("non-finite operand"))
    }
}

/// `z / (1 + ηλ)`, the prox of `(λ/2)‖u‖²`.
pub fn prox_quadratic(z: &[f64], eta: f64, lambda: f64) -> Result<Vec<f64>> {
    check_finite(z)?;
    if !(eta > 0.0) || !(lambda >= 0.0) || !eta.is_finite() || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "prox_quadratic needs eta > 0 and lambda >= 0, got eta={eta}, lambda={lambda}"
        )));
    }
    let s = 1.0 / (1.0 + eta * lambda);
    Ok(z.iter().map(|x| x * s).collect())
}

/// Projection onto `{u : ‖u‖_∞ ≤ radius}`. The step `eta` is ignored: the prox
/// of an indicator is the projection for every step size.
pub fn prox_box(z: &[f64], _eta: f64, radius: f64) -> Result<Vec<f64>> {
    check_finite(z)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "box radius must be positive, got {radius}"
        )));
    }
    Ok(z.iter().map(|x| x.clamp(-radius, radius)).collect())
}

pub fn prox_zero(z: &[f64], _eta: f64) -> Vec<f64> {
    z.to_vec()
}

/// A user-supplied prox with an optional minimum-norm subgradient selector.
#[derive(Clone)]
pub struct CustomProx {
    pub name: String,
    pub prox: ProxFn,
    pub selection: Option<SelectionFn>,
}

/// The convex term attached to `w` (as `f`) or to a block `δᵢ` (as `gᵢ`).
#[derive(Clone)]
pub enum Prox {
    Zero,
    /// `(λ/2)‖u‖²`
    Quadratic { lambda: f64 },
    /// Indicator of the ℓ∞ ball of the given radius.
    Box { radius: f64 },
    Custom(CustomProx),
}

impl fmt::Debug for Prox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prox::Zero => write!(f, "Zero"),
            Prox::Quadratic { lambda } => write!(f, "Quadratic {{ lambda: {lambda} }}"),
            Prox::Box { radius } => write!(f, "Box {{ radius: {radius} }}"),
            Prox::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl Prox {
    pub fn apply(&self, z: &[f64], eta: f64) -> Result<Vec<f64>> {
        match self {
            Prox::Zero => {
                check_finite(z)?;
                Ok(prox_zero(z, eta))
            }
            Prox::Quadratic { lambda } => prox_quadratic(z, eta, *lambda),
            Prox::Box { radius } => prox_box(z, eta, *radius),
            Prox::Custom(c) => {
                check_finite(z)?;
                Ok((c.prox)(z, eta))
            }
        }
    }

    pub fn box_radius(&self) -> Option<f64> {
        match self {
            Prox::Box { radius } => Some(*radius),
            _ => None,
        }
    }

    /// Whether `x` lies in the domain of the term (always true except for
    /// indicators).
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Prox::Box { radius } => x.iter().all(|v| v.abs() <= *radius),
            _ => true,
        }
    }

    /// Minimum-norm selection: returns `γ ∈ ∂h(x)` minimizing `‖γ + v‖`.
    ///
    /// For the box indicator the normal cone is handled coordinate-wise; a
    /// coordinate at (or beyond) `±radius` is treated as active.
    pub fn select_subgradient(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                what: "subgradient selection",
                expected: x.len(),
                found: v.len(),
            });
        }
        match self {
            Prox::Zero => Ok(vec![0.0; x.len()]),
            Prox::Quadratic { lambda } => Ok(x.iter().map(|xi| lambda * xi).collect()),
            Prox::Box { radius } => Ok(x
                .iter()
                .zip(v)
                .map(|(&xi, &vi)| {
                    if xi >= *radius {
                        // normal cone [0, ∞)
                        (-vi).max(0.0)
                    } else if xi <= -*radius {
                        // normal cone (−∞, 0]
                        (-vi).min(0.0)
                    } else {
                        0.0
                    }
                })
                .collect()),
            Prox::Custom(c) => match &c.selection {
                Some(sel) => Ok(sel(x, v)),
                None => Err(Error::Unsupported(format!(
                    "prox '{}' has no subgradient selection oracle",
                    c.name
                ))),
            },
        }
    }
}

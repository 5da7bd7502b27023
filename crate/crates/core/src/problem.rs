//! The separable minimax template
//! `min_w max_δ f(w) + Σᵢ φᵢ(w, δᵢ) − Σᵢ gᵢ(δᵢ)` and its oracle bundle.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add_assign, all_finite};
use crate::prox::{CustomProx, Prox};

/// `(i, w, δᵢ) ↦ ∇φᵢ` with respect to `w` or to `δᵢ`.
pub type BlockGradFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// `(i, w, δᵢ) ↦ φᵢ(w, δᵢ)`.
pub type BlockValueFn = Arc<dyn Fn(usize, &[f64], &[f64]) -> f64 + Send + Sync>;

/// `δ = (δ₁, …, δₙ)` stored contiguously with a per-block view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockVector {
    data: Vec<f64>,
    offsets: Vec<usize>,
}

impl BlockVector {
    pub fn zeros(dims: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        offsets.push(0);
        for d in dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        Self {
            data: vec![0.0; total],
            offsets,
        }
    }

    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Self {
        let dims: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let mut out = Self::zeros(&dims);
        for (i, b) in blocks.iter().enumerate() {
            out.block_mut(i).copy_from_slice(b);
        }
        out
    }

    pub fn from_flat(flat: Vec<f64>, dims: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().sum();
        if flat.len() != total {
            return Err(Error::DimensionMismatch {
                what: "flat block vector",
                expected: total,
                found: flat.len(),
            });
        }
        let mut out = Self::zeros(dims);
        out.data = flat;
        Ok(out)
    }

    pub fn n_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dims(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Lipschitz constants of `∇φ` (Assumption-style block constants).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Lipschitz {
    pub l11: f64,
    pub l12: f64,
    pub l22: f64,
}

impl Lipschitz {
    pub fn new(l11: f64, l12: f64, l22: f64) -> Self {
        Self { l11, l12, l22 }
    }

    /// `L = max{L₁₁, L₁₂, L₂₂}`
    pub fn max(&self) -> f64 {
        self.l11.max(self.l12).max(self.l22)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.l11 * s, self.l12 * s, self.l22 * s)
    }
}

/// A primal-dual pair `(w, δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub w: Vec<f64>,
    pub delta: BlockVector,
}

/// Oracle bundle for one minimax instance. Immutable after construction and
/// cheap to clone (oracles are reference counted).
#[derive(Clone)]
pub struct MinimaxProblem {
    dim_w: usize,
    block_dims: Vec<usize>,
    prox_f: Prox,
    prox_g: Vec<Prox>,
    grad_w_block: BlockGradFn,
    grad_delta_block: BlockGradFn,
    value_block: Option<BlockValueFn>,
    lipschitz: Lipschitz,
    known_solution: Option<Point>,
    initial: Point,
}

impl fmt::Debug for MinimaxProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MinimaxProblem")
            .field("dim_w", &self.dim_w)
            .field("block_dims", &self.block_dims)
            .field("prox_f", &self.prox_f)
            .field("prox_g", &self.prox_g)
            .field("lipschitz", &self.lipschitz)
            .field("has_known_solution", &self.known_solution.is_some())
            .finish()
    }
}

impl MinimaxProblem {
    pub fn new(
        dim_w: usize,
        block_dims: Vec<usize>,
        prox_f: Prox,
        prox_g: Vec<Prox>,
        grad_w_block: BlockGradFn,
        grad_delta_block: BlockGradFn,
        lipschitz: Lipschitz,
    ) -> Result<Self> {
        if dim_w == 0 {
            return Err(Error::InvalidConfig("dim_w must be positive".into()));
        }
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::InvalidConfig(
                "need at least one block, all of positive dimension".into(),
            ));
        }
        if prox_g.len() != block_dims.len() {
            return Err(Error::DimensionMismatch {
                what: "prox_g count",
                expected: block_dims.len(),
                found: prox_g.len(),
            });
        }
        for c in [lipschitz.l11, lipschitz.l12, lipschitz.l22] {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "Lipschitz constants must be finite and nonnegative, got {lipschitz:?}"
                )));
            }
        }
        let mut initial = Point {
            w: vec![0.0; dim_w],
            delta: BlockVector::zeros(&block_dims),
        };
        // a zero start is feasible for every supported g
        for (i, g) in prox_g.iter().enumerate() {
            let p = g.apply(initial.delta.block(i), 1.0)?;
            initial.delta.block_mut(i).copy_from_slice(&p);
        }
        Ok(Self {
            dim_w,
            block_dims,
            prox_f,
            prox_g,
            grad_w_block,
            grad_delta_block,
            value_block: None,
            lipschitz,
            known_solution: None,
            initial,
        })
    }

    pub fn with_value(mut self, value: BlockValueFn) -> Self {
        self.value_block = Some(value);
        self
    }

    pub fn with_known_solution(mut self, w: Vec<f64>, delta: BlockVector) -> Result<Self> {
        self.check_point(&w, &delta)?;
        self.known_solution = Some(Point { w, delta });
        Ok(self)
    }

    pub fn with_initial_point(mut self, w: Vec<f64>, delta: BlockVector) -> Result<Self> {
        self.check_point(&w, &delta)?;
        self.initial = Point { w, delta };
        Ok(self)
    }

    pub fn with_lipschitz(mut self, lipschitz: Lipschitz) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    fn check_point(&self, w: &[f64], delta: &BlockVector) -> Result<()> {
        if w.len() != self.dim_w {
            return Err(Error::DimensionMismatch {
                what: "w",
                expected: self.dim_w,
                found: w.len(),
            });
        }
        if delta.dims() != self.block_dims {
            return Err(Error::DimensionMismatch {
                what: "delta blocks",
                expected: self.block_dims.len(),
                found: delta.n_blocks(),
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.block_dims.len()
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn prox_f(&self) -> &Prox {
        &self.prox_f
    }

    pub fn prox_g(&self, i: usize) -> &Prox {
        &self.prox_g[i]
    }

    pub fn lipschitz(&self) -> Lipschitz {
        self.lipschitz
    }

    pub fn known_solution(&self) -> Option<&Point> {
        self.known_solution.as_ref()
    }

    pub fn initial_point(&self) -> &Point {
        &self.initial
    }

    pub fn has_value(&self) -> bool {
        self.value_block.is_some()
    }

    /// `∇_w φᵢ(w, δᵢ)`
    pub fn grad_w_block(&self, i: usize, w: &[f64], delta_i: &[f64]) -> Result<Vec<f64>> {
        let g = (self.grad_w_block)(i, w, delta_i);
        if g.len() != self.dim_w {
            return Err(Error::DimensionMismatch {
                what: "grad_w_block output",
                expected: self.dim_w,
                found: g.len(),
            });
        }
        if !all_finite(&g) {
            return Err(Error::NonFinite("grad_w_block output"));
        }
        Ok(g)
    }

    /// `∇_{δᵢ} φᵢ(w, δᵢ)`
    pub fn grad_delta_block(&self, i: usize, w: &[f64], delta_i: &[f64]) -> Result<Vec<f64>> {
        let g = (self.grad_delta_block)(i, w, delta_i);
        if g.len() != self.block_dims[i] {
            return Err(Error::DimensionMismatch {
                what: "grad_delta_block output",
                expected: self.block_dims[i],
                found: g.len(),
            });
        }
        if !all_finite(&g) {
            return Err(Error::NonFinite("grad_delta_block output"));
        }
        Ok(g)
    }

    /// `φᵢ(w, δᵢ)` when a value oracle was supplied.
    pub fn value_block(&self, i: usize, w: &[f64], delta_i: &[f64]) -> Option<f64> {
        self.value_block.as_ref().map(|v| v(i, w, delta_i))
    }

    /// `∇_w φ(w, δ) = Σᵢ ∇_w φᵢ(w, δᵢ)`
    pub fn grad_w(&self, w: &[f64], delta: &BlockVector) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.dim_w];
        for i in 0..self.n() {
            add_assign(&mut acc, &self.grad_w_block(i, w, delta.block(i))?);
        }
        Ok(acc)
    }

    /// `∇_δ φ(w, δ)` block by block.
    pub fn grad_delta(&self, w: &[f64], delta: &BlockVector) -> Result<BlockVector> {
        let mut out = BlockVector::zeros(&self.block_dims);
        for i in 0..self.n() {
            let g = self.grad_delta_block(i, w, delta.block(i))?;
            out.block_mut(i).copy_from_slice(&g);
        }
        Ok(out)
    }

    /// `φ(w, δ)` when a value oracle was supplied.
    pub fn value(&self, w: &[f64], delta: &BlockVector) -> Option<f64> {
        let v = self.value_block.as_ref()?;
        Some((0..self.n()).map(|i| v(i, w, delta.block(i))).sum())
    }

    /// Single-block view of the same problem (`n = 1`), used by the
    /// deterministic method.
    pub fn merged(&self) -> MinimaxProblem {
        if self.n() == 1 {
            return self.clone();
        }
        let dims = self.block_dims.clone();
        let total: usize = dims.iter().sum();
        let offsets: Arc<Vec<usize>> = Arc::new(
            std::iter::once(0)
                .chain(dims.iter().scan(0, |s, d| {
                    *s += d;
                    Some(*s)
                }))
                .collect(),
        );
        let n = self.n();

        let gw = self.grad_w_block.clone();
        let off = offsets.clone();
        let dim_w = self.dim_w;
        let grad_w_block: BlockGradFn = Arc::new(move |_, w, d| {
            let mut acc = vec![0.0; dim_w];
            for i in 0..n {
                add_assign(&mut acc, &gw(i, w, &d[off[i]..off[i + 1]]));
            }
            acc
        });
        let gd = self.grad_delta_block.clone();
        let off = offsets.clone();
        let grad_delta_block: BlockGradFn = Arc::new(move |_, w, d| {
            let mut out = Vec::with_capacity(d.len());
            for i in 0..n {
                out.extend(gd(i, w, &d[off[i]..off[i + 1]]));
            }
            out
        });
        let value_block = self.value_block.clone().map(|v| {
            let off = offsets.clone();
            Arc::new(move |_: usize, w: &[f64], d: &[f64]| {
                (0..n).map(|i| v(i, w, &d[off[i]..off[i + 1]])).sum::<f64>()
            }) as BlockValueFn
        });
        let prox_g = merge_prox(&self.prox_g, offsets);
        let flatten = |p: &Point| Point {
            w: p.w.clone(),
            delta: BlockVector::from_flat(p.delta.flat().to_vec(), &[total]).unwrap(),
        };
        MinimaxProblem {
            dim_w,
            block_dims: vec![total],
            prox_f: self.prox_f.clone(),
            prox_g: vec![prox_g],
            grad_w_block,
            grad_delta_block,
            value_block,
            lipschitz: self.lipschitz,
            known_solution: self.known_solution.as_ref().map(flatten),
            initial: flatten(&self.initial),
        }
    }
}

fn same_simple(a: &Prox, b: &Prox) -> bool {
    match (a, b) {
        (Prox::Zero, Prox::Zero) => true,
        (Prox::Quadratic { lambda: x }, Prox::Quadratic { lambda: y }) => x == y,
        (Prox::Box { radius: x }, Prox::Box { radius: y }) => x == y,
        _ => false,
    }
}

fn merge_prox(parts: &[Prox], offsets: Arc<Vec<usize>>) -> Prox {
    if parts.iter().all(|p| same_simple(p, &parts[0])) {
        return parts[0].clone();
    }
    let ps = Arc::new(parts.to_vec());
    let (ps2, off2) = (ps.clone(), offsets.clone());
    Prox::Custom(CustomProx {
        name: "blockwise".into(),
        prox: Arc::new(move |z, eta| {
            let mut out = Vec::with_capacity(z.len());
            for (i, p) in ps.iter().enumerate() {
                out.extend(
                    p.apply(&z[offsets[i]..offsets[i + 1]], eta)
                        .unwrap_or_else(|_| vec![f64::NAN; offsets[i + 1] - offsets[i]]),
                );
            }
            out
        }),
        selection: Some(Arc::new(move |x, v| {
            let mut out = Vec::with_capacity(x.len());
            for (i, p) in ps2.iter().enumerate() {
                let r = off2[i]..off2[i + 1];
                out.extend(
                    p.select_subgradient(&x[r.clone()], &v[r.clone()])
                        .unwrap_or_else(|_| vec![f64::NAN; r.len()]),
                );
            }
            out
        })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> MinimaxProblem {
        // φᵢ(w, δᵢ) = (i + 1) w δᵢ, scalar blocks
        MinimaxProblem::new(
            1,
            vec![1; n],
            Prox::Zero,
            vec![Prox::Zero; n],
            Arc::new(|i, _w, d| vec![(i as f64 + 1.0) * d[0]]),
            Arc::new(|i, w, _d| vec![(i as f64 + 1.0) * w[0]]),
            Lipschitz::new(0.0, 3.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn block_vector_views_agree() {
        let mut b = BlockVector::from_blocks(vec![vec![1.0, 2.0], vec![3.0]]);
        assert_eq!(b.flat(), &[1.0, 2.0, 3.0]);
        b.block_mut(1)[0] = 7.0;
        assert_eq!(b.flat(), &[1.0, 2.0, 7.0]);
        assert_eq!(b.dims(), vec![2, 1]);
        assert!(BlockVector::from_flat(vec![1.0], &[2]).is_err());
    }

    #[test]
    fn lipschitz_max_is_recomputed() {
        let l = Lipschitz::new(0.5, 2.0, 1.0);
        assert_eq!(l.max(), 2.0);
    }

    #[test]
    fn full_gradients_sum_blocks() {
        let p = toy(3);
        let d = BlockVector::from_blocks(vec![vec![1.0], vec![1.0], vec![1.0]]);
        assert_eq!(p.grad_w(&[2.0], &d).unwrap(), vec![6.0]);
        assert_eq!(p.grad_delta(&[2.0], &d).unwrap().flat(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn merged_view_matches_blocks() {
        let p = toy(3);
        let m = p.merged();
        assert_eq!(m.n(), 1);
        let d = [0.5, -1.0, 2.0];
        assert_eq!(m.grad_w_block(0, &[1.5], &d).unwrap(), vec![0.5 - 2.0 + 6.0]);
        assert_eq!(m.grad_delta_block(0, &[1.5], &d).unwrap(), vec![1.5, 3.0, 4.5]);
    }

    #[test]
    fn bad_oracle_dimension_is_reported() {
        let p = MinimaxProblem::new(
            2,
            vec![1],
            Prox::Zero,
            vec![Prox::Zero],
            Arc::new(|_, _, _| vec![0.0]),
            Arc::new(|_, _, _| vec![0.0]),
            Lipschitz::default(),
        )
        .unwrap();
        assert!(matches!(
            p.grad_w_block(0, &[0.0, 0.0], &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

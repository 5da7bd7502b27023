//! Benchmark problems with analytically known structure.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis::{saddle_residual_sq, MviKind, SamplingDomain};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq, Matrix};
use crate::nn::{loss_and_grads, LossGrads, MlpParams, MlpShape, ToyDataset};
use crate::problem::{BlockGradFn, BlockValueFn, BlockVector, Lipschitz, MinimaxProblem, Point};
use crate::prox::Prox;
use crate::rng::SeededRng;

const SPECTRAL_TOL: f64 = 1e-10;

/// Serializable description of a convex term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProxSpec {
    #[default]
    Zero,
    Quadratic {
        lambda: f64,
    },
    Box {
        radius: f64,
    },
}

impl ProxSpec {
    pub fn to_prox(self) -> Prox {
        match self {
            ProxSpec::Zero => Prox::Zero,
            ProxSpec::Quadratic { lambda } => Prox::Quadratic { lambda },
            ProxSpec::Box { radius } => Prox::Box { radius },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemFamily {
    /// `⟨Aw, δ⟩ + f(w) − g(δ)`
    Bilinear {
        a: Matrix,
        #[serde(default)]
        f: ProxSpec,
        #[serde(default)]
        g: ProxSpec,
    },
    /// `(a/2)‖w‖² + b⟨w, δ⟩ − (c/2)‖δ‖²`
    QuadraticGame { a: f64, b: f64, c: f64, dim: usize },
    /// `Σᵢ ⟨Aᵢw, δᵢ⟩`
    BlockBilinear {
        blocks: Vec<Matrix>,
        #[serde(default)]
        f: ProxSpec,
        #[serde(default)]
        g: ProxSpec,
    },
    /// `Σᵢ (a/2n)‖w‖² + b⟨w, δᵢ⟩ − (c/2)‖δᵢ‖²`
    BlockQuadraticGame {
        n: usize,
        a: f64,
        b: f64,
        c: f64,
        dim: usize,
    },
    /// Adversarial training of a small MLP on the two-blob dataset.
    ToyAt {
        eps: f64,
        #[serde(default = "default_batches")]
        batches: usize,
        #[serde(default = "default_per_class")]
        per_class: usize,
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default)]
        data_seed: u64,
        #[serde(default)]
        init_seed: u64,
    },
}

fn default_batches() -> usize {
    10
}
fn default_per_class() -> usize {
    100
}
fn default_hidden() -> usize {
    16
}

/// A certified MVI constant and the domain it was certified on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedConstant {
    pub kind: MviKind,
    pub value: f64,
    pub domain: SamplingDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(flatten)]
    pub family: ProblemFamily,
    /// Starting point, `w` then flattened `δ`; defaults to all ones, clipped
    /// to the box for box-constrained blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified: Option<CertifiedConstant>,
}

impl ProblemSpec {
    pub fn new(family: ProblemFamily) -> Self {
        Self {
            family,
            initial: None,
            certified: None,
        }
    }

    pub fn build(&self) -> Result<MinimaxProblem> {
        let p = match &self.family {
            ProblemFamily::Bilinear { a, f, g } => make_bilinear(a.clone(), f.to_prox(), g.to_prox())?,
            ProblemFamily::QuadraticGame { a, b, c, dim } => make_quadratic_game(*a, *b, *c, *dim)?,
            ProblemFamily::BlockBilinear { blocks, f, g } => {
                BilinearGame::new(blocks.clone(), f.to_prox(), g.to_prox())?.problem()?
            }
            ProblemFamily::BlockQuadraticGame { n, a, b, c, dim } => {
                make_block_quadratic_game(*n, *a, *b, *c, *dim)?
            }
            ProblemFamily::ToyAt {
                eps,
                batches,
                per_class,
                hidden,
                data_seed,
                init_seed,
            } => {
                let data = ToyDataset::blobs(*per_class, *data_seed);
                make_toy_at(&data, MlpShape::toy(*hidden), *eps, *batches, *init_seed)?
            }
        };
        match &self.initial {
            None => Ok(p),
            Some(z) => {
                let dw = p.dim_w();
                if z.len() != dw + p.block_dims().iter().sum::<usize>() {
                    return Err(Error::DimensionMismatch {
                        what: "initial point",
                        expected: dw + p.block_dims().iter().sum::<usize>(),
                        found: z.len(),
                    });
                }
                let delta = BlockVector::from_flat(z[dw..].to_vec(), p.block_dims())?;
                let dims = p.block_dims().to_vec();
                for i in 0..dims.len() {
                    if !p.prox_g(i).contains(delta.block(i)) {
                        return Err(Error::InvalidConfig(format!(
                            "initial delta block {i} is infeasible"
                        )));
                    }
                }
                p.with_initial_point(z[..dw].to_vec(), delta)
            }
        }
    }
}

impl ProblemSpec {
    /// The explicit bilinear form of a bilinear family, for the SPDHG path.
    pub fn bilinear_game(&self) -> Result<BilinearGame> {
        let game = match &self.family {
            ProblemFamily::Bilinear { a, f, g } => BilinearGame::new(vec![a.clone()], f.to_prox(), g.to_prox())?,
            ProblemFamily::BlockBilinear { blocks, f, g } => {
                BilinearGame::new(blocks.clone(), f.to_prox(), g.to_prox())?
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "SPDHG needs a bilinear problem, got {}",
                    family_name(other)
                )))
            }
        };
        // build() validates the initial point
        let p = self.build()?;
        let start = p.initial_point().clone();
        Ok(game.with_initial_point(start.w, start.delta))
    }
}

pub fn family_name(family: &ProblemFamily) -> &'static str {
    match family {
        ProblemFamily::Bilinear { .. } => "bilinear",
        ProblemFamily::QuadraticGame { .. } => "quadratic_game",
        ProblemFamily::BlockBilinear { .. } => "block_bilinear",
        ProblemFamily::BlockQuadraticGame { .. } => "block_quadratic_game",
        ProblemFamily::ToyAt { .. } => "toy_at",
    }
}

/// Entries drawn i.i.d. from the standard normal distribution.
pub fn random_gaussian_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn ones_start(problem: MinimaxProblem) -> Result<MinimaxProblem> {
    let dims = problem.block_dims().to_vec();
    let mut delta = BlockVector::zeros(&dims);
    for i in 0..dims.len() {
        let r = problem.prox_g(i).box_radius().unwrap_or(1.0).min(1.0);
        delta.block_mut(i).fill(r);
    }
    let w = vec![1.0; problem.dim_w()];
    problem.with_initial_point(w, delta)
}

fn origin(dim_w: usize, dims: &[usize]) -> (Vec<f64>, BlockVector) {
    (vec![0.0; dim_w], BlockVector::zeros(dims))
}

/// Bilinear game with block couplings `Aᵢ` (`δᵢ`-dimension × `w`-dimension).
#[derive(Debug, Clone)]
pub struct BilinearGame {
    pub blocks: Vec<Matrix>,
    pub prox_f: Prox,
    pub prox_g: Vec<Prox>,
    pub initial: Option<Point>,
}

impl BilinearGame {
    pub fn new(blocks: Vec<Matrix>, f: Prox, g: Prox) -> Result<Self> {
        let n = blocks.len();
        Self {
            blocks,
            prox_f: f,
            prox_g: vec![g; n],
            initial: None,
        }
        .checked()
    }

    pub fn with_initial_point(mut self, w: Vec<f64>, delta: BlockVector) -> Self {
        self.initial = Some(Point { w, delta });
        self
    }

    fn checked(self) -> Result<Self> {
        let first = self
            .blocks
            .first()
            .ok_or_else(|| Error::InvalidConfig("bilinear game needs at least one block".into()))?;
        let dim_w = first.cols;
        for a in &self.blocks {
            if a.cols != dim_w {
                return Err(Error::DimensionMismatch {
                    what: "coupling block columns",
                    expected: dim_w,
                    found: a.cols,
                });
            }
            if !a.is_finite() {
                return Err(Error::NonFinite("coupling matrix"));
            }
        }
        Ok(self)
    }

    /// `L₁₂ = ‖[A₁; …; Aₙ]‖₂`, the coupling norm with respect to the full `δ`.
    pub fn coupling_norm(&self) -> f64 {
        let dim_w = self.blocks[0].cols;
        let rows: usize = self.blocks.iter().map(|a| a.rows).sum();
        let data: Vec<f64> = self.blocks.iter().flat_map(|a| a.data.iter().copied()).collect();
        Matrix::new(rows, dim_w, data).spectral_norm(SPECTRAL_TOL)
    }

    pub fn problem(&self) -> Result<MinimaxProblem> {
        let dim_w = self.blocks[0].cols;
        let dims: Vec<usize> = self.blocks.iter().map(|a| a.rows).collect();
        let blocks = Arc::new(self.blocks.clone());
        let b = blocks.clone();
        let grad_w: BlockGradFn = Arc::new(move |i, _w, d| b[i].tmatvec(d));
        let b = blocks.clone();
        let grad_d: BlockGradFn = Arc::new(move |i, w, _d| b[i].matvec(w));
        let b = blocks;
        let value: BlockValueFn = Arc::new(move |i, w, d| dot(&b[i].matvec(w), d));
        let p = MinimaxProblem::new(
            dim_w,
            dims.clone(),
            self.prox_f.clone(),
            self.prox_g.clone(),
            grad_w,
            grad_d,
            Lipschitz::new(0.0, self.coupling_norm(), 0.0),
        )?
        .with_value(value);
        let (w0, d0) = origin(dim_w, &dims);
        let p = p.with_known_solution(w0, d0)?;
        match &self.initial {
            Some(s) => p.with_initial_point(s.w.clone(), s.delta.clone()),
            None => ones_start(p),
        }
    }
}

/// `φ(w, δ) = ⟨Aw, δ⟩` with `f`, `g` from {zero, quadratic, box}. The origin
/// is a saddle point for every such choice.
pub fn make_bilinear(a: Matrix, f: Prox, g: Prox) -> Result<MinimaxProblem> {
    BilinearGame::new(vec![a], f, g)?.problem()
}

pub fn make_block_bilinear(blocks: Vec<Matrix>) -> Result<MinimaxProblem> {
    BilinearGame::new(blocks, Prox::Zero, Prox::Zero)?.problem()
}

/// `φ(w, δ) = (a/2)‖w‖² + b⟨w, δ⟩ − (c/2)‖δ‖²` on `ℝ^dim × ℝ^dim`, `f = g = 0`.
pub fn make_quadratic_game(a: f64, b: f64, c: f64, dim: usize) -> Result<MinimaxProblem> {
    make_block_quadratic_game(1, a, b, c, dim)
}

/// `n` blocks of dimension `dim`, `φᵢ = (a/2n)‖w‖² + b⟨w, δᵢ⟩ − (c/2)‖δᵢ‖²`.
/// Constants: `L₁₁ = |a|`, `L₁₂ = |b|√n`, `L₂₂ = |c|`, and
/// `⟨F(z), z⟩ = a‖w‖² + c‖δ‖²`.
pub fn make_block_quadratic_game(n: usize, a: f64, b: f64, c: f64, dim: usize) -> Result<MinimaxProblem> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidConfig("quadratic game needs n >= 1 and dim >= 1".into()));
    }
    if ![a, b, c].iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("quadratic game coefficients"));
    }
    let nf = n as f64;
    let grad_w: BlockGradFn = Arc::new(move |_, w, d| {
        w.iter().zip(d).map(|(wj, dj)| a / nf * wj + b * dj).collect()
    });
    let grad_d: BlockGradFn = Arc::new(move |_, w, d| {
        w.iter().zip(d).map(|(wj, dj)| b * wj - c * dj).collect()
    });
    let value: BlockValueFn = Arc::new(move |_, w, d| {
        0.5 * a / nf * norm_sq(w) + b * dot(w, d) - 0.5 * c * norm_sq(d)
    });
    let dims = vec![dim; n];
    let p = MinimaxProblem::new(
        dim,
        dims.clone(),
        Prox::Zero,
        vec![Prox::Zero; n],
        grad_w,
        grad_d,
        Lipschitz::new(a.abs(), b.abs() * nf.sqrt(), c.abs()),
    )?
    .with_value(value);
    let (w0, d0) = origin(dim, &dims);
    ones_start(p.with_known_solution(w0, d0)?)
}

/// `φᵢ = (1/2n) wᵀPw + δᵢᵀBᵢw − ½ δᵢᵀQᵢδᵢ`, `f = g = 0`. `P` and every `Qᵢ`
/// must be symmetric. Constants: `L₁₁ = ‖P‖₂`, `L₁₂ = ‖[B₁; …; Bₙ]‖₂`,
/// `L₂₂ = maxᵢ ‖Qᵢ‖₂`.
pub fn make_quadratic_coupling(p: Matrix, couplings: Vec<(Matrix, Matrix)>) -> Result<MinimaxProblem> {
    let dim_w = p.cols;
    if p.rows != dim_w {
        return Err(Error::DimensionMismatch {
            what: "P rows",
            expected: dim_w,
            found: p.rows,
        });
    }
    if couplings.is_empty() {
        return Err(Error::InvalidConfig("need at least one coupling block".into()));
    }
    for (b, q) in &couplings {
        if b.cols != dim_w {
            return Err(Error::DimensionMismatch {
                what: "B columns",
                expected: dim_w,
                found: b.cols,
            });
        }
        if q.rows != b.rows || q.cols != b.rows {
            return Err(Error::DimensionMismatch {
                what: "Q shape",
                expected: b.rows,
                found: q.rows,
            });
        }
    }
    let n = couplings.len();
    let dims: Vec<usize> = couplings.iter().map(|(b, _)| b.rows).collect();
    let stacked = Matrix::new(
        dims.iter().sum(),
        dim_w,
        couplings.iter().flat_map(|(b, _)| b.data.iter().copied()).collect(),
    );
    let lip = Lipschitz::new(
        p.spectral_norm(SPECTRAL_TOL),
        stacked.spectral_norm(SPECTRAL_TOL),
        couplings
            .iter()
            .map(|(_, q)| q.spectral_norm(SPECTRAL_TOL))
            .fold(0.0, f64::max),
    );
    let scale = 1.0 / n as f64;
    let shared = Arc::new((p, couplings));
    let s = shared.clone();
    let grad_w: BlockGradFn = Arc::new(move |i, w, d| {
        let (p, c) = &*s;
        let pw = p.matvec(w);
        let bt = c[i].0.tmatvec(d);
        pw.iter().zip(&bt).map(|(x, y)| scale * x + y).collect()
    });
    let s = shared.clone();
    let grad_d: BlockGradFn = Arc::new(move |i, w, d| {
        let (b, q) = &s.1[i];
        let bw = b.matvec(w);
        let qd = q.matvec(d);
        bw.iter().zip(&qd).map(|(x, y)| x - y).collect()
    });
    let s = shared;
    let value: BlockValueFn = Arc::new(move |i, w, d| {
        let (p, c) = &*s;
        let (b, q) = &c[i];
        0.5 * scale * dot(w, &p.matvec(w)) + dot(d, &b.matvec(w)) - 0.5 * dot(d, &q.matvec(d))
    });
    let prob = MinimaxProblem::new(dim_w, dims.clone(), Prox::Zero, vec![Prox::Zero; n], grad_w, grad_d, lip)?
        .with_value(value);
    let (w0, d0) = origin(dim_w, &dims);
    ones_start(prob.with_known_solution(w0, d0)?)
}

/// Outcome of [`oracle_self_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfTestReport {
    pub points: usize,
    /// Largest `‖fd − ∇‖ / max(1, ‖∇‖)` over blocks and points (0 when the
    /// problem has no value oracle).
    pub max_rel_error: f64,
    pub known_solution_residual: Option<f64>,
}

pub const SELF_TEST_TOL: f64 = 1e-6;

/// Checks finiteness and dimensions of every oracle output at random points
/// and compares block gradients against central finite differences of the
/// value oracle.
pub fn oracle_self_test(
    problem: &MinimaxProblem,
    domain: &SamplingDomain,
    points: usize,
    seed: u64,
) -> Result<SelfTestReport> {
    let mut rng = SeededRng::new(seed);
    let bounds = domain.bounds(problem)?;
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let z: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.uniform(lo, hi)).collect();
        let pt = crate::analysis::split_point(problem, z)?;
        for i in 0..problem.n() {
            let di = pt.delta.block(i);
            let gw = problem.grad_w_block(i, &pt.w, di)?;
            let gd = problem.grad_delta_block(i, &pt.w, di)?;
            if !gw.iter().chain(&gd).all(|x| x.is_finite()) {
                return Err(Error::NonFinite("oracle output"));
            }
            if problem.value_block(i, &pt.w, di).is_none() {
                continue;
            }
            let val = |w: &[f64], d: &[f64]| problem.value_block(i, w, d).unwrap_or(f64::NAN);
            let mut fd_w = vec![0.0; gw.len()];
            for j in 0..gw.len() {
                let (mut a, mut b) = (pt.w.clone(), pt.w.clone());
                a[j] += h;
                b[j] -= h;
                fd_w[j] = (val(&a, di) - val(&b, di)) / (2.0 * h);
            }
            let mut fd_d = vec![0.0; gd.len()];
            for j in 0..gd.len() {
                let (mut a, mut b) = (di.to_vec(), di.to_vec());
                a[j] += h;
                b[j] -= h;
                fd_d[j] = (val(&pt.w, &a) - val(&pt.w, &b)) / (2.0 * h);
            }
            for (fd, g) in [(&fd_w, &gw), (&fd_d, &gd)] {
                let err: Vec<f64> = fd.iter().zip(g.iter()).map(|(x, y)| x - y).collect();
                worst = worst.max(norm(&err) / norm(g).max(1.0));
            }
        }
    }
    let known_solution_residual = match problem.known_solution() {
        Some(s) => Some(saddle_residual_sq(problem, &s.w, &s.delta)?.total_sq),
        None => None,
    };
    if worst > SELF_TEST_TOL {
        return Err(Error::InvalidConfig(format!(
            "oracle self-test: finite-difference mismatch {worst:e}"
        )));
    }
    Ok(SelfTestReport {
        points,
        max_rel_error: worst,
        known_solution_residual,
    })
}

/// Sampling box for the parameter part when estimating constants of the
/// toy adversarial-training problem.
pub const TOY_PARAM_DOMAIN: f64 = 1.0;
const TOY_LIPSCHITZ_SAMPLES: usize = 16;

/// Adversarial training as a block minimax problem: the dataset is split into
/// `batches` blocks, `φᵢ(w, δᵢ) = (1/n)·mean CE(xᵢ + δᵢ, yᵢ; w)` with `δᵢ` the
/// perturbations of batch `i` and `gᵢ` the indicator of the `ε`-box. The
/// declared Lipschitz constants are sampled estimates, not bounds.
pub fn make_toy_at(
    data: &ToyDataset,
    shape: MlpShape,
    eps: f64,
    batches: usize,
    init_seed: u64,
) -> Result<MinimaxProblem> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("eps must be > 0, got {eps}")));
    }
    if shape.input_dim() != 2 || shape.classes() != 2 {
        return Err(Error::InvalidConfig("toy problem needs a 2-input, 2-class network".into()));
    }
    let ranges = data.batches(batches)?;
    let d = shape.input_dim();
    let parts: Vec<(Vec<f64>, Vec<usize>)> = ranges
        .iter()
        .map(|r| (data.inputs[d * r.start..d * r.end].to_vec(), data.labels[r.clone()].to_vec()))
        .collect();
    let dims: Vec<usize> = parts.iter().map(|p| p.1.len() * d).collect();
    let scale = 1.0 / batches as f64;
    let shared = Arc::new((shape.clone(), parts));

    let eval = {
        let s = shared.clone();
        move |i: usize, w: &[f64], delta: &[f64]| -> Option<LossGrads> {
            let (shape, parts) = &*s;
            let params = MlpParams::from_flat(shape.clone(), w.to_vec()).ok()?;
            let (x, y) = &parts[i];
            let xp: Vec<f64> = x.iter().zip(delta).map(|(a, b)| a + b).collect();
            loss_and_grads(&params, &xp, y).ok()
        }
    };
    let e = eval.clone();
    let n_params = shape.param_count();
    let grad_w: BlockGradFn = Arc::new(move |i, w, delta| match e(i, w, delta) {
        Some(r) => r.grad_params.into_iter().map(|g| scale * g).collect(),
        None => vec![f64::NAN; n_params],
    });
    let e = eval.clone();
    let grad_d: BlockGradFn = Arc::new(move |i, w, delta| match e(i, w, delta) {
        Some(r) => r.grad_input.into_iter().map(|g| scale * g).collect(),
        None => vec![f64::NAN; delta.len()],
    });
    let e = eval;
    let value: BlockValueFn =
        Arc::new(move |i, w, delta| e(i, w, delta).map_or(f64::NAN, |r| scale * r.loss));

    let n = ranges.len();
    let problem = MinimaxProblem::new(
        n_params,
        dims.clone(),
        Prox::Zero,
        vec![Prox::Box { radius: eps }; n],
        grad_w,
        grad_d,
        Lipschitz::new(0.0, 0.0, 0.0),
    )?
    .with_value(value);
    let mut rng = SeededRng::new(crate::rng::derive_seed(init_seed, 0x6c6970));
    let lip = crate::analysis::estimate_lipschitz(
        &problem,
        &SamplingDomain::symmetric(TOY_PARAM_DOMAIN),
        TOY_LIPSCHITZ_SAMPLES,
        &mut rng,
    )?;
    let init = MlpParams::init(shape, init_seed);
    problem
        .with_lipschitz(lip)
        .with_initial_point(init.data, BlockVector::zeros(&dims))
}

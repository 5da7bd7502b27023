//! `check` subcommands: step-size admissibility, MVI certification and the
//! expectation identities / cross-term bound.

use serde::Serialize;
use serde_json::{json, Value};

use sihg::analysis::{check_mvi, verify_expectation_identities, verify_lemma4_bound};
use sihg::rng::{derive_seed, SeededRng};
use sihg::{validate_config, BlockVector};

use crate::config::{Experiment, SolverExperiment};
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Admissibility,
    Mvi,
    Identities,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Admissibility => "admissibility",
            CheckKind::Mvi => "mvi",
            CheckKind::Identities => "identities",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub check: &'static str,
    pub experiment: String,
    pub passed: bool,
    pub report: Value,
    #[serde(skip)]
    pub lines: Vec<String>,
}

pub fn run_check(kind: CheckKind, experiment: &Experiment) -> Result<CheckOutcome> {
    let Experiment::Solver(exp) = experiment else {
        return Err(CliError::Config(format!("check {} needs a solver experiment", kind.name())));
    };
    exp.solver.validate()?;
    let (passed, report, lines) = match kind {
        CheckKind::Admissibility => admissibility(exp)?,
        CheckKind::Mvi => mvi(exp)?,
        CheckKind::Identities => identities(exp)?,
    };
    Ok(CheckOutcome {
        check: kind.name(),
        experiment: exp.name.clone(),
        passed,
        report,
        lines,
    })
}

type Checked = (bool, Value, Vec<String>);

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Config(e.to_string()))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// With `μ > 0` the linear-rate condition `κ ≤ 1/3` is checked; otherwise
/// the sublinear condition at the configured `ρ` together with `θ = 1`.
fn admissibility(exp: &SolverExperiment) -> Result<Checked> {
    let problem = exp.problem.build()?;
    let (rho, mu) = (exp.metrics.rho, exp.metrics.mu);
    let r = validate_config(&problem, &exp.solver, rho, mu);
    let l = problem.lipschitz();
    let mut lines = vec![
        format!("constants: L11 {:e}, L12 {:e}, L22 {:e}, n {}", l.l11, l.l12, l.l22, problem.n()),
        format!("sigma {:e}, tau {:e}, theta {}, kappa {:.6}", exp.solver.sigma, exp.solver.tau, exp.solver.theta, r.kappa),
    ];
    let passed = if mu > 0.0 {
        lines.push(format!(
            "linear rate (mu {mu}): kappa <= 1/3 {}, theta from formula {:.6}",
            verdict(r.thm2_ok),
            r.thm2_theta
        ));
        r.thm2_ok
    } else {
        lines.push(format!(
            "sublinear rate (rho {rho}): kappa < min({:.6}, {:.6}) {}, admissible rho up to {:.6}, theta = 1 {}",
            r.thm1_bound_w,
            r.thm1_bound_delta,
            verdict(r.thm1_ok),
            r.rho_max,
            verdict(r.theta_is_one)
        ));
        r.thm1_ok && r.theta_is_one
    };
    Ok((passed, to_value(&r)?, lines))
}

fn mvi(exp: &SolverExperiment) -> Result<Checked> {
    let problem = exp.problem.build()?;
    let cert = exp
        .problem
        .certified
        .ok_or_else(|| CliError::Config("check mvi needs problem.certified (kind, value, domain)".into()))?;
    let star = problem
        .known_solution()
        .ok_or_else(|| CliError::Config("check mvi needs a problem with a known solution".into()))?;
    let rep = check_mvi(
        &problem,
        star,
        cert.kind,
        cert.value,
        exp.metrics.check.sampler,
        &cert.domain,
        exp.metrics.check.seed,
    )?;
    let lines = vec![format!(
        "{:?} MVI with parameter {} on {}: min margin {:e} over {} samples {}",
        rep.kind,
        rep.parameter,
        rep.domain,
        rep.min_margin,
        rep.samples,
        verdict(rep.certified)
    )];
    Ok((rep.certified, to_value(&rep)?, lines))
}

/// Random instances shaped like the problem's blocks: the identities use a
/// random per-block quadratic, the cross-term bound random iterate tuples
/// with the problem's declared constants.
fn identities(exp: &SolverExperiment) -> Result<Checked> {
    let problem = exp.problem.build()?;
    let opts = exp.metrics.check;
    let dims = problem.block_dims().to_vec();
    let n = dims.len();
    let mut rng = SeededRng::new(derive_seed(opts.seed, 0x6964));
    let rand_blocks = |rng: &mut SeededRng| {
        BlockVector::from_blocks(dims.iter().map(|&d| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect())
    };

    let mut identity_failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..opts.instances {
        let (dk, dh, rf) = (rand_blocks(&mut rng), rand_blocks(&mut rng), rand_blocks(&mut rng));
        let coef: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let r = |i: usize, d: &[f64]| coef[i] * d.iter().map(|x| x * x + x).sum::<f64>();
        let rep = verify_expectation_identities(&r, &dk, &dh, &rf, exp.solver.tau)?;
        for c in [rep.e1, rep.e2, rep.e3] {
            worst = worst.max((c.lhs - c.rhs).abs());
        }
        identity_failures += usize::from(!rep.holds());
    }

    let mut bound_failures = 0;
    let dw = problem.dim_w();
    for _ in 0..opts.instances {
        let mut v = || (0..dw).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<f64>>();
        let (wn, wk, wp) = (v(), v(), v());
        let (dk, dp) = (rand_blocks(&mut rng), rand_blocks(&mut rng));
        let rep = verify_lemma4_bound(&problem, &wn, &wk, &wp, &dk, &dp, exp.solver.sigma, exp.solver.tau)?;
        bound_failures += usize::from(!rep.holds);
    }

    let passed = identity_failures == 0 && bound_failures == 0;
    let lines = vec![
        format!(
            "expectation identities on {} instances (n = {n}): {} failures, max |lhs - rhs| {worst:e} {}",
            opts.instances,
            identity_failures,
            verdict(identity_failures == 0)
        ),
        format!(
            "cross-term bound on {} random tuples: {} failures {}",
            opts.instances,
            bound_failures,
            verdict(bound_failures == 0)
        ),
    ];
    let report = json!({
        "instances": opts.instances,
        "blocks": n,
        "identity_failures": identity_failures,
        "max_identity_error": worst,
        "bound_failures": bound_failures,
    });
    Ok((passed, report, lines))
}

//! Executes experiments and writes their artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use sihg::analysis::{fit_rate, thm1_budget_check, BudgetReport, RateFit, RateMode};
use sihg::linalg::max_abs_diff;
use sihg::nn::{at_train, evaluate, load_params, save_params, EvalReport, MlpShape, ToyDataset, TrainMethod};
use sihg::rng::SeededRng;
use sihg::solvers::{
    dsihg_run_with, mgda_baseline_run_with, msihg_gd_run_with, msihg_run_with, spdhg_bilinear_run_with,
    ssihg_run_with, Observer,
};
use sihg::{linear_rate_theta, validate_config, AdmissibilityReport, MinimaxProblem, Trace};

use crate::config::{Experiment, SolverExperiment, SolverName, TrainingExperiment};
use crate::output::{create_dir, loglog_svg, resolve_output_dir, write_json, write_text, Series, TraceCsv};
use crate::{CliError, Result};

/// Command-line overrides applied on top of the experiment file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub no_timing: bool,
    pub no_plot: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    pub files: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub lines: Vec<String>,
}

pub fn run_experiment(experiment: &Experiment, opts: &RunOptions) -> Result<RunOutcome> {
    let mut experiment = experiment.clone();
    if opts.no_timing {
        experiment.set_timing(false);
    }
    let hash = experiment.hash()?;
    let dir = resolve_output_dir(opts.output_dir.as_deref(), experiment.output().dir.as_deref());
    create_dir(&dir)?;
    match &experiment {
        Experiment::Solver(e) => run_solvers(e, &dir, &hash, opts.no_plot),
        Experiment::Training(e) => run_training(e, &dir, &hash),
    }
}

#[derive(Debug, Serialize)]
struct SolverSummary {
    solver: &'static str,
    iterations: usize,
    csv: PathBuf,
    final_residual_sq: Option<f64>,
    final_dist_sq: Option<f64>,
    admissibility: AdmissibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<RateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<BudgetReport>,
}

#[derive(Debug, Serialize)]
struct RateSummary {
    fit: RateFit,
    /// Linear-rate `θ` for the configured `μ` (linear mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GapSummary {
    reference: &'static str,
    other: &'static str,
    max_iterate_gap: f64,
}

#[derive(Debug, Serialize)]
struct ExperimentSummary<T: Serialize> {
    name: String,
    preset: Option<String>,
    seed: u64,
    config_hash: String,
    rng: &'static str,
    results: Vec<T>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    equivalence: Vec<GapSummary>,
}

fn dispatch(
    solver: SolverName,
    exp: &SolverExperiment,
    problem: &MinimaxProblem,
    observer: Observer<'_>,
) -> sihg::Result<Trace> {
    let config = &exp.solver;
    match solver {
        SolverName::Ssihg => ssihg_run_with(problem, config, observer),
        SolverName::Dsihg => dsihg_run_with(problem, config, observer),
        SolverName::Msihg => msihg_run_with(problem, config, observer),
        SolverName::MsihgGd => msihg_gd_run_with(problem, config, exp.params.momentum, observer),
        SolverName::Spdhg => spdhg_bilinear_run_with(&exp.problem.bilinear_game()?, config, observer),
        SolverName::Mgda => mgda_baseline_run_with(problem, config, exp.params.inner_steps, observer),
    }
}

fn run_solvers(exp: &SolverExperiment, dir: &Path, hash: &str, no_plot: bool) -> Result<RunOutcome> {
    if exp.solvers.is_empty() {
        return Err(CliError::Config("at least one solver is required".into()));
    }
    exp.solver.validate()?;
    let problem = exp.problem.build()?;
    let compare = exp.solvers.len() > 1;
    let mut files = Vec::new();
    let mut lines = Vec::new();
    let mut results = Vec::new();
    let mut paths: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut traces = Vec::new();

    for &solver in &exp.solvers {
        let path = dir.join(format!("{}-{}.csv", exp.name, solver.name()));
        let header = [
            ("seed", exp.solver.seed.to_string()),
            ("config_hash", hash.to_string()),
            ("experiment", exp.name.clone()),
            ("algorithm", solver.name().to_string()),
            ("rng", SeededRng::ALGORITHM.to_string()),
        ];
        let mut csv = TraceCsv::create(path, &header, exp.solver.metric_stride, exp.metrics.timing)?;
        let mut iterates = Vec::new();
        let result = dispatch(solver, exp, &problem, &mut |row, state| {
            csv.row(row);
            if compare {
                let mut z = state.w.clone();
                z.extend_from_slice(state.delta.flat());
                iterates.push(z);
            }
        });
        let trace = match result {
            Ok(t) => t,
            Err(e) => {
                csv.finish(Some(&e.to_string()))?;
                return Err(CliError::Solver(e));
            }
        };
        let path = csv.finish(None)?;
        files.push(path.clone());

        let n = if solver == SolverName::Dsihg { 1 } else { problem.n() };
        let admissibility = validate_config(&problem, &exp.solver, exp.metrics.rho, exp.metrics.mu);
        let rate = match exp.metrics.rate {
            Some(r) => {
                let fit = fit_rate(&trace, r.mode, r.window)?;
                let theta = (r.mode == RateMode::Linear)
                    .then(|| linear_rate_theta(exp.solver.sigma, exp.solver.tau, n, exp.metrics.mu));
                lines.push(rate_line(solver.name(), &fit, theta));
                Some(RateSummary { fit, theta })
            }
            None => None,
        };
        let budget = if exp.metrics.budget && solver == SolverName::Dsihg {
            let b = thm1_budget_check(&trace, &problem, exp.metrics.rho)?;
            lines.push(format!(
                "{}: budget {} (accumulated {:e}, bound {:e})",
                solver.name(),
                if b.holds { "holds" } else { "VIOLATED" },
                b.accumulated,
                b.budget
            ));
            Some(b)
        } else {
            None
        };
        let final_residual_sq = trace.residual_points().last().map(|p| p.1);
        let final_dist_sq = trace.dist_points().last().map(|p| p.1);
        lines.push(format!(
            "{}: {} iterations, final residual_sq {}, csv {}",
            solver.name(),
            exp.solver.iterations,
            final_residual_sq.map(|v| format!("{v:e}")).unwrap_or_else(|| "n/a".into()),
            path.display()
        ));
        results.push(SolverSummary {
            solver: solver.name(),
            iterations: exp.solver.iterations,
            csv: path,
            final_residual_sq,
            final_dist_sq,
            admissibility,
            rate,
            budget,
        });
        paths.push(iterates);
        traces.push(trace);
    }

    let mut equivalence = Vec::new();
    for (j, other) in exp.solvers.iter().enumerate().skip(1) {
        let (a, b) = (&paths[0], &paths[j]);
        let gap = if a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len()) {
            a.iter().zip(b).map(|(x, y)| max_abs_diff(x, y)).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        lines.push(format!("max iterate gap {} vs {}: {gap:e}", exp.solvers[0].name(), other.name()));
        equivalence.push(GapSummary {
            reference: exp.solvers[0].name(),
            other: other.name(),
            max_iterate_gap: gap,
        });
    }

    if exp.metrics.plot && !no_plot {
        let series: Vec<Series<'_>> = exp
            .solvers
            .iter()
            .zip(&traces)
            .map(|(s, t)| Series {
                label: s.name(),
                points: t.residual_points().map(|(k, v)| (k as f64, v)).collect(),
            })
            .collect();
        let path = dir.join(format!("{}-residual.svg", exp.name));
        write_text(&path, &loglog_svg(&exp.name, "iteration k", "squared residual", &series))?;
        files.push(path);
    }

    let summary = ExperimentSummary {
        name: exp.name.clone(),
        preset: exp.preset.clone(),
        seed: exp.solver.seed,
        config_hash: hash.to_string(),
        rng: SeededRng::ALGORITHM,
        results,
        equivalence,
    };
    let path = dir.join(format!("{}-summary.json", exp.name));
    write_json(&path, &summary)?;
    files.push(path);
    Ok(RunOutcome {
        name: exp.name.clone(),
        files,
        lines,
    })
}

fn rate_line(solver: &str, fit: &RateFit, theta: Option<f64>) -> String {
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
    match fit.mode {
        RateMode::Sublinear => format!(
            "{solver}: running-average slope {}, pointwise slope {}",
            fmt(fit.running_avg_slope),
            fmt(fit.pointwise_slope)
        ),
        RateMode::Linear => format!(
            "{solver}: geometric ratio {} (worst step {}) vs theta {}",
            fmt(fit.ratio_mean),
            fmt(fit.ratio_max),
            fmt(theta)
        ),
    }
}

#[derive(Debug, Serialize)]
struct MethodSummary {
    method: &'static str,
    attack: String,
    test: EvalReport,
    params: PathBuf,
    /// Largest `‖δ‖_∞ − ε` seen during training.
    max_box_violation: Option<f64>,
    /// Largest excursion outside the surrogate's trust box (hybrid methods).
    max_anchor_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_seconds: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn datasets(exp: &TrainingExperiment) -> (ToyDataset, ToyDataset) {
    (
        ToyDataset::blobs(exp.data.per_class, exp.data.train_seed),
        ToyDataset::blobs(exp.data.per_class, exp.data.test_seed),
    )
}

fn run_training(exp: &TrainingExperiment, dir: &Path, hash: &str) -> Result<RunOutcome> {
    if exp.methods.is_empty() {
        return Err(CliError::Config("at least one training method is required".into()));
    }
    exp.attack.validate()?;
    let (train, test) = datasets(exp);
    let shape = MlpShape::toy(exp.hidden);
    let mut files = Vec::new();
    let mut lines = Vec::new();
    let mut results = Vec::new();
    let mut curve = format!(
        "#seed={}\n#config_hash={hash}\n#experiment={}\n#eps={}\n#curve_attack={}\nmethod,epoch,loss,natural_acc,robust_acc\n",
        exp.train.seed,
        exp.name,
        exp.eps,
        exp.train.eval_attack.map(|a| a.name()).unwrap_or_else(|| "none".into())
    );
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();

    for &method in &exp.methods {
        let start = Instant::now();
        let out = at_train(method, &train, &shape, exp.eps, &exp.train)?;
        let seconds = start.elapsed().as_secs_f64();
        for r in &out.curve {
            curve += &format!(
                "{},{},{:e},{},{}\n",
                method.name(),
                r.epoch,
                r.loss,
                fmt(r.natural_acc),
                fmt(r.robust_acc)
            );
        }
        let report = evaluate(&out.params, &test, &exp.attack)?;
        let params = dir.join(format!("{}-{}.params", exp.name, method.name()));
        save_params(&out.params, &params)?;
        files.push(params.clone());
        lines.push(format!(
            "{}: natural {:.3}, robust ({}) {:.3}",
            method.name(),
            report.natural_acc,
            exp.attack.name(),
            report.robust_acc
        ));
        let hybrid = matches!(method, TrainMethod::Msihg | TrainMethod::MsihgGd);
        results.push(MethodSummary {
            method: method.name(),
            attack: exp.attack.name(),
            test: report,
            params,
            max_box_violation: finite(out.max_box_violation),
            max_anchor_violation: if hybrid { finite(out.max_anchor_violation) } else { None },
            train_seconds: exp.timing.then_some(seconds),
        });
    }

    let path = dir.join(format!("{}-curve.csv", exp.name));
    write_text(&path, &curve)?;
    files.push(path);
    let summary = ExperimentSummary {
        name: exp.name.clone(),
        preset: exp.preset.clone(),
        seed: exp.train.seed,
        config_hash: hash.to_string(),
        rng: SeededRng::ALGORITHM,
        results,
        equivalence: Vec::new(),
    };
    let path = dir.join(format!("{}-summary.json", exp.name));
    write_json(&path, &summary)?;
    files.push(path);
    Ok(RunOutcome {
        name: exp.name.clone(),
        files,
        lines,
    })
}

#[derive(Debug, Serialize)]
pub struct EvalOutcome {
    pub model: PathBuf,
    pub attack: String,
    pub eps: f64,
    pub natural_acc: f64,
    pub robust_acc: f64,
}

/// Evaluates saved parameters on the experiment's held-out set.
pub fn at_eval(model: &Path, experiment: &Experiment) -> Result<EvalOutcome> {
    let Experiment::Training(exp) = experiment else {
        return Err(CliError::Config("at-eval needs a training experiment".into()));
    };
    exp.attack.validate()?;
    let params = load_params(model)?;
    let (_, test) = datasets(exp);
    let report = evaluate(&params, &test, &exp.attack)?;
    Ok(EvalOutcome {
        model: model.to_path_buf(),
        attack: exp.attack.name(),
        eps: exp.attack.eps,
        natural_acc: report.natural_acc,
        robust_acc: report.robust_acc,
    })
}

//! Built-in experiments. Every preset carries its own fixed seed, so adding
//! or changing one never perturbs another's random streams.

use sihg::analysis::{MviKind, RateMode, SamplingDomain};
use sihg::linalg::Matrix;
use sihg::nn::{AttackConfig, TrainConfig, TrainMethod};
use sihg::zoo::{CertifiedConstant, ProblemFamily, ProblemSpec, ProxSpec};
use sihg::{linear_rate_theta, SolverConfig};

use crate::config::{
    DataOptions, Experiment, MetricOptions, OutputOptions, RateOptions, ReferenceSetting, SolverExperiment,
    SolverName, SolverParams, TrainingExperiment,
};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Experiment,
}

impl Preset {
    pub fn experiment(&self) -> Experiment {
        (self.build)()
    }
}

/// `ε` used for every adversarial-training preset on the toy blobs.
pub const TOY_EPS: f64 = 0.3;

pub static PRESETS: &[Preset] = &[
    Preset {
        name: "bilinear-equivalence",
        description: "SSI-HG vs explicit SPDHG on a two-block bilinear game; reports the max iterate gap",
        build: bilinear_equivalence,
    },
    Preset {
        name: "strong-mvi-linear",
        description: "DSI-HG on the strong-MVI quadratic game (a=b=c=1); fitted ratio vs the linear-rate theta",
        build: strong_mvi_linear,
    },
    Preset {
        name: "strong-mvi-block",
        description: "SSI-HG on the 4-block strong-MVI quadratic game with the n-dependent theta",
        build: strong_mvi_block,
    },
    Preset {
        name: "weak-mvi-budget",
        description: "DSI-HG on a weak-MVI quadratic game (a=-0.01, b=1, c=0.5) with the telescoped budget check",
        build: weak_mvi_budget,
    },
    Preset {
        name: "toy-at",
        description: "Adversarial training on the toy blobs (eps=0.3): MSI-HG, MSI-HG+GD, PGD-AT, natural",
        build: toy_at,
    },
    Preset {
        name: "mnist-ratios",
        description: "MSI-HG on the toy blobs with MNIST ratios (eps, tau, T) = (0.4, 0.2, 5)",
        build: mnist_ratios,
    },
    Preset {
        name: "svhn-ratios",
        description: "MSI-HG on the toy blobs with SVHN ratios (eps, tau, T) = (4/255, 6/255, 10)",
        build: svhn_ratios,
    },
    Preset {
        name: "cifar10-ratios",
        description: "MSI-HG on the toy blobs with CIFAR-10 ratios (eps, tau, T) = (8/255, 14/255, 10)",
        build: cifar10_ratios,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

fn solver_experiment(
    name: &str,
    solvers: Vec<SolverName>,
    problem: ProblemSpec,
    solver: SolverConfig,
    metrics: MetricOptions,
) -> Experiment {
    Experiment::Solver(SolverExperiment {
        name: name.into(),
        preset: Some(name.into()),
        solvers,
        problem,
        solver,
        params: SolverParams::default(),
        metrics,
        output: OutputOptions::default(),
    })
}

fn bilinear_equivalence() -> Experiment {
    let a1 = Matrix {
        rows: 2,
        cols: 3,
        data: vec![0.8, -0.3, 0.5, 0.1, 1.2, -0.7],
    };
    let a2 = Matrix {
        rows: 1,
        cols: 3,
        data: vec![-0.6, 0.4, 0.9],
    };
    let problem = ProblemSpec::new(ProblemFamily::BlockBilinear {
        blocks: vec![a1, a2],
        f: ProxSpec::Zero,
        g: ProxSpec::Zero,
    });
    let solver = SolverConfig::new(0.1, 0.05, 500).with_seed(7).with_stride(1);
    solver_experiment(
        "bilinear-equivalence",
        vec![SolverName::Ssihg, SolverName::Spdhg],
        problem,
        solver,
        MetricOptions::default(),
    )
}

fn strong_mvi_linear() -> Experiment {
    let (sigma, tau, mu) = (0.1, 0.1, 2.0);
    let mut problem = ProblemSpec::new(ProblemFamily::QuadraticGame {
        a: 1.0,
        b: 1.0,
        c: 1.0,
        dim: 2,
    });
    problem.certified = Some(CertifiedConstant {
        kind: MviKind::Strong,
        value: mu,
        domain: SamplingDomain::symmetric(3.0),
    });
    let solver = SolverConfig::new(sigma, tau, 1000)
        .with_theta(linear_rate_theta(sigma, tau, 1, mu))
        .with_seed(11)
        .with_stride(10);
    let metrics = MetricOptions {
        mu,
        rate: Some(RateOptions {
            mode: RateMode::Linear,
            window: 90,
        }),
        ..MetricOptions::default()
    };
    solver_experiment("strong-mvi-linear", vec![SolverName::Dsihg], problem, solver, metrics)
}

fn strong_mvi_block() -> Experiment {
    let (sigma, tau, mu, n) = (0.1, 0.05, 2.0, 4);
    let mut problem = ProblemSpec::new(ProblemFamily::BlockQuadraticGame {
        n,
        a: 1.0,
        b: 0.5,
        c: 1.0,
        dim: 1,
    });
    problem.certified = Some(CertifiedConstant {
        kind: MviKind::Strong,
        value: mu,
        domain: SamplingDomain::symmetric(3.0),
    });
    let solver = SolverConfig::new(sigma, tau, 1000)
        .with_theta(linear_rate_theta(sigma, tau, n, mu))
        .with_seed(13)
        .with_stride(10);
    let metrics = MetricOptions {
        mu,
        rate: Some(RateOptions {
            mode: RateMode::Linear,
            window: 90,
        }),
        ..MetricOptions::default()
    };
    solver_experiment("strong-mvi-block", vec![SolverName::Ssihg], problem, solver, metrics)
}

fn weak_mvi_budget() -> Experiment {
    let rho = 0.021;
    let mut problem = ProblemSpec::new(ProblemFamily::QuadraticGame {
        a: -0.01,
        b: 1.0,
        c: 0.5,
        dim: 1,
    });
    problem.certified = Some(CertifiedConstant {
        kind: MviKind::Weak,
        value: rho,
        domain: SamplingDomain::symmetric(5.0),
    });
    let step = 1.0 / 6.0;
    let solver = SolverConfig::new(step, step, 10_000).with_seed(17).with_stride(10);
    let metrics = MetricOptions {
        rho,
        budget: true,
        rate: Some(RateOptions {
            mode: RateMode::Sublinear,
            window: 990,
        }),
        ..MetricOptions::default()
    };
    solver_experiment("weak-mvi-budget", vec![SolverName::Dsihg], problem, solver, metrics)
}

fn training(name: &str, methods: Vec<TrainMethod>, tau_ratio: f64, steps: usize, reference: Option<ReferenceSetting>) -> Experiment {
    let attack = AttackConfig::new(TOY_EPS, 20, 0).with_seed(23);
    let mut train = TrainConfig::toy(TOY_EPS, 60, 1.0);
    train.tau = tau_ratio * TOY_EPS;
    train.steps = steps;
    train.seed = 19;
    train.init_seed = 29;
    train.eval_attack = Some(attack);
    train.eval_every = 5;
    Experiment::Training(TrainingExperiment {
        name: name.into(),
        preset: Some(name.into()),
        eps: TOY_EPS,
        methods,
        data: DataOptions::default(),
        hidden: 16,
        train,
        attack,
        reference,
        timing: true,
        output: OutputOptions::default(),
    })
}

fn toy_at() -> Experiment {
    training(
        "toy-at",
        vec![TrainMethod::Msihg, TrainMethod::MsihgGd, TrainMethod::PgdAt, TrainMethod::Natural],
        0.5,
        5,
        None,
    )
}

fn ratio_preset(name: &str, dataset: &str, eps: f64, tau: f64, steps: usize) -> Experiment {
    training(
        name,
        vec![TrainMethod::Msihg, TrainMethod::Natural],
        tau / eps,
        steps,
        Some(ReferenceSetting {
            dataset: dataset.into(),
            eps,
            tau,
            steps,
        }),
    )
}

fn mnist_ratios() -> Experiment {
    ratio_preset("mnist-ratios", "MNIST", 0.4, 0.2, 5)
}

fn svhn_ratios() -> Experiment {
    ratio_preset("svhn-ratios", "SVHN", 4.0 / 255.0, 6.0 / 255.0, 10)
}

fn cifar10_ratios() -> Experiment {
    ratio_preset("cifar10-ratios", "CIFAR-10", 8.0 / 255.0, 14.0 / 255.0, 10)
}

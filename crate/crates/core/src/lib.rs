//! Semi-implicit hybrid gradient methods for structured nonconvex-nonconcave
//! minimax problems
//!
//! ```text
//! min_w max_δ  f(w) + Σᵢ φᵢ(w, δᵢ) − Σᵢ gᵢ(δᵢ)
//! ```
//!
//! with stochastic, deterministic and multi-step variants, the analysis tools
//! used to check their convergence conditions, a zoo of test problems, and a
//! desk-scale adversarial-training setup.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod implicit;
pub mod linalg;
pub mod nn;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod solvers;
pub mod zoo;

pub use config::{
    admissibility, kappa, linear_rate_theta, validate_config, AdmissibilityReport, DeltaStep,
    InnerMethod, InnerSolverConfig, SolverConfig,
};
pub use error::{Error, Result};
pub use problem::{BlockVector, Lipschitz, MinimaxProblem, Point};
pub use prox::Prox;
pub use rng::SeededRng;
pub use solvers::{Algorithm, SolverState, Trace, TraceRow};

//! Noisy black-box optimization: solvers, lagged portfolio schedulers and an
//! experiment harness measuring simple-regret convergence slopes.
//!
//! ```
//! use noisy_portfolio::{run_solo, RunSeed, SolverSpec, SphereProblem, TraceDensity};
//!
//! let problem = SphereProblem::new(2, 0.0).unwrap();
//! let solver: SolverSpec = "fabian1".parse().unwrap();
//! let trace = run_solo(&solver, &problem, &RunSeed::new(1, 0), 2_000, TraceDensity::default()).unwrap();
//! assert_eq!(trace.last().unwrap().total_evals, 2_000);
//! ```

pub mod error;
pub mod eval;
pub mod harness;
pub mod metrics;
pub mod point;
pub mod portfolio;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use eval::{EvalContext, EvaluationCounter, NoisyProblem};
pub use metrics::{
    classify_solvers, delta_gap, regret_or_estimate, simple_regret, slope, Classification, Regret, RunTrace,
    SelectionRecord, SlopeReport, SolverProfile, TraceSample,
};
pub use point::SearchPoint;
pub use portfolio::{
    inopa_run, nopa_coarse_run, nopa_run, run_portfolio, run_solo, schedule_validity, select, theoretical_budget,
    LagKind, Mode, PortfolioConfig, PowerLawSchedule, Schedule, ScheduleReport, Selection, TraceDensity,
};
pub use problems::{
    make_sphere, synthetic_regret_value, ActuatorNoise, ProblemKey, RegretLineProblem, SphereProblem,
    SyntheticRegretSolver,
};
pub use rng::{Purpose, RandomStream, RunSeed};
pub use solvers::{
    Fabian, FabianConfig, Newton, NewtonConfig, Rsaes, RsaesConfig, Solver, SolverDriver, SolverFactory, SolverSpec,
    SolverStats,
};

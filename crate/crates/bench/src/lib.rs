//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use noisy_portfolio::{Mode, PortfolioConfig, PowerLawSchedule, SolverFactory, SolverSpec, SphereProblem};

/// The sphere used throughout the benchmarks: `d = 2`, additive noise.
pub fn sphere() -> SphereProblem {
    SphereProblem::new(2, 0.0).expect("valid sphere")
}

/// Portfolio over the four standard solvers with the experiment schedule.
pub fn standard_portfolio(mode: Mode, budget: u64) -> PortfolioConfig {
    let solvers: Vec<Arc<dyn SolverFactory>> = ["rsaes", "fabian1", "fabian2", "newton"]
        .iter()
        .map(|k| Arc::new(k.parse::<SolverSpec>().expect("known key")) as Arc<dyn SolverFactory>)
        .collect();
    PortfolioConfig::new(solvers, Arc::new(PowerLawSchedule::experiments()), mode, budget)
}

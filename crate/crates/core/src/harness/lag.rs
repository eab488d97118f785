//! Misranking frequency of lagged versus unlagged comparisons.
//!
//! Two virtual solvers with regret `1 / m^(1−e)` and `1 / m^(1−2e)` are compared
//! by NOPA with `r_n = n⁴` and `s_n = ⌈r_n^β⌉`. Without a lag their regret gap
//! at `r_n` is of the same order as the comparison noise, so the worse solver
//! keeps being picked; comparing at a lagged index makes the gap dominate.

use std::sync::Arc;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};
use crate::portfolio::{nopa_run, LagKind, Mode, PortfolioConfig, PowerLawSchedule, Schedule};
use crate::problems::RegretLineProblem;
use crate::rng::RunSeed;
use crate::solvers::{SolverFactory, SolverSpec};

use super::experiment::run_parallel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LagExperiment {
    pub e: f64,
    pub beta: f64,
    /// First selection index counted in the frequency.
    pub n_min: u64,
    pub n_max: u64,
    pub reps: u64,
    pub lag: LagKind,
    pub seed: u64,
}

impl LagExperiment {
    /// `e = 0.25`, `β = 1`, selections 10..=200, 100 repetitions, no lag.
    pub fn standard(lag: LagKind) -> Self {
        Self { e: 0.25, beta: 1.0, n_min: 10, n_max: 200, reps: 100, lag, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.e) {
            return Err(invalid(format!("e must lie in [0, 0.5), got {}", self.e)));
        }
        if !(self.beta > 0.0 && self.beta <= 2.0 - 4.0 * self.e + 1e-12) {
            return Err(invalid(format!("beta must lie in (0, 2 - 4e], got {}", self.beta)));
        }
        if self.n_min == 0 || self.n_min > self.n_max || self.reps == 0 {
            return Err(invalid("need 1 <= n_min <= n_max and reps >= 1"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> PowerLawSchedule {
        PowerLawSchedule { a: 4.0, b: 4.0 * self.beta, lag: self.lag }
    }

    /// Regret exponents `(1 − e, 1 − 2e)` of the better and the worse solver.
    pub fn alphas(&self) -> (f64, f64) {
        (1.0 - self.e, 1.0 - 2.0 * self.e)
    }
}

/// Statistics of selection `n` across repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct LagRow {
    pub n: u64,
    pub r: u64,
    pub s: u64,
    pub compared_at: u64,
    pub misrankings: u64,
    pub reps: u64,
    /// Exact probability of picking the worse solver:
    /// `Φ̄(δ / √(2/s))` with `δ` the regret gap at the compared index.
    pub exact_probability: f64,
    /// `Φ̄(δ′ / √(2/s))` with `δ′ = 2 (r^{−(1−2e)} − r^{−(1−e)})`, the
    /// unlagged gap used in the lower-bound argument.
    pub reference_probability: f64,
}

impl LagRow {
    pub fn frequency(&self) -> f64 {
        self.misrankings as f64 / self.reps as f64
    }

    /// Binomial standard error of the exact probability.
    pub fn standard_error(&self) -> f64 {
        let p = self.exact_probability;
        (p * (1.0 - p) / self.reps as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LagReport {
    pub experiment: LagExperiment,
    pub rows: Vec<LagRow>,
}

impl LagReport {
    /// Misranking frequency over all counted selections and repetitions.
    pub fn frequency(&self) -> f64 {
        let k: u64 = self.rows.iter().map(|r| r.misrankings).sum();
        let t: u64 = self.rows.iter().map(|r| r.reps).sum();
        k as f64 / t as f64
    }

    pub fn mean_exact_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.exact_probability).sum::<f64>() / self.rows.len() as f64
    }

    /// Rows whose empirical frequency is more than `k` standard errors away
    /// from the exact probability.
    pub fn outside(&self, k: f64) -> Vec<&LagRow> {
        self.rows.iter().filter(|r| (r.frequency() - r.exact_probability).abs() > k * r.standard_error()).collect()
    }
}

pub fn lag_necessity_experiment(exp: &LagExperiment, workers: Option<usize>) -> Result<LagReport> {
    exp.validate()?;
    let (a1, a2) = exp.alphas();
    let schedule = exp.schedule();
    let solvers: Vec<Arc<dyn SolverFactory>> = vec![
        Arc::new(SolverSpec::Synthetic { c: 1.0, alpha: a1 }),
        Arc::new(SolverSpec::Synthetic { c: 1.0, alpha: a2 }),
    ];
    let cfg = PortfolioConfig::new(solvers, Arc::new(schedule), Mode::Nopa, u64::MAX).with_max_selections(exp.n_max);
    let chosen: Vec<Vec<usize>> = run_parallel(exp.reps, workers, |rep| {
        let trace = nopa_run(&cfg, &RegretLineProblem, &RunSeed::new(exp.seed, rep))?;
        Ok(trace.selections.iter().map(|s| s.chosen).collect())
    })?;
    let normal = Normal::standard();
    let rows = (exp.n_min..=exp.n_max)
        .map(|n| {
            let r = schedule.r(n);
            let s = schedule.s(n);
            let at = schedule.lag(r) as f64;
            let sd = (2.0 / s as f64).sqrt();
            let gap = at.powf(-a2) - at.powf(-a1);
            let rf = r as f64;
            let gap_ref = 2.0 * (rf.powf(-a2) - rf.powf(-a1));
            let misrankings = chosen.iter().filter(|c| c.get(n as usize - 1) == Some(&1)).count() as u64;
            LagRow {
                n,
                r,
                s,
                compared_at: schedule.lag(r),
                misrankings,
                reps: exp.reps,
                exact_probability: normal.sf(gap / sd),
                reference_probability: normal.sf(gap_ref / sd),
            }
        })
        .collect();
    Ok(LagReport { experiment: *exp, rows })
}

//! Portfolio schedulers.
//!
//! * NOPA: every solver receives the same budget; at `r_n` evaluations per
//!   solver the recommendations frozen at `lag(r_n)` are compared with `s_n`
//!   resamplings each.
//! * INOPA: only the chosen solver runs on; the others are advanced to the
//!   lagged milestones needed for the next comparison.
//! * NOPA-coarse: NOPA where solvers advance by whole iterations.
//!
//! All modes optionally share the chosen recommendation with every solver.

mod schedule;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use schedule::{
    ceil_pow, ceil_real, parse_real, schedule_validity, ConditionCheck, LagKind, PowerLawSchedule, Schedule,
    ScheduleReport,
};

use crate::error::{invalid, Error, Result};
use crate::eval::{EvalContext, EvaluationCounter, NoisyProblem};
use crate::metrics::{regret_or_estimate, RunTrace, SelectionRecord, TraceSample};
use crate::point::SearchPoint;
use crate::rng::{Purpose, RandomStream, RunSeed};
use crate::solvers::{build_driver, SolverDriver, SolverFactory};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Nopa,
    Inopa,
    NopaCoarse,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Nopa => "nopa",
            Mode::Inopa => "inopa",
            Mode::NopaCoarse => "nopa-coarse",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nopa" => Ok(Mode::Nopa),
            "inopa" => Ok(Mode::Inopa),
            "nopa-coarse" => Ok(Mode::NopaCoarse),
            other => Err(Error::Config(format!("unknown portfolio mode `{other}`"))),
        }
    }
}

#[derive(Clone)]
pub struct PortfolioConfig {
    pub solvers: Vec<Arc<dyn SolverFactory>>,
    pub schedule: Arc<dyn Schedule>,
    pub sharing: bool,
    pub mode: Mode,
    pub total_budget: u64,
    /// Stop after this many selections even if budget remains.
    pub max_selections: Option<u64>,
    /// Record a trace sample after every evaluation step instead of only at
    /// phase boundaries.
    pub dense: bool,
}

impl fmt::Debug for PortfolioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PortfolioConfig")
            .field("solvers", &self.solvers.iter().map(|s| s.label()).collect::<Vec<_>>())
            .field("schedule", &self.schedule)
            .field("sharing", &self.sharing)
            .field("mode", &self.mode)
            .field("total_budget", &self.total_budget)
            .field("max_selections", &self.max_selections)
            .field("dense", &self.dense)
            .finish()
    }
}

impl PortfolioConfig {
    pub fn new(
        solvers: Vec<Arc<dyn SolverFactory>>,
        schedule: Arc<dyn Schedule>,
        mode: Mode,
        total_budget: u64,
    ) -> Self {
        Self { solvers, schedule, sharing: false, mode, total_budget, max_selections: None, dense: false }
    }

    pub fn with_sharing(mut self, sharing: bool) -> Self {
        self.sharing = sharing;
        self
    }

    pub fn with_dense(mut self, dense: bool) -> Self {
        self.dense = dense;
        self
    }

    pub fn with_max_selections(mut self, n: u64) -> Self {
        self.max_selections = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.solvers.len() as u64;
        if m < 2 {
            return Err(invalid(format!("a portfolio needs at least 2 solvers, got {m}")));
        }
        let first = m.saturating_mul(self.schedule.s(1));
        if self.total_budget < first {
            return Err(invalid(format!("budget {} is below the first comparison cost {first}", self.total_budget)));
        }
        Ok(())
    }
}

/// Outcome of one comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub chosen: usize,
    /// `+∞` for recommendations whose evaluations were non-finite.
    pub resampled_means: Vec<f64>,
    pub evals_spent: u64,
}

/// Index of the smallest value, lowest index on ties.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v < values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Evaluates each recommendation `s` times and picks the smallest mean.
pub fn select(
    problem: &dyn NoisyProblem,
    recommendations: &[SearchPoint],
    s: u64,
    rng: &mut RandomStream,
) -> Result<Selection> {
    match select_within(problem, recommendations, s, rng, u64::MAX)? {
        Ok(sel) => Ok(sel),
        Err(_) => unreachable!("unbounded comparison cannot abort"),
    }
}

/// As [`select`] but spends at most `cap` evaluations; returns `Err(spent)`
/// when the comparison had to be abandoned.
fn select_within(
    problem: &dyn NoisyProblem,
    recs: &[SearchPoint],
    s: u64,
    rng: &mut RandomStream,
    cap: u64,
) -> Result<std::result::Result<Selection, u64>> {
    if recs.len() < 2 {
        return Err(invalid("selection needs at least two recommendations"));
    }
    if s == 0 {
        return Err(invalid("resampling count must be >= 1"));
    }
    let mut ctx = EvalContext::new(problem, rng);
    let mut means = Vec::with_capacity(recs.len());
    for x in recs {
        let left = cap - ctx.used();
        if left < s {
            if left > 0 {
                // Partial evaluations are spent and counted, then the comparison is dropped.
                let _ = ctx.resampled_mean(x, left);
            }
            return Ok(Err(ctx.used()));
        }
        match ctx.resampled_mean(x, s) {
            Ok(v) => means.push(v),
            Err(Error::NonFiniteFitness { .. }) => means.push(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    let chosen = argmin_first(&means).expect("non-empty");
    Ok(Ok(Selection { chosen, resampled_means: means, evals_spent: ctx.used() }))
}

/// State of one portfolio run.
struct Run<'a> {
    cfg: &'a PortfolioConfig,
    problem: &'a dyn NoisyProblem,
    drivers: Vec<SolverDriver>,
    counter: EvaluationCounter,
    comparison_rng: RandomStream,
    regret_rng: RandomStream,
    chosen: Option<usize>,
    trace: RunTrace,
}

/// Budget ran out; the trace is complete.
struct Exhausted;

type Step<T = ()> = std::result::Result<T, Exhausted>;

impl<'a> Run<'a> {
    fn new(cfg: &'a PortfolioConfig, problem: &'a dyn NoisyProblem, seed: &RunSeed) -> Result<Self> {
        cfg.validate()?;
        let dim = problem.dimension();
        let drivers = cfg
            .solvers
            .iter()
            .enumerate()
            .map(|(i, f)| build_driver(f.as_ref(), dim, seed, i as u32))
            .collect::<Result<Vec<_>>>()?;
        let m = drivers.len();
        let slot = m as u32;
        let mut run = Self {
            cfg,
            problem,
            drivers,
            counter: EvaluationCounter::new(m),
            comparison_rng: seed.stream(slot, Purpose::Comparison),
            regret_rng: seed.stream(slot, Purpose::Regret),
            chosen: None,
            trace: RunTrace::default(),
        };
        run.record()?;
        Ok(run)
    }

    fn remaining(&self) -> u64 {
        self.cfg.total_budget.saturating_sub(self.counter.total())
    }

    fn source(&self) -> usize {
        self.chosen.unwrap_or(0)
    }

    fn record(&mut self) -> Result<()> {
        let source = self.source();
        let rec = self.drivers[source].current_recommendation();
        let regret = regret_or_estimate(self.problem, &rec, Some(&mut self.regret_rng))?;
        self.trace.regret_estimated |= regret.ci95.is_some();
        self.trace.push(TraceSample {
            total_evals: self.counter.total(),
            comparison_evals: self.counter.comparison(),
            per_solver_evals: self.counter.per_solver().to_vec(),
            source,
            recommendation: rec,
            regret: regret.value,
        });
        Ok(())
    }

    /// Advances solver `i` to `target` evaluations within the remaining budget.
    fn advance(&mut self, i: usize, target: u64) -> Result<Step> {
        let cap = self.remaining();
        let a = self.drivers[i].advance_to(target, self.problem, cap)?;
        self.counter.add_solver(i, a.consumed);
        if self.remaining() == 0 {
            return Ok(Err(Exhausted));
        }
        Ok(Ok(()))
    }

    fn all_failed(&self) -> bool {
        self.drivers.iter().all(|d| d.failure().is_some())
    }

    /// Recommendation of solver `i` after `m` evaluations, or its last one if
    /// it stopped early.
    fn recommendation_at(&self, i: usize, m: u64) -> Result<SearchPoint> {
        let d = &self.drivers[i];
        d.recommendation_at(m.min(d.evaluations()))
    }

    /// Compares recommendations frozen at `lag(r_n)` and applies sharing.
    fn compare(&mut self, n: u64, r: u64) -> Result<Step> {
        let compared_at = self.cfg.schedule.lag(r);
        let s = self.cfg.schedule.s(n);
        let recs =
            (0..self.drivers.len()).map(|i| self.recommendation_at(i, compared_at)).collect::<Result<Vec<_>>>()?;
        let cap = self.remaining();
        match select_within(self.problem, &recs, s, &mut self.comparison_rng, cap)? {
            Err(spent) => {
                self.counter.add_comparison(spent);
                Ok(Err(Exhausted))
            }
            Ok(sel) => {
                self.counter.add_comparison(sel.evals_spent);
                self.chosen = Some(sel.chosen);
                self.trace.selections.push(SelectionRecord {
                    n,
                    compared_at,
                    chosen: sel.chosen,
                    resampled_means: sel.resampled_means,
                    evals_spent: sel.evals_spent,
                });
                if self.cfg.sharing {
                    let x = self.drivers[sel.chosen].current_recommendation();
                    for d in &mut self.drivers {
                        d.inject(&x)?;
                    }
                }
                self.record()?;
                if self.remaining() == 0 {
                    return Ok(Err(Exhausted));
                }
                Ok(Ok(()))
            }
        }
    }

    /// Brings every solver to at least `r` evaluations.
    fn nopa_phase(&mut self, r: u64, round_robin: bool) -> Result<Step> {
        if round_robin {
            let start = self.drivers.iter().map(|d| d.evaluations()).min().unwrap_or(0);
            for m in start + 1..=r {
                for i in 0..self.drivers.len() {
                    if let Err(e) = self.advance(i, m)? {
                        return Ok(Err(e));
                    }
                }
                if self.cfg.dense {
                    self.record()?;
                }
            }
        } else {
            for i in 0..self.drivers.len() {
                if let Err(e) = self.advance(i, r)? {
                    return Ok(Err(e));
                }
            }
        }
        self.record()?;
        Ok(Ok(()))
    }

    fn selections_done(&self, n: u64) -> bool {
        self.cfg.max_selections.is_some_and(|max| n > max) || self.all_failed()
    }

    fn run_nopa(&mut self, coarse: bool) -> Result<()> {
        let mut n = 1;
        while !self.selections_done(n) {
            let r = self.cfg.schedule.r(n);
            let need: u64 = self.drivers.iter().map(|d| r.saturating_sub(d.evaluations())).sum();
            let round_robin = !coarse && (self.cfg.dense || need > self.remaining());
            if self.nopa_phase(r, round_robin)?.is_err() || self.compare(n, r)?.is_err() {
                break;
            }
            n += 1;
        }
        Ok(())
    }

    fn run_inopa(&mut self) -> Result<()> {
        let mut n = 1;
        while !self.selections_done(n) {
            let r = self.cfg.schedule.r(n);
            let lagged = self.cfg.schedule.lag(r);
            let mut exhausted = false;
            for i in 0..self.drivers.len() {
                if self.advance(i, lagged)?.is_err() {
                    exhausted = true;
                    break;
                }
            }
            self.record()?;
            if exhausted || self.compare(n, r)?.is_err() {
                break;
            }
            let i = self.chosen.expect("selection made");
            let next = self.cfg.schedule.r(n + 1);
            let ok = if self.cfg.dense {
                let mut ok = true;
                while ok && self.drivers[i].evaluations() < next && self.drivers[i].failure().is_none() {
                    let to = self.drivers[i].evaluations() + 1;
                    ok = self.advance(i, to)?.is_ok();
                    self.record()?;
                }
                ok
            } else {
                let ok = self.advance(i, next)?.is_ok();
                self.record()?;
                ok
            };
            if !ok {
                break;
            }
            n += 1;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<RunTrace> {
        self.record()?;
        for d in &self.drivers {
            if let Some(f) = d.failure() {
                self.trace.notes.push(f.to_string());
            }
            let st = d.solver().stats();
            if st.singular_fallbacks > 0 {
                self.trace.notes.push(format!(
                    "{}: {} singular Hessian fallbacks in {} iterations",
                    d.name(),
                    st.singular_fallbacks,
                    st.iterations
                ));
            }
        }
        self.trace.solver_stats = self.drivers.iter().map(|d| d.solver().stats()).collect();
        Ok(self.trace)
    }
}

fn check_mode(cfg: &PortfolioConfig, mode: Mode) -> Result<()> {
    if cfg.mode != mode {
        return Err(invalid(format!("configuration is for {} but {mode} was requested", cfg.mode)));
    }
    Ok(())
}

pub fn nopa_run(cfg: &PortfolioConfig, problem: &dyn NoisyProblem, seed: &RunSeed) -> Result<RunTrace> {
    check_mode(cfg, Mode::Nopa)?;
    let mut run = Run::new(cfg, problem, seed)?;
    run.run_nopa(false)?;
    run.finish()
}

pub fn inopa_run(cfg: &PortfolioConfig, problem: &dyn NoisyProblem, seed: &RunSeed) -> Result<RunTrace> {
    check_mode(cfg, Mode::Inopa)?;
    let mut run = Run::new(cfg, problem, seed)?;
    run.run_inopa()?;
    run.finish()
}

pub fn nopa_coarse_run(cfg: &PortfolioConfig, problem: &dyn NoisyProblem, seed: &RunSeed) -> Result<RunTrace> {
    check_mode(cfg, Mode::NopaCoarse)?;
    let mut run = Run::new(cfg, problem, seed)?;
    run.run_nopa(true)?;
    run.finish()
}

/// Dispatches on `cfg.mode`.
pub fn run_portfolio(cfg: &PortfolioConfig, problem: &dyn NoisyProblem, seed: &RunSeed) -> Result<RunTrace> {
    match cfg.mode {
        Mode::Nopa => nopa_run(cfg, problem, seed),
        Mode::Inopa => inopa_run(cfg, problem, seed),
        Mode::NopaCoarse => nopa_coarse_run(cfg, problem, seed),
    }
}

/// How often a solo run records its recommendation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceDensity {
    /// After every step.
    Dense,
    /// On a geometric grid of evaluation counts with this ratio (> 1).
    Geometric(f64),
}

impl Default for TraceDensity {
    fn default() -> Self {
        TraceDensity::Geometric(2f64.powf(0.125))
    }
}

/// Runs a single solver on `budget` evaluations.
pub fn run_solo(
    factory: &dyn SolverFactory,
    problem: &dyn NoisyProblem,
    seed: &RunSeed,
    budget: u64,
    density: TraceDensity,
) -> Result<RunTrace> {
    if budget == 0 {
        return Err(invalid("budget must be positive"));
    }
    let mut driver = build_driver(factory, problem.dimension(), seed, 0)?;
    let mut regret_rng = seed.stream(1, Purpose::Regret);
    let mut trace = RunTrace::default();
    let mut record = |d: &SolverDriver, trace: &mut RunTrace| -> Result<()> {
        let rec = d.current_recommendation();
        let regret = regret_or_estimate(problem, &rec, Some(&mut regret_rng))?;
        trace.regret_estimated |= regret.ci95.is_some();
        trace.push(TraceSample {
            total_evals: d.evaluations(),
            comparison_evals: 0,
            per_solver_evals: vec![d.evaluations()],
            source: 0,
            recommendation: rec,
            regret: regret.value,
        });
        Ok(())
    };
    record(&driver, &mut trace)?;
    let mut mark = 1.0f64;
    while driver.evaluations() < budget && driver.failure().is_none() {
        let left = budget - driver.evaluations();
        let target = driver.evaluations() + driver.solver().next_step_cost().clamp(1, left);
        driver.advance_to(target, problem, left)?;
        let used = driver.evaluations() as f64;
        let due = match density {
            TraceDensity::Dense => true,
            TraceDensity::Geometric(ratio) => {
                let due = used >= mark;
                while mark <= used {
                    mark *= ratio.max(1.0 + 1e-9);
                }
                due
            }
        };
        if due {
            record(&driver, &mut trace)?;
        }
    }
    record(&driver, &mut trace)?;
    if let Some(f) = driver.failure() {
        trace.notes.push(f.to_string());
    }
    trace.solver_stats = vec![driver.solver().stats()];
    Ok(trace)
}

/// Closed-form evaluation count at selection `n`:
///
/// * NOPA: `M (r_n + Σ_{i<=n} s_i)`
/// * INOPA: `M′ r_n + M Σ_{i<=n} s_i + (M − M′) lag(r_n)`
///
/// The coarse mode uses the NOPA formula.
pub fn theoretical_budget(mode: Mode, m: usize, m_prime: usize, schedule: &dyn Schedule, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(invalid("selection index must be >= 1"));
    }
    if m_prime == 0 || m_prime > m {
        return Err(invalid(format!("need 1 <= M' <= M, got M' = {m_prime}, M = {m}")));
    }
    let (m, mp) = (m as u64, m_prime as u64);
    let r = schedule.r(n);
    let sum_s: u64 = (1..=n).map(|i| schedule.s(i)).sum();
    Ok(match mode {
        Mode::Nopa | Mode::NopaCoarse => m * (r + sum_s),
        Mode::Inopa => mp * r + m * sum_s + (m - mp) * schedule.lag(r),
    })
}

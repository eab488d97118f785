//! Noisy black-box solvers and the driver that runs them on a budget.
//!
//! A [`Solver`] only knows how to perform its next atomic step (one RSAES
//! generation, one Fabian or Newton iteration). [`SolverDriver`] owns the
//! solver's noise stream, counts evaluations, and keeps the milestone log that
//! answers "what was recommended after `m` evaluations".

mod fabian;
mod newton;
mod rsaes;

use std::fmt;
use std::str::FromStr;

pub use fabian::{Fabian, FabianConfig};
pub use newton::{Newton, NewtonConfig};
pub use rsaes::{parent_index, Rsaes, RsaesConfig};

use crate::error::{invalid, Error, Result};
use crate::eval::{EvalContext, NoisyProblem};
use crate::point::SearchPoint;
use crate::problems::SyntheticRegretSolver;
use crate::rng::{Purpose, RandomStream, RunSeed};

/// Counters a solver exposes for diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    /// Completed atomic steps.
    pub iterations: u64,
    /// Newton steps that fell back to `δ = -g` on a singular Hessian estimate.
    pub singular_fallbacks: u64,
    /// Updates discarded because they produced a non-finite iterate.
    pub rejected_updates: u64,
}

pub trait Solver: Send {
    fn name(&self) -> String;

    fn dimension(&self) -> usize;

    /// Evaluations the next call to [`Solver::step`] will consume, or its
    /// minimum for solvers that accept a requested amount.
    fn next_step_cost(&self) -> u64;

    /// Performs one atomic step and returns the evaluations it consumed.
    ///
    /// `wanted` is how many evaluations the driver still needs to reach its
    /// target; solvers with fixed step costs ignore it.
    fn step(&mut self, ctx: &mut EvalContext<'_>, wanted: u64) -> Result<u64>;

    /// Current recommendation `x̃`.
    fn recommendation(&self) -> SearchPoint;

    /// Recommendation after exactly `m` evaluations, for solvers that can
    /// compute it directly instead of relying on the driver's log.
    fn recommendation_at(&self, _m: u64) -> Option<SearchPoint> {
        None
    }

    /// Replaces the solver's working point with `x` (information sharing).
    fn inject(&mut self, x: &SearchPoint) -> Result<()>;

    fn stats(&self) -> SolverStats {
        SolverStats::default()
    }
}

/// Outcome of [`SolverDriver::advance_to`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Advance {
    /// Evaluations consumed by this call.
    pub consumed: u64,
    /// The evaluation cap was hit before the target.
    pub truncated: bool,
}

/// Runs one solver: noise stream, evaluation count and milestone log.
pub struct SolverDriver {
    solver: Box<dyn Solver>,
    noise: RandomStream,
    used: u64,
    /// `(evaluations, recommendation)` after every completed step, increasing
    /// in evaluations. The first entry is the initial recommendation at 0.
    log: Vec<(u64, SearchPoint)>,
    overshoot: u64,
    failure: Option<String>,
}

impl SolverDriver {
    pub fn new(solver: Box<dyn Solver>, noise: RandomStream) -> Self {
        let log = vec![(0, solver.recommendation())];
        Self { solver, noise, used: 0, log, overshoot: 0, failure: None }
    }

    pub fn solver(&self) -> &dyn Solver {
        self.solver.as_ref()
    }

    pub fn name(&self) -> String {
        self.solver.name()
    }

    /// Evaluations consumed so far (`R_i`).
    pub fn evaluations(&self) -> u64 {
        self.used
    }

    /// Evaluations spent beyond requested targets because steps are atomic.
    pub fn overshoot(&self) -> u64 {
        self.overshoot
    }

    /// Set once the solver hit a non-finite fitness; a failed solver is never
    /// advanced again.
    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    pub fn milestones(&self) -> &[(u64, SearchPoint)] {
        &self.log
    }

    pub fn current_recommendation(&self) -> SearchPoint {
        self.solver.recommendation()
    }

    /// Recommendation in force after `m` evaluations: the one recorded at the
    /// largest completed milestone `<= m`.
    pub fn recommendation_at(&self, m: u64) -> Result<SearchPoint> {
        if m > self.used {
            return Err(invalid(format!(
                "recommendation requested at {m} evaluations but only {} were spent",
                self.used
            )));
        }
        if let Some(x) = self.solver.recommendation_at(m) {
            return Ok(x);
        }
        let idx = self.log.partition_point(|(k, _)| *k <= m);
        Ok(self.log[idx - 1].1.clone())
    }

    /// Steps the solver until it has consumed at least `target` evaluations,
    /// spending at most `cap`.
    ///
    /// If the next step costs more than what is left of `cap`, the remaining
    /// evaluations are spent at the current recommendation without updating
    /// the solver, and the advance is reported as truncated.
    pub fn advance_to(&mut self, target: u64, problem: &dyn NoisyProblem, cap: u64) -> Result<Advance> {
        let mut out = Advance::default();
        let before = self.used;
        while self.used < target && self.failure.is_none() {
            let left = cap - out.consumed;
            if left == 0 {
                out.truncated = true;
                break;
            }
            let cost = self.solver.next_step_cost();
            if cost > left {
                let x = self.solver.recommendation();
                let mut ctx = EvalContext::new(problem, &mut self.noise);
                for _ in 0..left {
                    // Values are discarded; only the spend matters here.
                    let _ = ctx.evaluate(&x);
                }
                self.used += left;
                out.consumed += left;
                out.truncated = true;
                break;
            }
            let wanted = (target - self.used).min(left);
            let mut ctx = EvalContext::new(problem, &mut self.noise);
            let res = self.solver.step(&mut ctx, wanted);
            let spent = ctx.used();
            self.used += spent;
            out.consumed += spent;
            match res {
                Ok(_) => self.push_milestone(),
                Err(Error::NonFiniteFitness { problem }) => {
                    self.failure = Some(format!(
                        "{} stopped after {} evaluations: non-finite fitness on {problem}",
                        self.solver.name(),
                        self.used
                    ));
                }
                Err(e) => return Err(e),
            }
        }
        if self.used > target.max(before) {
            self.overshoot += self.used - target.max(before);
        }
        Ok(out)
    }

    /// Shares `x` with the solver; the new recommendation is logged at the
    /// current evaluation count.
    pub fn inject(&mut self, x: &SearchPoint) -> Result<()> {
        if self.failure.is_some() {
            return Ok(());
        }
        self.solver.inject(x)?;
        self.push_milestone();
        Ok(())
    }

    fn push_milestone(&mut self) {
        let rec = self.solver.recommendation();
        match self.log.last_mut() {
            Some((k, x)) if *k == self.used => *x = rec,
            _ => self.log.push((self.used, rec)),
        }
    }
}

/// Builds solvers for a run. Each portfolio slot gets its own instance.
pub trait SolverFactory: Send + Sync {
    fn label(&self) -> String;

    /// Builds the solver occupying `slot`; `seed` supplies its private streams.
    fn build(&self, dim: usize, seed: &RunSeed, slot: u32) -> Result<Box<dyn Solver>>;
}

/// Uniform initial point in `[-1, 1]^d`.
pub fn initial_point(dim: usize, rng: &mut RandomStream) -> SearchPoint {
    SearchPoint::new((0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect()).expect("finite initial point")
}

/// Named solver configurations.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverSpec {
    Rsaes(RsaesConfig),
    Fabian(FabianConfig),
    Newton(NewtonConfig),
    /// Virtual solver with regret `C / m^α`.
    Synthetic {
        c: f64,
        alpha: f64,
    },
}

impl SolverSpec {
    /// Key as written in experiment files, e.g. `fabian1` or `fabian{0.1,5,100}`.
    pub fn key(&self) -> String {
        match self {
            SolverSpec::Rsaes(c) if *c == RsaesConfig::default() => "rsaes".into(),
            SolverSpec::Rsaes(c) => format!("rsaes{{{},{},{},{}}}", c.lambda_factor, c.mu_factor, c.k, c.zeta),
            SolverSpec::Fabian(c) if *c == FabianConfig::fabian1() => "fabian1".into(),
            SolverSpec::Fabian(c) if *c == FabianConfig::fabian2() => "fabian2".into(),
            SolverSpec::Fabian(c) => format!("fabian{{{},{},{}}}", c.gamma(), c.a(), c.c()),
            SolverSpec::Newton(c) if *c == NewtonConfig::default() => "newton".into(),
            SolverSpec::Newton(c) => format!("newton{{{},{},{},{}}}", c.b, c.beta, c.a, c.alpha),
            SolverSpec::Synthetic { c, alpha } => format!("synthetic-C{c}-a{alpha}"),
        }
    }

    /// Parses a key; `synthetic` without parameters takes them from
    /// `default_profile` (normally the problem key's).
    pub fn parse_with_profile(s: &str, default_profile: Option<(f64, f64)>) -> Result<Self> {
        if s.trim() == "synthetic" {
            let (c, alpha) = default_profile
                .ok_or_else(|| Error::Config("`synthetic` solver needs a synthetic problem key".into()))?;
            return Ok(SolverSpec::Synthetic { c, alpha });
        }
        s.parse()
    }
}

fn parse_params(body: &str, n: usize, key: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("malformed solver key `{key}`"));
    let inner = body.strip_prefix('{').and_then(|b| b.strip_suffix('}')).ok_or_else(bad)?;
    let vals: Vec<f64> = inner.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    if vals.len() != n {
        return Err(bad());
    }
    Ok(vals)
}

impl FromStr for SolverSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let cfg = |e: Error| Error::Config(format!("solver `{s}`: {e}"));
        match s {
            "rsaes" => return Ok(SolverSpec::Rsaes(RsaesConfig::default())),
            "fabian1" => return Ok(SolverSpec::Fabian(FabianConfig::fabian1())),
            "fabian2" => return Ok(SolverSpec::Fabian(FabianConfig::fabian2())),
            "newton" => return Ok(SolverSpec::Newton(NewtonConfig::default())),
            _ => {}
        }
        if let Some(body) = s.strip_prefix("fabian") {
            let v = parse_params(body, 3, s)?;
            return Ok(SolverSpec::Fabian(FabianConfig::new(v[0], v[1], v[2]).map_err(cfg)?));
        }
        if let Some(body) = s.strip_prefix("newton") {
            let v = parse_params(body, 4, s)?;
            let c = NewtonConfig { b: v[0], beta: v[1], a: v[2], alpha: v[3] };
            c.validate().map_err(cfg)?;
            return Ok(SolverSpec::Newton(c));
        }
        if let Some(body) = s.strip_prefix("rsaes") {
            let v = parse_params(body, 4, s)?;
            let c = RsaesConfig { lambda_factor: v[0] as usize, mu_factor: v[1] as usize, k: v[2], zeta: v[3] };
            c.validate().map_err(cfg)?;
            return Ok(SolverSpec::Rsaes(c));
        }
        if let Some(rest) = s.strip_prefix("synthetic-C") {
            let bad = || Error::Config(format!("malformed solver key `{s}`"));
            let (c, a) = rest.split_once("-a").ok_or_else(bad)?;
            let c: f64 = c.parse().map_err(|_| bad())?;
            let alpha: f64 = a.parse().map_err(|_| bad())?;
            SyntheticRegretSolver::new(c, alpha).map_err(cfg)?;
            return Ok(SolverSpec::Synthetic { c, alpha });
        }
        Err(Error::Config(format!("unknown solver key `{s}`")))
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl SolverFactory for SolverSpec {
    fn label(&self) -> String {
        self.key()
    }

    fn build(&self, dim: usize, seed: &RunSeed, slot: u32) -> Result<Box<dyn Solver>> {
        if let SolverSpec::Synthetic { c, alpha } = *self {
            if dim != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: dim });
            }
            return Ok(Box::new(SyntheticRegretSolver::new(c, alpha)?));
        }
        if dim == 0 {
            return Err(invalid("dimension must be >= 1"));
        }
        let x0 = initial_point(dim, &mut seed.stream(slot, Purpose::Init));
        let search = seed.stream(slot, Purpose::Search);
        Ok(match self {
            SolverSpec::Rsaes(c) => Box::new(Rsaes::new(c.clone(), x0, search)?),
            SolverSpec::Fabian(c) => Box::new(Fabian::new(c.clone(), x0)),
            SolverSpec::Newton(c) => Box::new(Newton::new(c.clone(), x0)?),
            SolverSpec::Synthetic { .. } => unreachable!(),
        })
    }
}

/// Builds the driver for `slot`, wiring its private noise stream.
pub fn build_driver(factory: &dyn SolverFactory, dim: usize, seed: &RunSeed, slot: u32) -> Result<SolverDriver> {
    let solver = factory.build(dim, seed, slot)?;
    if solver.dimension() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: solver.dimension() });
    }
    Ok(SolverDriver::new(solver, seed.stream(slot, Purpose::Noise)))
}

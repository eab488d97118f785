//! Synthetic test problems.
//!
//! * [`SphereProblem`]: `f(x) = ‖x‖² + ‖x‖^z · N`, the standard benchmark with
//!   additive (`z = 0`) to multiplicative (`z = 2`) noise.
//! * [`ActuatorNoise`]: `f(x, ω) = base(x + ω)` around a deterministic base.
//! * [`RegretLineProblem`] and [`SyntheticRegretSolver`]: a one-dimensional
//!   problem whose coordinate *is* the expected regret, paired with virtual
//!   solvers whose regret after `m` evaluations is exactly `C / m^α`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::eval::{EvalContext, NoisyProblem};
use crate::point::SearchPoint;
use crate::rng::RandomStream;
use crate::solvers::{Solver, SolverStats};

/// `f(x) = ‖x‖² + ‖x‖^z · g`, `g ~ N(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereProblem {
    dim: usize,
    z: f64,
}

impl SphereProblem {
    pub fn new(dim: usize, z: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("sphere dimension must be >= 1"));
        }
        if !(z >= 0.0 && z.is_finite()) {
            return Err(invalid(format!("sphere noise exponent must be finite and >= 0, got {z}")));
        }
        Ok(Self { dim, z })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Fitness at `x` for a given standard Gaussian draw `g`.
    pub fn value_with_noise(&self, x: &[f64], g: f64) -> f64 {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        r2 + r2.sqrt().powf(self.z) * g
    }

    /// Standard deviation of a single draw at `x`.
    pub fn noise_std(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        r2.sqrt().powf(self.z)
    }
}

/// Builds the sphere problem of dimension `d` with noise exponent `z`.
pub fn make_sphere(d: usize, z: f64) -> Result<SphereProblem> {
    SphereProblem::new(d, z)
}

impl NoisyProblem for SphereProblem {
    fn name(&self) -> String {
        ProblemKey::Sphere { d: self.dim, z: self.z }.to_string()
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn sample(&self, x: &[f64], rng: &mut RandomStream) -> f64 {
        self.value_with_noise(x, rng.gaussian())
    }

    fn expected_value(&self, x: &[f64]) -> Option<f64> {
        Some(x.iter().map(|c| c * c).sum())
    }

    fn optimum(&self) -> Option<SearchPoint> {
        Some(SearchPoint::origin(self.dim))
    }
}

/// Actuator noise: the base function is evaluated at a perturbed point,
/// `f(x, ω) = base(x + scale · g)` with `g` a standard Gaussian vector.
///
/// No exact expectation is available; regret falls back to Monte Carlo.
pub struct ActuatorNoise<F> {
    base: F,
    dim: usize,
    noise_scale: f64,
    optimum: Option<SearchPoint>,
}

impl<F> ActuatorNoise<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(base: F, dim: usize, noise_scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be >= 1"));
        }
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(invalid("actuator noise scale must be finite and >= 0"));
        }
        Ok(Self { base, dim, noise_scale, optimum: None })
    }

    /// Declares the minimizer of `E f`, enabling Monte Carlo regret estimates.
    pub fn with_optimum(mut self, x: SearchPoint) -> Result<Self> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        self.optimum = Some(x);
        Ok(self)
    }
}

impl<F> NoisyProblem for ActuatorNoise<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn name(&self) -> String {
        format!("actuator-d{}-s{}", self.dim, self.noise_scale)
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn sample(&self, x: &[f64], rng: &mut RandomStream) -> f64 {
        let shifted: Vec<f64> = x.iter().map(|c| c + self.noise_scale * rng.gaussian()).collect();
        (self.base)(&shifted)
    }

    fn optimum(&self) -> Option<SearchPoint> {
        self.optimum.clone()
    }
}

/// One-dimensional problem with `E f(x) = x₀` and unit Gaussian additive noise.
///
/// Virtual solvers recommend the point `(SR)` whose expected fitness is their
/// current simple regret, so comparisons see exactly the regret gap plus noise.
/// The sample mean of `s` draws is drawn in closed form as `x₀ + g / √s`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegretLineProblem;

impl NoisyProblem for RegretLineProblem {
    fn name(&self) -> String {
        "regret-line".into()
    }

    fn dimension(&self) -> usize {
        1
    }

    fn sample(&self, x: &[f64], rng: &mut RandomStream) -> f64 {
        x[0] + rng.gaussian()
    }

    fn sample_mean(&self, x: &[f64], s: u64, rng: &mut RandomStream) -> f64 {
        x[0] + rng.gaussian() / (s as f64).sqrt()
    }

    fn expected_value(&self, x: &[f64]) -> Option<f64> {
        Some(x[0])
    }

    fn optimum(&self) -> Option<SearchPoint> {
        Some(SearchPoint::origin(1))
    }

    fn closed_form_mean(&self) -> bool {
        true
    }
}

/// Exact regret `C / m^α` of a virtual solver after `m` evaluations.
pub fn synthetic_regret_value(c: f64, alpha: f64, m: u64) -> Result<f64> {
    if m == 0 {
        return Err(invalid("evaluation index must be >= 1"));
    }
    Ok(c / (m as f64).powf(alpha))
}

/// A virtual solver on [`RegretLineProblem`]: after `m` evaluations it
/// recommends the point `C / m^α`. Consuming `k` evaluations advances `m` by
/// `k`; no sampler calls are made.
#[derive(Clone, Debug)]
pub struct SyntheticRegretSolver {
    c: f64,
    alpha: f64,
    m: u64,
}

impl SyntheticRegretSolver {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("synthetic solver needs C > 0 and alpha > 0, got C={c}, alpha={alpha}")));
        }
        Ok(Self { c, alpha, m: 0 })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn evaluations(&self) -> u64 {
        self.m
    }

    fn point_at(&self, m: u64) -> SearchPoint {
        let v = self.c / (m.max(1) as f64).powf(self.alpha);
        SearchPoint::new(vec![v]).expect("finite regret value")
    }
}

impl Solver for SyntheticRegretSolver {
    fn name(&self) -> String {
        format!("synthetic-C{}-a{}", self.c, self.alpha)
    }

    fn dimension(&self) -> usize {
        1
    }

    fn next_step_cost(&self) -> u64 {
        1
    }

    fn step(&mut self, ctx: &mut EvalContext<'_>, wanted: u64) -> Result<u64> {
        let k = wanted.max(1);
        ctx.charge(k);
        self.m += k;
        Ok(k)
    }

    fn recommendation(&self) -> SearchPoint {
        self.point_at(self.m)
    }

    fn recommendation_at(&self, m: u64) -> Option<SearchPoint> {
        Some(self.point_at(m))
    }

    fn inject(&mut self, x: &SearchPoint) -> Result<()> {
        if x.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: x.dim() });
        }
        // The regret curve is fixed by construction; injected iterates are ignored.
        Ok(())
    }

    fn stats(&self) -> SolverStats {
        SolverStats { iterations: self.m, ..SolverStats::default() }
    }
}

/// Problem names used in experiment files.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemKey {
    /// `sphere-d{d}-z{z}`
    Sphere { d: usize, z: f64 },
    /// `synthetic-C{C}-a{alpha}`: the regret line, with the profile of its
    /// default virtual solver.
    Synthetic { c: f64, alpha: f64 },
}

impl ProblemKey {
    pub fn build(&self) -> Result<Arc<dyn NoisyProblem>> {
        Ok(match *self {
            ProblemKey::Sphere { d, z } => Arc::new(SphereProblem::new(d, z)?),
            ProblemKey::Synthetic { c, alpha } => {
                SyntheticRegretSolver::new(c, alpha)?;
                Arc::new(RegretLineProblem)
            }
        })
    }

    pub fn dimension(&self) -> usize {
        match *self {
            ProblemKey::Sphere { d, .. } => d,
            ProblemKey::Synthetic { .. } => 1,
        }
    }
}

impl fmt::Display for ProblemKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemKey::Sphere { d, z } => write!(f, "sphere-d{d}-z{z}"),
            ProblemKey::Synthetic { c, alpha } => write!(f, "synthetic-C{c}-a{alpha}"),
        }
    }
}

impl FromStr for ProblemKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown problem key `{s}`"));
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("sphere-d") {
            let (d, z) = rest.split_once("-z").ok_or_else(bad)?;
            let d: usize = d.parse().map_err(|_| bad())?;
            let z: f64 = z.parse().map_err(|_| bad())?;
            if d == 0 || z.is_nan() || z < 0.0 {
                return Err(bad());
            }
            return Ok(ProblemKey::Sphere { d, z });
        }
        if let Some(rest) = s.strip_prefix("synthetic-C") {
            let (c, a) = rest.split_once("-a").ok_or_else(bad)?;
            let c: f64 = c.parse().map_err(|_| bad())?;
            let alpha: f64 = a.parse().map_err(|_| bad())?;
            if c.is_nan() || alpha.is_nan() || c <= 0.0 || alpha <= 0.0 {
                return Err(bad());
            }
            return Ok(ProblemKey::Synthetic { c, alpha });
        }
        Err(bad())
    }
}

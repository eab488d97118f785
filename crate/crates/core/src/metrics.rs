//! Simple regret, convergence slopes and solver classification.

use crate::error::{invalid, Error, Result};
use crate::eval::NoisyProblem;
use crate::point::SearchPoint;
use crate::rng::RandomStream;
use crate::solvers::SolverStats;

/// Resamplings used by the Monte Carlo regret fallback.
pub const MC_REGRET_SAMPLES: u64 = 10_000;

/// One selection step of a portfolio run.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionRecord {
    /// Selection index `n`, starting at 1.
    pub n: u64,
    /// Evaluation index `lag(r_n)` at which recommendations were compared.
    pub compared_at: u64,
    /// Zero-based index of the chosen solver.
    pub chosen: usize,
    pub resampled_means: Vec<f64>,
    /// Comparison cost `M · s_n`.
    pub evals_spent: u64,
}

/// State of a run after some evaluation count.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSample {
    pub total_evals: u64,
    pub comparison_evals: u64,
    pub per_solver_evals: Vec<u64>,
    /// Solver whose recommendation is the run's recommendation.
    pub source: usize,
    pub recommendation: SearchPoint,
    pub regret: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    pub samples: Vec<TraceSample>,
    pub selections: Vec<SelectionRecord>,
    /// Regrets are Monte Carlo estimates rather than exact values.
    pub regret_estimated: bool,
    /// Diagnostics, e.g. a solver that stopped on non-finite fitness.
    pub notes: Vec<String>,
    /// Final counters of each solver, in portfolio order.
    pub solver_stats: Vec<SolverStats>,
}

impl RunTrace {
    /// Appends a sample, or replaces the last one when no evaluation happened
    /// since, so `total_evals` stays strictly increasing.
    pub fn push(&mut self, sample: TraceSample) {
        match self.samples.last_mut() {
            Some(last) if last.total_evals == sample.total_evals => *last = sample,
            _ => self.samples.push(sample),
        }
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    /// Builds a trace from `(evaluations, regret)` pairs on the regret line.
    pub fn from_regret_curve(points: &[(u64, f64)]) -> Result<Self> {
        let mut t = RunTrace::default();
        for &(n, r) in points {
            if let Some(last) = t.samples.last() {
                if n <= last.total_evals {
                    return Err(invalid("evaluation counts must be strictly increasing"));
                }
            }
            t.samples.push(TraceSample {
                total_evals: n,
                comparison_evals: 0,
                per_solver_evals: vec![n],
                source: 0,
                recommendation: SearchPoint::new(vec![r])?,
                regret: r,
            });
        }
        Ok(t)
    }
}

/// Regret value with its provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regret {
    pub value: f64,
    /// Half-width of the 95% interval; `None` when exact.
    pub ci95: Option<f64>,
}

/// Exact simple regret `E f(x̃) − E f(x*)`.
pub fn simple_regret(problem: &dyn NoisyProblem, x: &SearchPoint) -> Result<f64> {
    let unsupported = || Error::Unsupported(format!("{} has no expected-value oracle", problem.name()));
    let opt = problem.optimum().ok_or_else(unsupported)?;
    let fx = problem.expected_value(x).ok_or_else(unsupported)?;
    let fopt = problem.expected_value(&opt).ok_or_else(unsupported)?;
    Ok(fx - fopt)
}

/// Exact regret when available; otherwise, if `mc` is given, a Monte Carlo
/// estimate from [`MC_REGRET_SAMPLES`] paired draws at `x̃` and `x*`.
pub fn regret_or_estimate(
    problem: &dyn NoisyProblem,
    x: &SearchPoint,
    mc: Option<&mut RandomStream>,
) -> Result<Regret> {
    match simple_regret(problem, x) {
        Ok(value) => Ok(Regret { value, ci95: None }),
        Err(Error::Unsupported(msg)) => {
            let rng = mc.ok_or(Error::Unsupported(msg))?;
            let opt = problem
                .optimum()
                .ok_or_else(|| Error::Unsupported(format!("{} has no known optimum", problem.name())))?;
            let n = MC_REGRET_SAMPLES as f64;
            let diffs: Vec<f64> =
                (0..MC_REGRET_SAMPLES).map(|_| problem.sample(x, rng) - problem.sample(&opt, rng)).collect();
            let mean = diffs.iter().sum::<f64>() / n;
            let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(Regret { value: mean, ci95: Some(1.96 * (var / n).sqrt()) })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeReport {
    /// `log(SR_final) / log(n_final)`; `None` when the optimum was reached.
    pub endpoint_slope: Option<f64>,
    /// Least-squares slope of log regret on log evaluations over samples with
    /// at least 10 evaluations and positive regret.
    pub regression_slope: Option<f64>,
    pub n_final: u64,
    pub regret_final: f64,
    /// Final regret is exactly zero.
    pub optimal: bool,
}

pub fn slope(trace: &RunTrace) -> Result<SlopeReport> {
    if trace.samples.len() < 2 {
        return Err(invalid("slope needs at least two trace samples"));
    }
    let last = trace.samples.last().expect("non-empty");
    let optimal = last.regret <= 0.0;
    let endpoint_slope = (!optimal && last.total_evals > 1).then(|| last.regret.ln() / (last.total_evals as f64).ln());
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.total_evals >= 10 && s.regret > 0.0 && s.regret.is_finite())
        .map(|s| ((s.total_evals as f64).ln(), s.regret.ln()))
        .collect();
    Ok(SlopeReport {
        endpoint_slope,
        regression_slope: least_squares_slope(&pts),
        n_final: last.total_evals,
        regret_final: last.regret,
        optimal,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `Δ_i = SR_i − min_j SR_j`.
pub fn delta_gap(regrets: &[f64], i: usize) -> Result<f64> {
    if regrets.is_empty() {
        return Err(invalid("delta_gap needs at least one regret"));
    }
    if i >= regrets.len() {
        return Err(invalid(format!("solver index {i} out of range")));
    }
    if regrets.iter().any(|r| !r.is_finite()) {
        return Err(invalid("regrets must be finite"));
    }
    let min = regrets.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(regrets[i] - min)
}

/// Asymptotic regret profile `SR_n ≈ C / n^α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverProfile {
    pub c: f64,
    pub alpha: f64,
}

impl SolverProfile {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("profile needs C > 0 and alpha > 0, got ({c}, {alpha})")));
        }
        Ok(Self { c, alpha })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    /// One third of the smallest nonzero gap between constants; `None` when
    /// all constants are equal.
    pub c: Option<f64>,
    pub alpha_star: f64,
    pub c_star: f64,
    /// Zero-based indices with `α_i = α*`.
    pub set_optim: Vec<usize>,
    /// Zero-based indices with `α_i = α*` and `C_i = C*`.
    pub subset_optim: Vec<usize>,
}

impl Classification {
    pub fn degenerate(&self) -> bool {
        self.c.is_none()
    }

    /// `ε_n = C / n^{α*}`; `None` for degenerate classifications.
    pub fn epsilon(&self, n: u64) -> Option<f64> {
        self.c.map(|c| c / (n as f64).powf(self.alpha_star))
    }

    /// `M′ = |SubSetOptim|`
    pub fn m_prime(&self) -> usize {
        self.subset_optim.len()
    }
}

pub fn classify_solvers(profiles: &[SolverProfile]) -> Result<Classification> {
    if profiles.len() < 2 {
        return Err(invalid("classification needs at least two profiles"));
    }
    let mut c: Option<f64> = None;
    for (i, p) in profiles.iter().enumerate() {
        for q in &profiles[i + 1..] {
            let gap = (p.c - q.c).abs();
            if gap > 0.0 {
                c = Some(c.map_or(gap, |m| m.min(gap)));
            }
        }
    }
    let alpha_star = profiles.iter().map(|p| p.alpha).fold(f64::NEG_INFINITY, f64::max);
    let set_optim: Vec<usize> = (0..profiles.len()).filter(|&i| profiles[i].alpha == alpha_star).collect();
    let c_star = set_optim.iter().map(|&i| profiles[i].c).fold(f64::INFINITY, f64::min);
    let subset_optim = set_optim.iter().copied().filter(|&i| profiles[i].c == c_star).collect();
    Ok(Classification { c: c.map(|g| g / 3.0), alpha_star, c_star, set_optim, subset_optim })
}

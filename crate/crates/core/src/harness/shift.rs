//! Horizontal offset of portfolio regret curves relative to a single solver.
//!
//! `M` identical copies of one solver run as NOPA and as INOPA. Mean log
//! regret curves of solo, NOPA and INOPA runs are put on a common grid of log
//! evaluations; at matched regret levels the offset is the difference of the
//! log evaluation counts at which the curves first reach that level.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::metrics::RunTrace;
use crate::portfolio::{run_portfolio, run_solo, Mode, PortfolioConfig, PowerLawSchedule, TraceDensity};
use crate::problems::ProblemKey;
use crate::rng::RunSeed;
use crate::solvers::{SolverFactory, SolverSpec};

use super::experiment::run_parallel;

/// Points on the log-evaluation grid.
const GRID_POINTS: usize = 400;
/// Floor applied to regrets before taking logs.
const REGRET_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftExperiment {
    pub m: usize,
    pub solver: SolverSpec,
    pub problem: ProblemKey,
    pub schedule: PowerLawSchedule,
    /// Evaluation budget of every run, solo or portfolio.
    pub budget: u64,
    pub reps: u64,
    pub seed: u64,
    pub levels: usize,
}

impl ShiftExperiment {
    /// Four fabian1 copies on the 2-d sphere with additive noise.
    pub fn standard() -> Self {
        Self {
            m: 4,
            solver: SolverSpec::Fabian(crate::solvers::FabianConfig::fabian1()),
            problem: ProblemKey::Sphere { d: 2, z: 0.0 },
            schedule: PowerLawSchedule::experiments(),
            budget: 100_000,
            reps: 100,
            seed: 0,
            levels: 5,
        }
    }
}

/// Offsets at one matched regret level.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftLevel {
    pub log_regret: f64,
    pub solo_log_evals: f64,
    pub nopa_log_evals: f64,
    pub inopa_log_evals: f64,
}

impl ShiftLevel {
    pub fn nopa_offset(&self) -> f64 {
        self.nopa_log_evals - self.solo_log_evals
    }

    pub fn inopa_offset(&self) -> f64 {
        self.inopa_log_evals - self.solo_log_evals
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftReport {
    pub m: usize,
    /// Shallowest level first; the last one is the deepest matched level.
    pub levels: Vec<ShiftLevel>,
    /// Mean log-regret curves on `log_grid`.
    pub log_grid: Vec<f64>,
    pub solo_curve: Vec<f64>,
    pub nopa_curve: Vec<f64>,
    pub inopa_curve: Vec<f64>,
}

impl ShiftReport {
    pub fn log_m(&self) -> f64 {
        (self.m as f64).ln()
    }

    pub fn deepest(&self) -> &ShiftLevel {
        self.levels.last().expect("at least one level")
    }
}

/// Log regret of `trace` on `grid`, holding each sample until the next.
fn curve_on_grid(trace: &RunTrace, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut k = 0;
    for &g in grid {
        let limit = g.exp();
        while k + 1 < trace.samples.len() && (trace.samples[k + 1].total_evals as f64) <= limit * (1.0 + 1e-12) {
            k += 1;
        }
        out.push(trace.samples[k].regret.max(REGRET_FLOOR).ln());
    }
    out
}

fn mean_curves(curves: &[Vec<f64>]) -> Vec<f64> {
    let n = curves.len() as f64;
    (0..curves[0].len()).map(|j| curves.iter().map(|c| c[j]).sum::<f64>() / n).collect()
}

/// First log evaluation count at which `curve` reaches `level`, linearly
/// interpolated between grid points.
pub fn crossing(grid: &[f64], curve: &[f64], level: f64) -> Option<f64> {
    if curve.first()? <= &level {
        return Some(grid[0]);
    }
    for j in 1..curve.len() {
        if curve[j] <= level {
            let (y0, y1) = (curve[j - 1], curve[j]);
            let t = if y0 == y1 { 1.0 } else { (y0 - level) / (y0 - y1) };
            return Some(grid[j - 1] + t * (grid[j] - grid[j - 1]));
        }
    }
    None
}

pub fn budget_shift_experiment(exp: &ShiftExperiment, workers: Option<usize>) -> Result<ShiftReport> {
    if exp.m == 0 || exp.reps == 0 || exp.levels == 0 || exp.budget < 10 {
        return Err(invalid("shift experiment needs m, reps, levels >= 1 and budget >= 10"));
    }
    let problem = exp.problem.build()?;
    let top = (exp.budget as f64).ln();
    let grid: Vec<f64> = (0..GRID_POINTS).map(|j| top * j as f64 / (GRID_POINTS - 1) as f64).collect();

    let solo = run_parallel(exp.reps, workers, |rep| {
        let t = run_solo(&exp.solver, problem.as_ref(), &RunSeed::new(exp.seed, rep), exp.budget, TraceDensity::Dense)?;
        Ok(curve_on_grid(&t, &grid))
    })?;
    let solo_curve = mean_curves(&solo);

    let portfolio_curve = |mode: Mode| -> Result<Vec<f64>> {
        if exp.m == 1 {
            return Ok(solo_curve.clone());
        }
        let copies: Vec<Arc<dyn SolverFactory>> =
            (0..exp.m).map(|_| Arc::new(exp.solver.clone()) as Arc<dyn SolverFactory>).collect();
        let cfg = PortfolioConfig::new(copies, Arc::new(exp.schedule), mode, exp.budget).with_dense(true);
        let curves = run_parallel(exp.reps, workers, |rep| {
            let t = run_portfolio(&cfg, problem.as_ref(), &RunSeed::new(exp.seed, rep))?;
            Ok(curve_on_grid(&t, &grid))
        })?;
        Ok(mean_curves(&curves))
    };
    let nopa_curve = portfolio_curve(Mode::Nopa)?;
    let inopa_curve = portfolio_curve(Mode::Inopa)?;

    let curves = [&solo_curve, &nopa_curve, &inopa_curve];
    let upper = curves.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min);
    let lower =
        curves.iter().map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).fold(f64::NEG_INFINITY, f64::max);
    if upper.is_nan() || lower.is_nan() || upper <= lower {
        return Err(invalid("regret curves share no range of levels"));
    }
    let levels = (1..=exp.levels)
        .map(|k| {
            let level = upper - (upper - lower) * k as f64 / exp.levels as f64;
            let at = |c: &[f64]| crossing(&grid, c, level).ok_or_else(|| invalid("level not reached"));
            Ok(ShiftLevel {
                log_regret: level,
                solo_log_evals: at(&solo_curve)?,
                nopa_log_evals: at(&nopa_curve)?,
                inopa_log_evals: at(&inopa_curve)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShiftReport { m: exp.m, levels, log_grid: grid, solo_curve, nopa_curve, inopa_curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates() {
        let grid = [0.0, 1.0, 2.0];
        let curve = [0.0, -2.0, -4.0];
        assert_eq!(crossing(&grid, &curve, -1.0), Some(0.5));
        assert_eq!(crossing(&grid, &curve, 1.0), Some(0.0));
        assert_eq!(crossing(&grid, &curve, -4.0), Some(2.0));
        assert_eq!(crossing(&grid, &curve, -5.0), None);
    }

    #[test]
    fn single_copy_has_no_offset() {
        let exp = ShiftExperiment { m: 1, budget: 2_000, reps: 4, ..ShiftExperiment::standard() };
        let r = budget_shift_experiment(&exp, Some(2)).unwrap();
        for l in &r.levels {
            assert_eq!(l.nopa_offset(), 0.0);
            assert_eq!(l.inopa_offset(), 0.0);
        }
    }
}

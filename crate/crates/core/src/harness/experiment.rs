//! Repeated seeded runs, per-run trace CSVs and slope aggregation.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::metrics::{slope, RunTrace, SlopeReport};
use crate::portfolio::{run_portfolio, run_solo, PortfolioConfig, TraceDensity};
use crate::rng::RunSeed;
use crate::solvers::SolverFactory;

use super::config::{ExperimentConfig, RunMode};

/// Column order of the aggregate CSV.
pub const AGGREGATE_COLUMNS: [&str; 8] =
    ["label", "mean_slope", "stderr", "optimal_hits", "diverged", "reps", "budget", "seed"];

/// Mean endpoint slope of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeRow {
    pub label: String,
    /// Mean over runs that did not reach the optimum; `None` if all did.
    /// A single diverged run makes this `+inf`.
    pub mean_slope: Option<f64>,
    /// Standard error over the finite slopes.
    pub stderr: f64,
    pub optimal_hits: u64,
    /// Runs whose final regret is not finite.
    pub diverged: u64,
    pub reps: u64,
    pub budget: u64,
    pub seed: u64,
    /// Mean regression slope over the same runs.
    pub mean_regression_slope: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlopeTable {
    pub rows: Vec<SlopeRow>,
}

impl SlopeTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(AGGREGATE_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.mean_slope.map_or_else(|| "Optimal".to_string(), |v| v.to_string()),
                r.stderr.to_string(),
                r.optimal_hits.to_string(),
                r.diverged.to_string(),
                r.reps.to_string(),
                r.budget.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_and_stderr(v: &[f64]) -> (Option<f64>, f64) {
    if v.is_empty() {
        return (None, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (Some(mean), 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), (var / n).sqrt())
}

/// Aggregates endpoint slopes of `reports`; optimal runs are counted, not averaged.
pub fn aggregate_reports(label: &str, reports: &[SlopeReport], budget: u64, seed: u64) -> SlopeRow {
    let slopes: Vec<f64> = reports.iter().filter_map(|r| r.endpoint_slope).collect();
    let finite: Vec<f64> = slopes.iter().copied().filter(|s| s.is_finite()).collect();
    let diverged = reports.iter().filter(|r| !r.regret_final.is_finite()).count() as u64;
    let regressions: Vec<f64> = reports.iter().filter(|r| !r.optimal).filter_map(|r| r.regression_slope).collect();
    let (mut mean_slope, stderr) = mean_and_stderr(&finite);
    if finite.len() < slopes.len() {
        // the expected regret of a solver that sometimes blows up is infinite
        mean_slope = Some(f64::INFINITY);
    }
    SlopeRow {
        label: label.to_string(),
        mean_slope,
        stderr,
        optimal_hits: reports.iter().filter(|r| r.optimal).count() as u64,
        diverged,
        reps: reports.len() as u64,
        budget,
        seed,
        mean_regression_slope: mean_and_stderr(&regressions).0,
    }
}

pub fn aggregate(label: &str, traces: &[RunTrace], budget: u64, seed: u64) -> Result<SlopeRow> {
    if traces.is_empty() {
        return Err(invalid("aggregation needs at least one trace"));
    }
    let reports = traces.iter().map(slope).collect::<Result<Vec<_>>>()?;
    Ok(aggregate_reports(label, &reports, budget, seed))
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub traces: Vec<RunTrace>,
    pub row: SlopeRow,
    pub trace_files: Vec<PathBuf>,
    pub aggregate_file: PathBuf,
}

/// Runs repetition `rep` of `cfg`.
pub fn run_once(cfg: &ExperimentConfig, rep: u64) -> Result<RunTrace> {
    let problem = cfg.problem.build()?;
    let seed = RunSeed::new(cfg.base_seed, rep);
    match cfg.mode {
        RunMode::Solo => {
            let density = if cfg.dense { TraceDensity::Dense } else { TraceDensity::default() };
            run_solo(&cfg.solvers[0], problem.as_ref(), &seed, cfg.budget, density)
        }
        RunMode::Portfolio(mode) => {
            let solvers: Vec<Arc<dyn SolverFactory>> =
                cfg.solvers.iter().map(|s| Arc::new(s.clone()) as Arc<dyn SolverFactory>).collect();
            let pc = PortfolioConfig::new(solvers, Arc::new(cfg.schedule), mode, cfg.budget)
                .with_sharing(cfg.sharing)
                .with_dense(cfg.dense);
            run_portfolio(&pc, problem.as_ref(), &seed)
        }
    }
}

/// Runs `f(rep)` for every repetition on `workers` threads (all cores when
/// `None`), returning results in repetition order.
pub fn run_parallel<T, F>(reps: u64, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| (0..reps).into_par_iter().map(&f).collect())
}

pub fn write_trace_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let m = trace.samples.first().map_or(0, |s| s.per_solver_evals.len());
    let d = trace.samples.first().map_or(0, |s| s.recommendation.dim());
    let mut header = vec!["total_evals".to_string(), "comparison_evals".to_string()];
    header.extend((0..m).map(|i| format!("solver{i}_evals")));
    header.extend(["source".to_string(), "regret".to_string()]);
    header.extend((0..d).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for s in &trace.samples {
        let mut row = vec![s.total_evals.to_string(), s.comparison_evals.to_string()];
        row.extend(s.per_solver_evals.iter().map(|v| v.to_string()));
        row.extend([s.source.to_string(), s.regret.to_string()]);
        row.extend(s.recommendation.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs all repetitions and writes `<output>/<label>/run_NNN.csv` plus
/// `<output>/<label>/aggregate.csv`.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let traces = run_parallel(cfg.repetitions, workers, |rep| run_once(cfg, rep))?;
    let dir = cfg.output.join(&cfg.label);
    fs::create_dir_all(&dir)?;
    let mut trace_files = Vec::with_capacity(traces.len());
    for (rep, t) in traces.iter().enumerate() {
        let path = dir.join(format!("run_{rep:03}.csv"));
        write_trace_csv(t, &path)?;
        trace_files.push(path);
    }
    let row = aggregate(&cfg.label, &traces, cfg.budget, cfg.base_seed)?;
    let aggregate_file = dir.join("aggregate.csv");
    SlopeTable { rows: vec![row.clone()] }.write_csv(&aggregate_file)?;
    Ok(ExperimentOutcome { traces, row, trace_files, aggregate_file })
}

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use noisy_portfolio::harness::{
    budget_shift_experiment, lag_necessity_experiment, run_experiment, ExperimentConfig, LagExperiment, ShiftExperiment,
};
use noisy_portfolio::{schedule_validity, Error, LagKind, PowerLawSchedule, ProblemKey, SolverSpec};

const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "noisy-portfolio", version, about = "Noisy optimization solvers and portfolio experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write trace and aggregate CSVs.
    Run {
        config: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Record every evaluation step instead of milestones only.
        #[arg(long)]
        dense: bool,
        /// Exit with status 3 when the mean slope leaves the configured band.
        #[arg(long)]
        check: bool,
        /// Override the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Misranking frequency of NOPA selections with and without lag.
    LagNecessity {
        #[arg(long, default_value_t = 0.25)]
        e: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 10)]
        nmin: u64,
        #[arg(long, default_value_t = 200)]
        nmax: u64,
        #[arg(long, default_value_t = 100)]
        reps: u64,
        /// `pow:<c>`, `log` or `none`.
        #[arg(long, default_value = "none")]
        lag: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        /// Print one line per selection index.
        #[arg(long)]
        per_n: bool,
    },
    /// Offset of NOPA and INOPA regret curves over M copies of one solver.
    Shift {
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value = "fabian1")]
        solver: String,
        #[arg(long, default_value = "sphere-d2-z0")]
        problem: String,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 100)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "pow:1/4.2")]
        lag: String,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check the asymptotic conditions of a power-law schedule.
    ValidateSchedule {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value = "log")]
        lag: String,
        #[arg(long, default_value_t = 1.0)]
        alpha_star: f64,
    },
}

enum Failure {
    Config(anyhow::Error),
    Check(String),
    Other(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::Config(e.into()),
            other => Failure::Other(other.into()),
        }
    }
}

fn seed_override(seed: u64) -> Result<u64, Failure> {
    match std::env::var(noisy_portfolio::harness::SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Config(anyhow::anyhow!("NP_SEED must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(seed),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, workers, dense, check, output } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))
                .map_err(Failure::Config)?;
            let mut cfg = ExperimentConfig::parse(&text)?.with_env_seed()?;
            cfg.dense |= dense;
            if let Some(out) = output {
                cfg.output = out;
            }
            let start = Instant::now();
            let outcome = run_experiment(&cfg, workers)?;
            let row = &outcome.row;
            let mean = row.mean_slope.map_or_else(|| "Optimal".to_string(), |v| format!("{v:.3}"));
            println!(
                "{}: slope {} ± {:.3} ({} optimal, {} diverged of {}), budget {}, {} evaluations per run, {:.1}s",
                row.label,
                mean,
                row.stderr,
                row.optimal_hits,
                row.diverged,
                row.reps,
                row.budget,
                outcome.traces.first().and_then(|t| t.last()).map_or(0, |s| s.total_evals),
                start.elapsed().as_secs_f64()
            );
            for (rep, t) in outcome.traces.iter().enumerate() {
                for note in &t.notes {
                    eprintln!("run {rep}: {note}");
                }
            }
            println!("aggregate: {}", outcome.aggregate_file.display());
            if check {
                if let Some(band) = cfg.check {
                    let ok = row.mean_slope.is_some_and(|m| m >= band.min && m <= band.max);
                    if !ok {
                        return Err(Failure::Check(format!("mean slope {mean} outside [{}, {}]", band.min, band.max)));
                    }
                    println!("check passed: {mean} in [{}, {}]", band.min, band.max);
                }
            }
        }
        Command::LagNecessity { e, beta, nmin, nmax, reps, lag, seed, workers, per_n } => {
            let lag: LagKind = lag.parse()?;
            let exp = LagExperiment { e, beta, n_min: nmin, n_max: nmax, reps, lag, seed: seed_override(seed)? };
            let start = Instant::now();
            let report = lag_necessity_experiment(&exp, workers)?;
            if per_n {
                println!("n,r,s,compared_at,frequency,exact,reference");
                for r in &report.rows {
                    println!(
                        "{},{},{},{},{},{:.6},{:.6}",
                        r.n,
                        r.r,
                        r.s,
                        r.compared_at,
                        r.frequency(),
                        r.exact_probability,
                        r.reference_probability
                    );
                }
            }
            println!(
                "lag {lag}, e {e}, beta {beta}, n in [{nmin}, {nmax}], {reps} reps: misranking frequency {:.4} (exact mean {:.4}), {} of {} indices beyond 3 standard errors, {:.1}s",
                report.frequency(),
                report.mean_exact_probability(),
                report.outside(3.0).len(),
                report.rows.len(),
                start.elapsed().as_secs_f64()
            );
        }
        Command::Shift { m, solver, problem, budget, reps, seed, lag, workers } => {
            let problem: ProblemKey = problem.parse()?;
            let solver: SolverSpec = solver.parse()?;
            let schedule = PowerLawSchedule::experiments().with_lag(lag.parse()?);
            let exp =
                ShiftExperiment { m, solver, problem, schedule, budget, reps, seed: seed_override(seed)?, levels: 5 };
            let start = Instant::now();
            let report = budget_shift_experiment(&exp, workers)?;
            println!("log regret,solo log evals,nopa offset,inopa offset");
            for l in &report.levels {
                println!("{:.4},{:.4},{:.4},{:.4}", l.log_regret, l.solo_log_evals, l.nopa_offset(), l.inopa_offset());
            }
            println!("log M = {:.4}, {:.1}s", report.log_m(), start.elapsed().as_secs_f64());
        }
        Command::ValidateSchedule { a, b, lag, alpha_star } => {
            let p = PowerLawSchedule::new(a, b, lag.parse()?)?;
            print!("{}", schedule_validity(&p, alpha_star));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

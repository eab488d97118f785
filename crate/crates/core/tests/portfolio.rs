mod common;

use std::sync::Arc;

use noisy_portfolio::{
    inopa_run, nopa_coarse_run, nopa_run, run_portfolio, select, theoretical_budget, EvalContext, LagKind, Mode,
    NoisyProblem, PortfolioConfig, PowerLawSchedule, RandomStream, RunSeed, Schedule, SearchPoint, SolverFactory,
    SolverSpec, SphereProblem,
};

use common::{Counting, Quadratic, WalkerFactory};

fn pt(v: &[f64]) -> SearchPoint {
    SearchPoint::new(v.to_vec()).unwrap()
}

fn walkers(m: usize, factory: WalkerFactory) -> Vec<Arc<dyn SolverFactory>> {
    let f: Arc<dyn SolverFactory> = Arc::new(factory);
    vec![f; m]
}

/// Smallest `k` with `k^a >= m`, by integer search.
fn lag_oracle(m: u64, a: f64) -> u64 {
    (1..=m).find(|&k| (k as f64).powf(a) >= m as f64 - 1e-9).unwrap()
}

#[test]
fn select_picks_smallest_noiseless_mean() {
    // f = x on a noiseless line: means equal the coordinates
    let line = Quadratic { a: vec![1e-300], b: vec![1.0] };
    let mut rng = RandomStream::new(1, 0);
    let sel = select(&line, &[pt(&[3.0]), pt(&[1.0]), pt(&[2.0])], 5, &mut rng).unwrap();
    assert_eq!(sel.chosen, 1);
    assert_eq!(sel.evals_spent, 15);
    let tie = select(&line, &[pt(&[1.0]), pt(&[1.0])], 1, &mut rng).unwrap();
    assert_eq!(tie.chosen, 0);
}

#[test]
fn select_separates_distant_points_under_noise() {
    let sphere = SphereProblem::new(2, 0.0).unwrap();
    let mut rng = RandomStream::new(2, 0);
    let recs = [pt(&[0.0, 0.0]), pt(&[10.0, 0.0])];
    let right = (0..1000).filter(|_| select(&sphere, &recs, 100, &mut rng).unwrap().chosen == 0).count();
    assert!(right >= 990, "{right}");
}

#[test]
fn resampled_mean_variance() {
    let sphere = SphereProblem::new(2, 0.0).unwrap();
    let mut rng = RandomStream::new(3, 0);
    let mut ctx = EvalContext::new(&sphere, &mut rng);
    let x = [0.3, -0.4];
    let means: Vec<f64> = (0..1000).map(|_| ctx.resampled_mean(&x, 100).unwrap()).collect();
    let mean = means.iter().sum::<f64>() / 1000.0;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / 999.0;
    assert!((0.007..=0.013).contains(&var), "{var}");
    assert_eq!(ctx.used(), 100_000);
}

#[test]
fn budget_formula_examples() {
    let sched = PowerLawSchedule::experiments();
    assert_eq!([sched.r(1), sched.r(2), sched.r(3)], [1, 19, 101]);
    assert_eq!([sched.s(1), sched.s(2), sched.s(3)], [1, 5, 12]);
    assert_eq!(theoretical_budget(Mode::Nopa, 4, 4, &sched, 3).unwrap(), 476);

    // ⌈101^(1/4.2)⌉ is 4 because 3^4.2 ≈ 100.9 < 101
    assert_eq!(lag_oracle(101, 4.2), 4);
    assert_eq!(sched.lag(101), 4);
    assert_eq!(theoretical_budget(Mode::Inopa, 2, 1, &sched, 3).unwrap(), 101 + 2 * 18 + 4);
    let narrow = sched.with_lag(LagKind::Pow(0.238));
    assert_eq!(narrow.lag(101), 3);
    assert_eq!(theoretical_budget(Mode::Inopa, 2, 1, &narrow, 3).unwrap(), 140);

    for n in 1..8 {
        assert_eq!(
            theoretical_budget(Mode::Inopa, 3, 3, &sched, n).unwrap(),
            theoretical_budget(Mode::Nopa, 3, 3, &sched, n).unwrap()
        );
    }
    assert!(theoretical_budget(Mode::Inopa, 3, 0, &sched, 1).is_err());
    assert!(theoretical_budget(Mode::Nopa, 3, 3, &sched, 0).is_err());
}

#[test]
fn inopa_to_nopa_ratio_tends_to_share_of_optimal_solvers() {
    let sched = PowerLawSchedule::new(3.0, 0.5, LagKind::Log).unwrap();
    let n = 400;
    let ratio = theoretical_budget(Mode::Inopa, 2, 1, &sched, n).unwrap() as f64
        / theoretical_budget(Mode::Nopa, 2, 2, &sched, n).unwrap() as f64;
    assert!((ratio - 0.5).abs() < 1e-3, "{ratio}");
}

#[test]
fn nopa_counts_match_instrument_on_the_worked_example() {
    let problem = Counting::new(Quadratic::sphere(2));
    let cfg = PortfolioConfig::new(
        walkers(4, WalkerFactory::default()),
        Arc::new(PowerLawSchedule::experiments()),
        Mode::Nopa,
        1 << 30,
    )
    .with_max_selections(3);
    let trace = nopa_run(&cfg, &problem, &RunSeed::new(5, 0)).unwrap();
    assert_eq!(problem.calls(), 476);
    let last = trace.last().unwrap();
    assert_eq!(last.total_evals, 476);
    assert_eq!(last.comparison_evals, 72);
    assert_eq!(last.per_solver_evals, vec![101; 4]);
    let compared: Vec<u64> = trace.selections.iter().map(|s| s.compared_at).collect();
    let oracle: Vec<u64> = [1, 19, 101].iter().map(|&r| lag_oracle(r, 4.2)).collect();
    assert_eq!(compared, oracle);
}

#[test]
fn identical_noiseless_pair_tracks_the_single_solver() {
    let problem = Quadratic::sphere(2);
    let cfg = PortfolioConfig::new(
        walkers(2, WalkerFactory { fixed_start: true, ..Default::default() }),
        Arc::new(PowerLawSchedule::experiments()),
        Mode::Nopa,
        50_000,
    )
    .with_dense(true);
    let trace = nopa_run(&cfg, &problem, &RunSeed::new(6, 0)).unwrap();
    assert!(trace.selections.iter().all(|s| s.chosen == 0));
    for s in &trace.samples {
        let m = s.per_solver_evals[0];
        assert_eq!(s.per_solver_evals[1], m);
        let solo = 2.0 * (0.5 * 0.999f64.powi(m as i32)).powi(2);
        assert!((s.regret - solo).abs() <= 1e-12 * solo, "m = {m}");
    }
}

#[test]
fn inopa_leaves_unchosen_solvers_at_lagged_milestones() {
    let problem = Counting::new(Quadratic::sphere(2));
    let sched = PowerLawSchedule::experiments();
    let cfg = PortfolioConfig::new(
        walkers(3, WalkerFactory { fixed_start: true, ..Default::default() }),
        Arc::new(sched),
        Mode::Inopa,
        200_000,
    );
    let trace = inopa_run(&cfg, &problem, &RunSeed::new(7, 0)).unwrap();
    assert!(trace.selections.len() >= 5);
    assert!(trace.selections.iter().all(|s| s.chosen == 0));
    for sel in &trace.selections {
        // the sample recorded right after the comparison
        let after = trace
            .samples
            .iter()
            .find(|s| s.comparison_evals == (1..=sel.n).map(|i| 3 * sched.s(i)).sum::<u64>())
            .unwrap();
        assert_eq!(after.per_solver_evals[1], sched.lag(sched.r(sel.n)));
        assert_eq!(after.per_solver_evals[2], sched.lag(sched.r(sel.n)));
    }
    assert_eq!(problem.calls(), trace.last().unwrap().total_evals);
}

#[test]
fn coarse_mode_with_fine_solvers_matches_nopa() {
    let problem = SphereProblem::new(2, 1.0).unwrap();
    let base = PortfolioConfig::new(
        walkers(3, WalkerFactory::default()),
        Arc::new(PowerLawSchedule::experiments()),
        Mode::Nopa,
        30_000,
    );
    let coarse = PortfolioConfig { mode: Mode::NopaCoarse, ..base.clone() };
    let seed = RunSeed::new(8, 2);
    let a = nopa_run(&base, &problem, &seed).unwrap();
    let b = nopa_coarse_run(&coarse, &problem, &seed).unwrap();
    assert_eq!(a.selections, b.selections);
    // only the budget-capped final phase differs: fine NOPA goes round-robin there
    let k = a.samples.len() - 1;
    assert_eq!(a.samples[..k], b.samples[..k]);
    let (fa, fb) = (&a.samples[k].per_solver_evals, &b.samples[k].per_solver_evals);
    assert!(fa.iter().max().unwrap() - fa.iter().min().unwrap() <= 1);
    assert_eq!(fa.iter().sum::<u64>(), fb.iter().sum::<u64>());
}

#[test]
fn sharing_spreads_the_optimum() {
    let problem = Quadratic::sphere(2);
    let cfg = PortfolioConfig::new(
        walkers(3, WalkerFactory { origin_slot: Some(1), ..Default::default() }),
        Arc::new(PowerLawSchedule::experiments()),
        Mode::Nopa,
        1 << 20,
    )
    .with_sharing(true)
    .with_max_selections(3);
    let trace = nopa_run(&cfg, &problem, &RunSeed::new(9, 0)).unwrap();
    assert_eq!(trace.selections[0].chosen, 1);
    for sel in &trace.selections[1..] {
        assert_eq!(sel.resampled_means, vec![0.0; 3]);
    }
    assert_eq!(trace.last().unwrap().regret, 0.0);
}

#[test]
fn coarse_rsaes_overshoots_to_a_whole_generation() {
    let problem = SphereProblem::new(2, 0.0).unwrap();
    let rsaes: Arc<dyn SolverFactory> = Arc::new("rsaes".parse::<SolverSpec>().unwrap());
    let cfg =
        PortfolioConfig::new(vec![rsaes; 2], Arc::new(PowerLawSchedule::experiments()), Mode::NopaCoarse, 1 << 20)
            .with_max_selections(4);
    let trace = nopa_coarse_run(&cfg, &problem, &RunSeed::new(10, 0)).unwrap();
    let at: Vec<Vec<u64>> = trace
        .selections
        .iter()
        .map(|sel| {
            let spent: u64 = trace.selections.iter().take_while(|s| s.n <= sel.n).map(|s| s.evals_spent).sum();
            trace.samples.iter().find(|s| s.comparison_evals == spent).unwrap().per_solver_evals.clone()
        })
        .collect();
    // generation 1 costs 20 × 10 = 200; generation 2 costs 20 × 40 = 800
    assert_eq!(at, vec![vec![200, 200], vec![200, 200], vec![200, 200], vec![1000, 1000]]);
}

#[test]
fn lag_changes_only_the_compared_index() {
    let problem = SphereProblem::new(2, 0.0).unwrap();
    let sched = PowerLawSchedule::experiments();
    let mk = |lag| {
        PortfolioConfig::new(walkers(2, WalkerFactory::default()), Arc::new(sched.with_lag(lag)), Mode::Nopa, 100_000)
    };
    let seed = RunSeed::new(11, 0);
    let lagged = run_portfolio(&mk(sched.lag), &problem, &seed).unwrap();
    let plain = run_portfolio(&mk(LagKind::None), &problem, &seed).unwrap();
    assert_eq!(lagged.selections.len(), plain.selections.len());
    for (a, b) in lagged.selections.iter().zip(&plain.selections) {
        assert_eq!(a.n, b.n);
        assert_eq!(b.compared_at, sched.r(b.n));
        assert_eq!(a.compared_at, sched.lag(sched.r(a.n)));
        assert_eq!(a.evals_spent, b.evals_spent);
    }
}

#[test]
fn budget_is_never_exceeded() {
    let problem = Counting::new(SphereProblem::new(2, 1.0).unwrap());
    for (mode, budget) in [(Mode::Nopa, 12_345), (Mode::Inopa, 23_456), (Mode::NopaCoarse, 34_567)] {
        let specs: Vec<Arc<dyn SolverFactory>> = ["rsaes", "fabian1", "newton"]
            .iter()
            .map(|s| Arc::new(s.parse::<SolverSpec>().unwrap()) as Arc<dyn SolverFactory>)
            .collect();
        let before = problem.calls();
        let cfg = PortfolioConfig::new(specs, Arc::new(PowerLawSchedule::experiments()), mode, budget);
        let trace = run_portfolio(&cfg, &problem, &RunSeed::new(12, 0)).unwrap();
        let last = trace.last().unwrap();
        assert_eq!(last.total_evals, budget, "{mode}");
        assert_eq!(problem.calls() - before, budget, "{mode}");
        assert_eq!(last.per_solver_evals.iter().sum::<u64>() + last.comparison_evals, last.total_evals);
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let problem = SphereProblem::new(2, 0.0).unwrap();
    let seed = RunSeed::new(0, 0);
    let one = PortfolioConfig::new(
        walkers(1, WalkerFactory::default()),
        Arc::new(PowerLawSchedule::experiments()),
        Mode::Nopa,
        100,
    );
    assert!(nopa_run(&one, &problem, &seed).is_err());
    let poor = PortfolioConfig::new(
        walkers(3, WalkerFactory::default()),
        Arc::new(PowerLawSchedule::experiments()),
        Mode::Nopa,
        2,
    );
    assert!(nopa_run(&poor, &problem, &seed).is_err());
    let inopa = PortfolioConfig { mode: Mode::Inopa, ..poor };
    assert!(nopa_run(&inopa, &problem, &seed).is_err());
    assert_eq!(problem.dimension(), 2);
}

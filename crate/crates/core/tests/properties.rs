mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use noisy_portfolio::portfolio::argmin_first;
use noisy_portfolio::{
    run_portfolio, EvalContext, LagKind, Mode, PortfolioConfig, PowerLawSchedule, RandomStream, RunSeed, Schedule,
    SolverFactory, SolverSpec, SphereProblem,
};

use common::{Counting, WalkerFactory};

fn lag_kind() -> impl Strategy<Value = LagKind> {
    prop_oneof![Just(LagKind::None), Just(LagKind::Log), (0.05f64..1.0).prop_map(LagKind::Pow)]
}

fn schedule() -> impl Strategy<Value = PowerLawSchedule> {
    (1.0f64..4.5, 0.1f64..3.0, lag_kind()).prop_map(|(a, b, lag)| PowerLawSchedule::new(a, b, lag).unwrap())
}

fn spec() -> impl Strategy<Value = &'static str> {
    prop_oneof![
        Just("rsaes"),
        Just("fabian1"),
        Just("fabian2"),
        Just("newton"),
        Just("fabian{0.2,2,1}"),
        Just("newton{2,1,10,2}"),
        Just("rsaes{2,1,3,1}"),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_steps_report_exact_sampler_calls(
        name in spec(), d in 1usize..5, z in 0u32..3, seed in any::<u64>(), steps in 1usize..4,
    ) {
        let problem = Counting::new(SphereProblem::new(d, z as f64).unwrap());
        let factory: SolverSpec = name.parse().unwrap();
        let mut solver = factory.build(d, &RunSeed::new(seed, 0), 0).unwrap();
        let mut rng = RandomStream::new(seed, 1);
        let mut ctx = EvalContext::new(&problem, &mut rng);
        let mut reported = 0;
        for _ in 0..steps {
            let cost = solver.next_step_cost();
            match solver.step(&mut ctx, 1) {
                Ok(k) => {
                    prop_assert_eq!(k, cost);
                    reported += k;
                }
                Err(_) => break,
            }
        }
        prop_assert_eq!(reported, problem.calls());
        prop_assert_eq!(ctx.used(), problem.calls());
    }

    #[test]
    fn argmin_ignores_positive_affine_maps(
        values in prop::collection::vec(-1e6f64..1e6, 1..12), k in 1e-3f64..1e3, c in -1e3f64..1e3,
    ) {
        let mapped: Vec<f64> = values.iter().map(|v| k * v + c).collect();
        let i = argmin_first(&values).unwrap();
        let j = argmin_first(&mapped).unwrap();
        // affine rounding can only merge near-ties, never reorder distinct values
        prop_assert!(j == i || (values[j] - values[i]).abs() <= 1e-9 * values[i].abs().max(1.0));
        prop_assert!(values[..i].iter().all(|v| *v > values[i]));
    }

    #[test]
    fn schedules_are_monotone_and_lag_is_bounded(sched in schedule()) {
        for n in 1..40u64 {
            prop_assert!(sched.r(n + 1) >= sched.r(n));
            prop_assert!(sched.s(n + 1) >= sched.s(n));
        }
        prop_assert_eq!(sched.lag(0), 0);
        for m in 1..5000u64 {
            let l = sched.lag(m);
            prop_assert!(l >= 1 && l <= m);
            prop_assert!(sched.lag(m + 1) >= l);
        }
    }

    #[test]
    fn nopa_gives_every_solver_the_same_budget(
        sched in schedule(), m in 2usize..5, budget in 500u64..40_000, seed in any::<u64>(),
    ) {
        let problem = SphereProblem::new(2, 1.0).unwrap();
        let f: Arc<dyn SolverFactory> = Arc::new(WalkerFactory::default());
        let cfg = PortfolioConfig::new(vec![f; m], Arc::new(sched), Mode::Nopa, budget);
        prop_assume!(cfg.validate().is_ok());
        let trace = run_portfolio(&cfg, &problem, &RunSeed::new(seed, 0)).unwrap();
        for s in &trace.samples {
            let lo = *s.per_solver_evals.iter().min().unwrap();
            let hi = *s.per_solver_evals.iter().max().unwrap();
            prop_assert!(hi - lo <= 1);
            prop_assert_eq!(s.per_solver_evals.iter().sum::<u64>() + s.comparison_evals, s.total_evals);
        }
        prop_assert!(trace.samples.windows(2).all(|w| w[0].total_evals < w[1].total_evals));
        prop_assert_eq!(trace.last().unwrap().total_evals, budget);
    }

    #[test]
    fn inopa_runs_unchosen_solvers_only_to_lagged_milestones(
        sched in schedule(), m in 2usize..5, budget in 2_000u64..60_000, seed in any::<u64>(),
    ) {
        let problem = SphereProblem::new(2, 0.0).unwrap();
        let f: Arc<dyn SolverFactory> = Arc::new(WalkerFactory::default());
        let cfg = PortfolioConfig::new(vec![f; m], Arc::new(sched), Mode::Inopa, budget);
        prop_assume!(cfg.validate().is_ok());
        let trace = run_portfolio(&cfg, &problem, &RunSeed::new(seed, 0)).unwrap();
        let mut chosen = BTreeSet::new();
        let mut spent = 0;
        for sel in &trace.selections {
            spent += sel.evals_spent;
            let after = trace.samples.iter().find(|s| s.comparison_evals == spent).unwrap();
            let lagged = sched.lag(sched.r(sel.n));
            for (i, &e) in after.per_solver_evals.iter().enumerate() {
                if chosen.contains(&i) {
                    prop_assert!(e >= lagged);
                } else {
                    prop_assert_eq!(e, lagged);
                }
            }
            chosen.insert(sel.chosen);
        }
    }
}

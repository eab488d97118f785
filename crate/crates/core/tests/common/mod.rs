//! Problems and solvers shared by the integration tests.

#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};

use noisy_portfolio::solvers::initial_point;
use noisy_portfolio::{
    EvalContext, NoisyProblem, Purpose, RandomStream, Result, RunSeed, SearchPoint, Solver, SolverFactory,
};

/// `Σ a_i x_i² + b·x`, no noise.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Quadratic {
    pub fn sphere(d: usize) -> Self {
        Self { a: vec![1.0; d], b: vec![0.0; d] }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.a).zip(&self.b).map(|((x, a), b)| 2.0 * a * x + b).collect()
    }
}

impl NoisyProblem for Quadratic {
    fn name(&self) -> String {
        "quadratic".into()
    }

    fn dimension(&self) -> usize {
        self.a.len()
    }

    fn sample(&self, x: &[f64], _rng: &mut RandomStream) -> f64 {
        x.iter().zip(&self.a).zip(&self.b).map(|((x, a), b)| a * x * x + b * x).sum()
    }

    fn expected_value(&self, x: &[f64]) -> Option<f64> {
        Some(self.sample(x, &mut RandomStream::new(0, 0)))
    }

    fn optimum(&self) -> Option<SearchPoint> {
        SearchPoint::new(self.a.iter().zip(&self.b).map(|(a, b)| -b / (2.0 * a)).collect()).ok()
    }
}

/// Counts every call to `sample` of the wrapped problem.
pub struct Counting<P> {
    pub inner: P,
    calls: AtomicU64,
}

impl<P> Counting<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: NoisyProblem> NoisyProblem for Counting<P> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn sample(&self, x: &[f64], rng: &mut RandomStream) -> f64 {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.sample(x, rng)
    }

    fn expected_value(&self, x: &[f64]) -> Option<f64> {
        self.inner.expected_value(x)
    }

    fn optimum(&self) -> Option<SearchPoint> {
        self.inner.optimum()
    }
}

/// One evaluation per step; the iterate shrinks toward the origin.
pub struct Walker {
    x: Vec<f64>,
}

impl Solver for Walker {
    fn name(&self) -> String {
        "walker".into()
    }

    fn dimension(&self) -> usize {
        self.x.len()
    }

    fn next_step_cost(&self) -> u64 {
        1
    }

    fn step(&mut self, ctx: &mut EvalContext<'_>, _wanted: u64) -> Result<u64> {
        ctx.evaluate(&self.x)?;
        for v in &mut self.x {
            *v *= 0.999;
        }
        Ok(1)
    }

    fn recommendation(&self) -> SearchPoint {
        SearchPoint::new(self.x.clone()).unwrap()
    }

    fn inject(&mut self, x: &SearchPoint) -> Result<()> {
        self.x = x.coords().to_vec();
        Ok(())
    }
}

/// Builds [`Walker`]s; `fixed_start` makes every slot identical and
/// `origin_slot` starts one slot at the origin.
#[derive(Default)]
pub struct WalkerFactory {
    pub fixed_start: bool,
    pub origin_slot: Option<u32>,
}

impl SolverFactory for WalkerFactory {
    fn label(&self) -> String {
        "walker".into()
    }

    fn build(&self, dim: usize, seed: &RunSeed, slot: u32) -> Result<Box<dyn Solver>> {
        let x = if self.origin_slot == Some(slot) {
            vec![0.0; dim]
        } else if self.fixed_start {
            vec![0.5; dim]
        } else {
            initial_point(dim, &mut seed.stream(slot, Purpose::Init)).into_inner()
        };
        Ok(Box::new(Walker { x }))
    }
}

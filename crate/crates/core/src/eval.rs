//! Problem contract and evaluation-budget accounting.

use crate::error::{Error, Result};
use crate::point::{check_coords, SearchPoint};
use crate::rng::RandomStream;

/// A stochastic objective `x -> f(x, ω)` to be minimized in expectation.
pub trait NoisyProblem: Send + Sync {
    fn name(&self) -> String;

    fn dimension(&self) -> usize;

    /// One noisy fitness draw at `x`.
    fn sample(&self, x: &[f64], rng: &mut RandomStream) -> f64;

    /// Mean of `s` independent draws at `x`.
    ///
    /// Problems whose noise law is known in closed form may override this with
    /// an exact draw of the sample mean; the budget is charged `s` either way.
    fn sample_mean(&self, x: &[f64], s: u64, rng: &mut RandomStream) -> f64 {
        let mut sum = 0.0;
        for _ in 0..s {
            sum += self.sample(x, rng);
        }
        sum / s as f64
    }

    /// Exact `E f(x)` when known.
    fn expected_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// The minimizer of `E f`, when known.
    fn optimum(&self) -> Option<SearchPoint> {
        None
    }

    /// Whether [`NoisyProblem::sample_mean`] draws the mean in closed form
    /// instead of calling [`NoisyProblem::sample`] `s` times.
    fn closed_form_mean(&self) -> bool {
        false
    }
}

/// Evaluation access for one consumer (a solver or the comparison step):
/// a problem, the consumer's noise stream, and a running evaluation count.
pub struct EvalContext<'a> {
    problem: &'a dyn NoisyProblem,
    rng: &'a mut RandomStream,
    used: u64,
}

impl<'a> EvalContext<'a> {
    pub fn new(problem: &'a dyn NoisyProblem, rng: &'a mut RandomStream) -> Self {
        Self { problem, rng, used: 0 }
    }

    pub fn problem(&self) -> &dyn NoisyProblem {
        self.problem
    }

    pub fn dimension(&self) -> usize {
        self.problem.dimension()
    }

    /// Evaluations consumed through this context so far.
    pub fn used(&self) -> u64 {
        self.used
    }

    /// One noisy evaluation; costs one unit of budget.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        check_coords(x, self.problem.dimension())?;
        self.used += 1;
        let v = self.problem.sample(x, self.rng);
        self.finite(v)
    }

    /// Empirical mean over `s` resamplings; costs `s` units of budget.
    pub fn resampled_mean(&mut self, x: &[f64], s: u64) -> Result<f64> {
        if s == 0 {
            return Err(Error::InvalidArgument("resampling count must be >= 1".into()));
        }
        check_coords(x, self.problem.dimension())?;
        self.used += s;
        let v = self.problem.sample_mean(x, s, self.rng);
        self.finite(v)
    }

    /// Charges `k` evaluations without sampling. Used by virtual solvers whose
    /// progress is modelled rather than simulated.
    pub fn charge(&mut self, k: u64) {
        self.used += k;
    }

    fn finite(&self, v: f64) -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteFitness { problem: self.problem.name() })
        }
    }
}

/// Evaluation totals of one portfolio run.
///
/// `total()` is derived, so `total == sum(per_solver) + comparison` always holds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvaluationCounter {
    per_solver: Vec<u64>,
    comparison: u64,
}

impl EvaluationCounter {
    pub fn new(solvers: usize) -> Self {
        Self { per_solver: vec![0; solvers], comparison: 0 }
    }

    pub fn per_solver(&self) -> &[u64] {
        &self.per_solver
    }

    pub fn solver(&self, i: usize) -> u64 {
        self.per_solver[i]
    }

    pub fn comparison(&self) -> u64 {
        self.comparison
    }

    pub fn total(&self) -> u64 {
        self.per_solver.iter().sum::<u64>() + self.comparison
    }

    pub fn add_solver(&mut self, i: usize, k: u64) {
        self.per_solver[i] += k;
    }

    pub fn add_comparison(&mut self, k: u64) {
        self.comparison += k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;

    impl NoisyProblem for Quadratic {
        fn name(&self) -> String {
            "quadratic".into()
        }
        fn dimension(&self) -> usize {
            2
        }
        fn sample(&self, x: &[f64], _rng: &mut RandomStream) -> f64 {
            x.iter().map(|c| c * c).sum()
        }
    }

    struct Nan;

    impl NoisyProblem for Nan {
        fn name(&self) -> String {
            "nan".into()
        }
        fn dimension(&self) -> usize {
            1
        }
        fn sample(&self, _x: &[f64], _rng: &mut RandomStream) -> f64 {
            f64::NAN
        }
    }

    #[test]
    fn resampled_mean_of_constants() {
        let mut rng = RandomStream::new(0, 0);
        let mut ctx = EvalContext::new(&Quadratic, &mut rng);
        assert_eq!(ctx.resampled_mean(&[1.0, 1.0], 7).unwrap(), 2.0);
        assert_eq!(ctx.used(), 7);
    }

    #[test]
    fn contract_violations() {
        let mut rng = RandomStream::new(0, 0);
        let mut ctx = EvalContext::new(&Quadratic, &mut rng);
        assert!(matches!(ctx.evaluate(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
        assert!(matches!(ctx.evaluate(&[1.0, f64::NAN]), Err(Error::NonFinitePoint { .. })));
        assert!(ctx.resampled_mean(&[0.0, 0.0], 0).is_err());
        assert_eq!(ctx.used(), 0);
    }

    #[test]
    fn nan_fitness_is_reported() {
        let mut rng = RandomStream::new(0, 0);
        let mut ctx = EvalContext::new(&Nan, &mut rng);
        assert!(matches!(ctx.evaluate(&[0.0]), Err(Error::NonFiniteFitness { .. })));
    }

    #[test]
    fn counter_total_is_sum() {
        let mut c = EvaluationCounter::new(3);
        c.add_solver(0, 5);
        c.add_solver(2, 7);
        c.add_comparison(11);
        assert_eq!(c.total(), 23);
        assert_eq!(c.per_solver(), &[5, 0, 7]);
    }
}

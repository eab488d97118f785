//! Fabian's stochastic gradient method with finite differences.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::eval::EvalContext;
use crate::point::SearchPoint;

use super::{Solver, SolverStats};

/// Step sizes `σ_n = c / n^γ`, gradient steps `a / n`.
///
/// Each axis is probed at `x ± u_j σ_n e_i` with `u_j = 1/j`,
/// `j = 1..s_axis/2`. The weights solve `Σ_j w_j u_j^(2k-1) = [k = 1]` for
/// `k = 1..s_axis/2`, so the estimate is exact for polynomials up to degree
/// `s_axis` along each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct FabianConfig {
    gamma: f64,
    a: f64,
    c: f64,
    s_axis: usize,
    scales: Vec<f64>,
    weights: Vec<f64>,
}

impl FabianConfig {
    pub fn new(gamma: f64, a: f64, c: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(invalid(format!("Fabian gamma must lie in (0, 1/2), got {gamma}")));
        }
        if !(a > 0.0 && a.is_finite()) || !(c > 0.0 && c.is_finite()) {
            return Err(invalid("Fabian needs a > 0 and c > 0"));
        }
        let s_axis = samples_per_axis(gamma);
        let scales: Vec<f64> = (1..=s_axis / 2).map(|j| 1.0 / j as f64).collect();
        let weights = moment_weights(&scales)?;
        Ok(Self { gamma, a, c, s_axis, scales, weights })
    }

    /// `γ = 0.1, a = 1, c = 100`
    pub fn fabian1() -> Self {
        Self::new(0.1, 1.0, 100.0).expect("valid constants")
    }

    /// `γ = 0.49, a = 1, c = 2`
    pub fn fabian2() -> Self {
        Self::new(0.49, 1.0, 2.0).expect("valid constants")
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn samples_per_axis(&self) -> usize {
        self.s_axis
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `σ_n = c / n^γ`
    pub fn sigma(&self, n: u64) -> f64 {
        self.c / (n as f64).powf(self.gamma)
    }
}

/// Minimal even number `>= 1/(2γ) - 1`, and at least 2.
pub fn samples_per_axis(gamma: f64) -> usize {
    let bound = 1.0 / (2.0 * gamma) - 1.0;
    let half = crate::portfolio::ceil_real(bound / 2.0).max(1);
    2 * half as usize
}

fn moment_weights(u: &[f64]) -> Result<Vec<f64>> {
    let h = u.len();
    let v = DMatrix::from_fn(h, h, |k, j| u[j].powi(2 * k as i32 + 1));
    let mut rhs = DVector::zeros(h);
    rhs[0] = 1.0;
    let w = v.lu().solve(&rhs).ok_or_else(|| invalid("singular Fabian moment system"))?;
    if w.iter().any(|x| !x.is_finite()) {
        return Err(invalid("ill-conditioned Fabian moment system"));
    }
    Ok(w.iter().copied().collect())
}

pub struct Fabian {
    cfg: FabianConfig,
    x: Vec<f64>,
    n: u64,
    stats: SolverStats,
}

impl Fabian {
    pub fn new(cfg: FabianConfig, x0: SearchPoint) -> Self {
        Self { cfg, x: x0.into_inner(), n: 1, stats: SolverStats::default() }
    }

    pub fn config(&self) -> &FabianConfig {
        &self.cfg
    }

    /// Iteration counter `n` of the next step.
    pub fn iteration(&self) -> u64 {
        self.n
    }

    /// Finite-difference gradient at the current iterate with step `σ_n`.
    pub fn estimate_gradient(&self, ctx: &mut EvalContext<'_>) -> Result<Vec<f64>> {
        let sigma = self.cfg.sigma(self.n);
        let mut probe = self.x.clone();
        let mut g = vec![0.0; self.x.len()];
        for (i, gi) in g.iter_mut().enumerate() {
            let xi = self.x[i];
            let mut acc = 0.0;
            for (u, w) in self.cfg.scales.iter().zip(&self.cfg.weights) {
                probe[i] = xi + u * sigma;
                let plus = ctx.evaluate(&probe)?;
                probe[i] = xi - u * sigma;
                let minus = ctx.evaluate(&probe)?;
                acc += w * (plus - minus);
            }
            probe[i] = xi;
            *gi = acc / (2.0 * sigma);
        }
        Ok(g)
    }
}

impl Solver for Fabian {
    fn name(&self) -> String {
        format!("fabian{{{},{},{}}}", self.cfg.gamma, self.cfg.a, self.cfg.c)
    }

    fn dimension(&self) -> usize {
        self.x.len()
    }

    fn next_step_cost(&self) -> u64 {
        (self.x.len() * self.cfg.s_axis) as u64
    }

    fn step(&mut self, ctx: &mut EvalContext<'_>, _wanted: u64) -> Result<u64> {
        let g = self.estimate_gradient(ctx)?;
        let rate = self.cfg.a / self.n as f64;
        let next: Vec<f64> = self.x.iter().zip(&g).map(|(x, g)| x - rate * g).collect();
        if next.iter().all(|v| v.is_finite()) {
            self.x = next;
        } else {
            self.stats.rejected_updates += 1;
        }
        self.n += 1;
        self.stats.iterations += 1;
        Ok(self.next_step_cost())
    }

    fn recommendation(&self) -> SearchPoint {
        SearchPoint::new(self.x.clone()).expect("iterate kept finite")
    }

    fn inject(&mut self, x: &SearchPoint) -> Result<()> {
        if x.dim() != self.x.len() {
            return Err(Error::DimensionMismatch { expected: self.x.len(), got: x.dim() });
        }
        self.x = x.coords().to_vec();
        Ok(())
    }

    fn stats(&self) -> SolverStats {
        self.stats
    }
}

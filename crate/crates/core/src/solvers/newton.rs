//! Newton's method with resampled finite differences and a step-length cap.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::eval::EvalContext;
use crate::point::SearchPoint;
use crate::portfolio::ceil_real;

use super::{Solver, SolverStats};

/// Probe distance `σ_n = A / n^α`; each gradient and diagonal probe is
/// resampled `⌈B · n^β⌉` times, each off-diagonal probe `⌈B · n^β / 10⌉` times.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonConfig {
    pub b: f64,
    pub beta: f64,
    pub a: f64,
    pub alpha: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { b: 1.0, beta: 2.0, a: 100.0, alpha: 4.0 }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.a) && pos(self.b) && pos(self.alpha) && pos(self.beta)) {
            return Err(invalid("Newton needs A, B, alpha, beta > 0"));
        }
        Ok(())
    }

    pub fn sigma(&self, n: u64) -> f64 {
        self.a / (n as f64).powf(self.alpha)
    }

    pub fn resamplings(&self, n: u64) -> u64 {
        ceil_real(self.b * (n as f64).powf(self.beta))
    }

    pub fn cross_resamplings(&self, n: u64) -> u64 {
        ceil_real(self.b * (n as f64).powf(self.beta) / 10.0)
    }

    /// Evaluations of iteration `n` in dimension `d`:
    /// `k (2d + 1) + 4 k' d (d - 1) / 2`.
    pub fn iteration_cost(&self, n: u64, d: usize) -> u64 {
        let d = d as u64;
        self.resamplings(n) * (2 * d + 1) + self.cross_resamplings(n) * 2 * d * (d - 1)
    }
}

pub struct Newton {
    cfg: NewtonConfig,
    x: Vec<f64>,
    n: u64,
    stats: SolverStats,
}

/// Gradient and Hessian estimates of one iteration.
#[derive(Clone, Debug)]
pub struct NewtonModel {
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

impl Newton {
    pub fn new(cfg: NewtonConfig, x0: SearchPoint) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, x: x0.into_inner(), n: 1, stats: SolverStats::default() })
    }

    pub fn iteration(&self) -> u64 {
        self.n
    }

    /// Estimates the gradient and Hessian at the current iterate.
    pub fn estimate_model(&self, ctx: &mut EvalContext<'_>) -> Result<NewtonModel> {
        let d = self.x.len();
        let sigma = self.cfg.sigma(self.n);
        let k = self.cfg.resamplings(self.n);
        let kc = self.cfg.cross_resamplings(self.n);
        let mut probe = self.x.clone();
        let mut gradient = vec![0.0; d];
        let mut hessian = DMatrix::zeros(d, d);
        let mut plus = vec![0.0; d];
        let mut minus = vec![0.0; d];
        for i in 0..d {
            probe[i] = self.x[i] + sigma;
            plus[i] = ctx.resampled_mean(&probe, k)?;
            probe[i] = self.x[i] - sigma;
            minus[i] = ctx.resampled_mean(&probe, k)?;
            probe[i] = self.x[i];
            gradient[i] = (plus[i] - minus[i]) / (2.0 * sigma);
        }
        let center = ctx.resampled_mean(&self.x, k)?;
        for i in 0..d {
            hessian[(i, i)] = (plus[i] - 2.0 * center + minus[i]) / (sigma * sigma);
        }
        for i in 0..d {
            for j in i + 1..d {
                let mut corner = |si: f64, sj: f64, ctx: &mut EvalContext<'_>| {
                    probe[i] = self.x[i] + si * sigma;
                    probe[j] = self.x[j] + sj * sigma;
                    let v = ctx.resampled_mean(&probe, kc);
                    probe[i] = self.x[i];
                    probe[j] = self.x[j];
                    v
                };
                let pp = corner(1.0, 1.0, ctx)?;
                let pm = corner(1.0, -1.0, ctx)?;
                let mp = corner(-1.0, 1.0, ctx)?;
                let mm = corner(-1.0, -1.0, ctx)?;
                let h = (pp - pm - mp + mm) / (4.0 * sigma * sigma);
                hessian[(i, j)] = h;
                hessian[(j, i)] = h;
            }
        }
        Ok(NewtonModel { gradient, hessian })
    }

    /// Newton direction clipped to length `σ_n / 2`. Falls back to `-g` when
    /// the Hessian estimate cannot be solved; the flag reports the fallback.
    pub fn direction(&self, model: &NewtonModel) -> (Vec<f64>, bool) {
        let g = DVector::from_column_slice(&model.gradient);
        let solved = if model.hessian.iter().all(|v| v.is_finite()) {
            model.hessian.clone().lu().solve(&(-&g)).filter(|d| d.iter().all(|v| v.is_finite()))
        } else {
            None
        };
        let fallback = solved.is_none();
        let mut delta = solved.unwrap_or(-g);
        let cap = self.cfg.sigma(self.n) / 2.0;
        let norm = delta.norm();
        if norm > cap {
            delta *= cap / norm;
        }
        (delta.iter().copied().collect(), fallback)
    }
}

impl Solver for Newton {
    fn name(&self) -> String {
        "newton".into()
    }

    fn dimension(&self) -> usize {
        self.x.len()
    }

    fn next_step_cost(&self) -> u64 {
        self.cfg.iteration_cost(self.n, self.x.len())
    }

    fn step(&mut self, ctx: &mut EvalContext<'_>, _wanted: u64) -> Result<u64> {
        let cost = self.next_step_cost();
        let model = self.estimate_model(ctx)?;
        let (delta, fallback) = self.direction(&model);
        if fallback {
            self.stats.singular_fallbacks += 1;
        }
        let next: Vec<f64> = self.x.iter().zip(&delta).map(|(x, d)| x + d).collect();
        if next.iter().all(|v| v.is_finite()) {
            self.x = next;
        } else {
            self.stats.rejected_updates += 1;
        }
        self.n += 1;
        self.stats.iterations += 1;
        Ok(cost)
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

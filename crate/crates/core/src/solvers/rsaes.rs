//! Self-adaptive evolution strategy with resamplings.

use crate::error::{invalid, Error, Result};
use crate::eval::EvalContext;
use crate::point::SearchPoint;
use crate::rng::RandomStream;

use super::{Solver, SolverStats};

/// Population sizes are multiples of the dimension: `λ = lambda_factor · d`,
/// `μ = mu_factor · d`. Generation `n` evaluates each offspring `⌈K · n^ζ⌉` times.
#[derive(Clone, Debug, PartialEq)]
pub struct RsaesConfig {
    pub lambda_factor: usize,
    pub mu_factor: usize,
    pub k: f64,
    pub zeta: f64,
}

impl Default for RsaesConfig {
    fn default() -> Self {
        Self { lambda_factor: 10, mu_factor: 5, k: 10.0, zeta: 2.0 }
    }
}

impl RsaesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu_factor == 0 || self.lambda_factor < self.mu_factor {
            return Err(invalid("RSAES needs lambda >= mu >= 1"));
        }
        if !(self.k > 0.0 && self.k.is_finite()) || !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(invalid("RSAES needs K > 0 and zeta >= 0"));
        }
        Ok(())
    }

    /// `⌈K · n^ζ⌉`
    pub fn resamplings(&self, n: u64) -> u64 {
        crate::portfolio::ceil_real(self.k * (n as f64).powf(self.zeta))
    }
}

/// Zero-based parent of offspring `j` (zero-based): `j mod μ`.
pub fn parent_index(j: usize, mu: usize) -> usize {
    j % mu
}

pub struct Rsaes {
    cfg: RsaesConfig,
    dim: usize,
    lambda: usize,
    mu: usize,
    n: u64,
    parents: Vec<Vec<f64>>,
    sigmas: Vec<f64>,
    /// Resampled means the parents had as offspring; `+∞` for parents never
    /// ranked (initial or injected).
    parent_means: Vec<f64>,
    best: SearchPoint,
    last_offspring: Vec<(SearchPoint, f64)>,
    rng: RandomStream,
}

impl Rsaes {
    /// All `μ` initial parents sit at `x0` with step size 1.
    pub fn new(cfg: RsaesConfig, x0: SearchPoint, rng: RandomStream) -> Result<Self> {
        cfg.validate()?;
        let dim = x0.dim();
        let lambda = cfg.lambda_factor * dim;
        let mu = cfg.mu_factor * dim;
        Ok(Self {
            cfg,
            dim,
            lambda,
            mu,
            n: 1,
            parents: vec![x0.coords().to_vec(); mu],
            sigmas: vec![1.0; mu],
            parent_means: vec![f64::INFINITY; mu],
            best: x0,
            last_offspring: Vec::new(),
            rng,
        })
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn generation(&self) -> u64 {
        self.n
    }

    pub fn parents(&self) -> &[Vec<f64>] {
        &self.parents
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.sigmas
    }

    /// Offspring of the last generation with their resampled means, in
    /// generation order.
    pub fn last_offspring(&self) -> &[(SearchPoint, f64)] {
        &self.last_offspring
    }
}

impl Solver for Rsaes {
    fn name(&self) -> String {
        "rsaes".into()
    }

    fn dimension(&self) -> usize {
        self.dim
    }

    fn next_step_cost(&self) -> u64 {
        self.lambda as u64 * self.cfg.resamplings(self.n)
    }

    fn step(&mut self, ctx: &mut EvalContext<'_>, _wanted: u64) -> Result<u64> {
        let k = self.cfg.resamplings(self.n);
        let tau = 1.0 / (2.0 * self.dim as f64);
        let mut offspring = Vec::with_capacity(self.lambda);
        let mut sigmas = Vec::with_capacity(self.lambda);
        for j in 0..self.lambda {
            let p = parent_index(j, self.mu);
            let sigma = self.sigmas[p] * (tau * self.rng.gaussian()).exp();
            let x: Vec<f64> = self.parents[p].iter().map(|c| c + sigma * self.rng.gaussian()).collect();
            let x = SearchPoint::new(x).map_err(|_| Error::NonFiniteFitness { problem: ctx.problem().name() })?;
            let mean = ctx.resampled_mean(&x, k)?;
            offspring.push((x, mean));
            sigmas.push(sigma);
        }
        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| offspring[a].1.total_cmp(&offspring[b].1));
        self.parents = order[..self.mu].iter().map(|&j| offspring[j].0.coords().to_vec()).collect();
        self.sigmas = order[..self.mu].iter().map(|&j| sigmas[j]).collect();
        self.parent_means = order[..self.mu].iter().map(|&j| offspring[j].1).collect();
        self.best = offspring[order[0]].0.clone();
        self.last_offspring = offspring;
        self.n += 1;
        Ok(self.lambda as u64 * k)
    }

    fn recommendation(&self) -> SearchPoint {
        self.best.clone()
    }

    /// Replaces the worst-ranked parent (last one among equals) by `x`, with
    /// the mean parent step size.
    fn inject(&mut self, x: &SearchPoint) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        let mut worst = 0;
        for (i, m) in self.parent_means.iter().enumerate() {
            if *m >= self.parent_means[worst] {
                worst = i;
            }
        }
        let sigma = self.sigmas.iter().sum::<f64>() / self.mu as f64;
        self.parents[worst] = x.coords().to_vec();
        self.sigmas[worst] = sigma;
        self.parent_means[worst] = f64::INFINITY;
        Ok(())
    }

    fn stats(&self) -> SolverStats {
        SolverStats { iterations: self.n - 1, ..SolverStats::default() }
    }
}

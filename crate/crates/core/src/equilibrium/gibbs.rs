use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::dynamics::{stream_id, GaussianStream, StreamKind};
use crate::error::{GleError, Result};
use crate::model::{DomainKind, GleModel, Potential, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QStrategy {
    UniformRejection,
    InverseCdf,
    Gaussian,
}

/// Exact sampler for `ρ ∝ e^{−β(V(q) + |p|²/2 + |z|²/2)}`.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    model: GleModel,
    strategy: QStrategy,
    vmin: f64,
    // inverse-CDF table: abscissae and cumulative mass
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GibbsSample {
    pub states: Vec<State>,
    pub acceptance_rate: f64,
}

impl GibbsSampler {
    pub fn new(model: &GleModel) -> Result<Self> {
        let pot = &model.potential;
        let strategy = match (model.domain_kind, pot) {
            (DomainKind::Torus, _) => QStrategy::UniformRejection,
            (DomainKind::Confining, Potential::Quadratic { .. }) => QStrategy::Gaussian,
            (DomainKind::Confining, _) if model.d == 1 => QStrategy::InverseCdf,
            _ => {
                return Err(GleError::Unsupported(
                    "exact Gibbs sampling for a non-quadratic confining potential in d > 1; \
                     use a long equilibration run of the dynamics instead"
                        .into(),
                ))
            }
        };
        let mut sampler = GibbsSampler {
            model: model.clone(),
            strategy,
            vmin: pot.profile_min(),
            grid: Vec::new(),
            cdf: Vec::new(),
        };
        if strategy == QStrategy::InverseCdf {
            sampler.build_cdf();
        }
        Ok(sampler)
    }

    pub fn strategy(&self) -> QStrategy {
        self.strategy
    }

    fn build_cdf(&mut self) {
        let beta = self.model.beta;
        let pot = &self.model.potential;
        let mut half = 1.0;
        while half < 1e4 && (beta * (pot.profile(half) - self.vmin) < 45.0 || beta * (pot.profile(-half) - self.vmin) < 45.0) {
            half *= 1.25;
        }
        let n = 40_001;
        let grid: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
        let dens: Vec<f64> = grid.iter().map(|&x| (-beta * (pot.profile(x) - self.vmin)).exp()).collect();
        let mut cdf = vec![0.0; n];
        for i in 1..n {
            cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]);
        }
        let total = cdf[n - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        self.grid = grid;
        self.cdf = cdf;
    }

    fn draw_q(&self, s: &mut GaussianStream, tries: &mut u64) -> f64 {
        let beta = self.model.beta;
        match self.strategy {
            QStrategy::UniformRejection => loop {
                *tries += 1;
                let x = TAU * (1.0 - s.uniform());
                let accept = (-beta * (self.model.potential.profile(x) - self.vmin)).exp();
                if s.uniform() <= accept {
                    return x;
                }
            },
            QStrategy::Gaussian => {
                *tries += 1;
                let k = match self.model.potential {
                    Potential::Quadratic { stiffness } => stiffness,
                    _ => unreachable!(),
                };
                s.normal() / (beta * k).sqrt()
            }
            QStrategy::InverseCdf => {
                *tries += 1;
                let u = s.uniform();
                let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
                let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
                let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                self.grid[i - 1] + w * (self.grid[i] - self.grid[i - 1])
            }
        }
    }

    /// One draw; `tries` counts proposals.
    pub fn draw(&self, s: &mut GaussianStream, tries: &mut u64) -> State {
        let (d, m) = (self.model.d, self.model.m);
        let sd = 1.0 / self.model.beta.sqrt();
        let q = (0..d).map(|_| self.draw_q(s, tries)).collect();
        let p = (0..d).map(|_| sd * s.normal()).collect();
        let z = (0..m * d).map(|_| sd * s.normal()).collect();
        State { q, p, z }
    }

    /// Draw number `index` on stream `(index, kind)`.
    pub fn draw_indexed(&self, seed: u64, index: u64, kind: StreamKind) -> (State, u64) {
        let mut s = GaussianStream::new(seed, stream_id(index, kind), 2);
        let mut tries = 0;
        (self.draw(&mut s, &mut tries), tries)
    }
}

/// `n` independent draws from the Gibbs measure of `model`.
pub fn sample_gibbs(model: &GleModel, n: usize, seed: u64) -> Result<GibbsSample> {
    let sampler = GibbsSampler::new(model)?;
    let draws: Vec<(State, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| sampler.draw_indexed(seed, i, StreamKind::Sampler))
        .collect();
    let proposals: u64 = draws.iter().map(|d| d.1).sum();
    let coords = (n * model.d) as f64;
    Ok(GibbsSample {
        acceptance_rate: if proposals == 0 { 1.0 } else { coords / proposals as f64 },
        states: draws.into_iter().map(|d| d.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_on_flat_torus() {
        let m = GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::free()).unwrap();
        let n = 100_000;
        let s = sample_gibbs(&m, n, 3).unwrap();
        assert_eq!(s.acceptance_rate, 1.0);
        let mut q: Vec<f64> = s.states.iter().map(|s| s.q[0]).collect();
        q.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = q
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = x / TAU;
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        assert!(ks < 1.628 / (n as f64).sqrt(), "ks {ks}");
    }

    #[test]
    fn momentum_variance_follows_beta() {
        let m = GleModel::torus(vec![1.0], vec![1.0], 2.0, Potential::cosine(1.0)).unwrap();
        let n = 50_000;
        let s = sample_gibbs(&m, n, 5).unwrap();
        let var = s.states.iter().map(|s| s.p[0] * s.p[0]).sum::<f64>() / n as f64;
        let se = 0.5 * (2.0 / n as f64).sqrt();
        assert!((var - 0.5).abs() < 3.0 * se, "var {var}");
        assert!(s.acceptance_rate < 1.0 && s.acceptance_rate > 0.0);
    }

    #[test]
    fn quadratic_confining_variance() {
        let m = GleModel::new(1, vec![1.0], vec![1.0], 1.0, Potential::quadratic(1.0), DomainKind::Confining).unwrap();
        let n = 50_000;
        let s = sample_gibbs(&m, n, 9).unwrap();
        let var = s.states.iter().map(|s| s.q[0] * s.q[0]).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn inverse_cdf_recovers_gaussian_variance() {
        use crate::model::confining_admissibility;
        // a polynomial that happens to be quadratic goes through the tabulated CDF
        let pot = Potential::Polynomial {
            coefficients: vec![0.0, 0.0, 0.5],
        };
        assert!(confining_admissibility(&pot, 1, &crate::model::default_radii()).unwrap().all_passed());
        let m = GleModel::new(1, vec![1.0], vec![1.0], 1.0, pot, DomainKind::Confining).unwrap();
        let sampler = GibbsSampler::new(&m).unwrap();
        assert_eq!(sampler.strategy(), QStrategy::InverseCdf);
        let n = 50_000;
        let s = sample_gibbs(&m, n, 2).unwrap();
        let var = s.states.iter().map(|s| s.q[0] * s.q[0]).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn unsupported_case() {
        let pot = Potential::Polynomial {
            coefficients: vec![0.0, 0.0, 0.5],
        };
        let m = GleModel::new(2, vec![1.0], vec![1.0], 1.0, pot, DomainKind::Confining).unwrap();
        assert!(matches!(sample_gibbs(&m, 10, 0), Err(GleError::Unsupported(_))));
    }
}

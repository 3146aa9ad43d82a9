//! Histogram estimators of distances between a sampled marginal and its Gibbs reference.
//!
//! The relative entropy carries the Miller–Madow correction `(K − 1)/(2n)`, where `K` is the
//! number of occupied cells. The plug-in value is kept alongside because Pinsker's inequality
//! holds exactly between the two binned distributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{GleError, Result};
use crate::model::{DomainKind, GleModel};
use crate::stats::{quantile, EstimateWithCI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    /// First position coordinate.
    Q,
    /// First momentum coordinate.
    P,
    /// Joint `(q₀, p₀)`; samples are interleaved pairs.
    Qp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.bins - 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub marginal: Marginal,
    pub axes: Vec<Axis>,
}

impl Binning {
    /// 64 cells per dimension over the region that carries the reference mass.
    pub fn default_for(model: &GleModel, marginal: Marginal) -> Self {
        Self::with_bins(model, marginal, 64)
    }

    pub fn with_bins(model: &GleModel, marginal: Marginal, bins: usize) -> Self {
        let q_axis = match model.domain_kind {
            DomainKind::Torus => Axis {
                lo: 0.0,
                hi: TAU,
                bins,
                periodic: true,
            },
            DomainKind::Confining => {
                let vmin = model.potential.profile_min();
                let mut l = 1.0;
                while l < 1e4
                    && model.beta * (model.potential.profile(l).min(model.potential.profile(-l)) - vmin) < 25.0
                {
                    l *= 1.1;
                }
                Axis {
                    lo: -l,
                    hi: l,
                    bins,
                    periodic: false,
                }
            }
        };
        let s = 8.0 / model.beta.sqrt();
        let p_axis = Axis {
            lo: -s,
            hi: s,
            bins,
            periodic: false,
        };
        let axes = match marginal {
            Marginal::Q => vec![q_axis],
            Marginal::P => vec![p_axis],
            Marginal::Qp => vec![q_axis, p_axis],
        };
        Binning { marginal, axes }
    }

    pub fn total_bins(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            resamples: 200,
            seed: 0x5eed,
        }
    }
}

/// One-dimensional Gibbs marginal density (unnormalized) along an axis.
fn axis_density(model: &GleModel, marginal: Marginal, axis: usize) -> impl Fn(f64) -> f64 + '_ {
    let is_q = match marginal {
        Marginal::Q => true,
        Marginal::P => false,
        Marginal::Qp => axis == 0,
    };
    let vmin = model.potential.profile_min();
    move |x: f64| {
        if is_q {
            (-model.beta * (model.potential.profile(x) - vmin)).exp()
        } else {
            (-0.5 * model.beta * x * x).exp()
        }
    }
}

/// Cell probabilities of the reference, normalized over the grid.
pub fn reference_cells(model: &GleModel, binning: &Binning) -> Vec<f64> {
    // 5-point Gauss–Legendre per cell
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_889, 0.478_628_670_499_366, 0.478_628_670_499_366, 0.236_926_885_056_189, 0.236_926_885_056_189];
    let per_axis: Vec<Vec<f64>> = binning
        .axes
        .iter()
        .enumerate()
        .map(|(k, ax)| {
            let f = axis_density(model, binning.marginal, k);
            let h = ax.width();
            (0..ax.bins)
                .map(|i| {
                    let c = ax.lo + (i as f64 + 0.5) * h;
                    X.iter().zip(W).map(|(x, w)| w * f(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
                })
                .collect()
        })
        .collect();
    let mut cells = vec![1.0];
    for ax in &per_axis {
        cells = cells.iter().flat_map(|a| ax.iter().map(move |b| a * b)).collect();
    }
    let total: f64 = cells.iter().sum();
    cells.iter().map(|c| c / total).collect()
}

/// Binned sample together with its reference.
#[derive(Debug, Clone)]
pub struct MarginalHistogram {
    pub binning: Binning,
    pub counts: Vec<u64>,
    pub inside: u64,
    pub outside: u64,
    pub reference: Vec<f64>,
}

impl MarginalHistogram {
    pub fn build(samples: &[f64], model: &GleModel, binning: &Binning) -> Result<Self> {
        let dim = binning.dim();
        if samples.len() % dim != 0 {
            return Err(GleError::Dimension("sample length is not a multiple of the marginal dimension".into()));
        }
        let n = samples.len() / dim;
        let total_bins = binning.total_bins();
        if n < 10 * total_bins {
            return Err(GleError::Precondition(format!(
                "{n} samples for {total_bins} cells; need at least 10 per cell"
            )));
        }
        let mut counts = vec![0u64; total_bins];
        let mut outside = 0;
        for pt in samples.chunks(dim) {
            let mut idx = 0;
            let mut ok = true;
            for (ax, &x) in binning.axes.iter().zip(pt) {
                match ax.index(x) {
                    Some(i) => idx = idx * ax.bins + i,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                counts[idx] += 1;
            } else {
                outside += 1;
            }
        }
        if outside as f64 > 0.5 * n as f64 {
            return Err(GleError::Estimator(format!(
                "{outside} of {n} samples fall outside the reference grid"
            )));
        }
        Ok(MarginalHistogram {
            reference: reference_cells(model, binning),
            binning: binning.clone(),
            counts,
            inside: n as u64 - outside,
            outside,
        })
    }

    fn plugin_kl_of(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let n = n as f64;
        counts
            .iter()
            .zip(&self.reference)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, &r)| {
                let f = c as f64 / n;
                f * (f / r.max(f64::MIN_POSITIVE)).ln()
            })
            .sum()
    }

    fn corrected_kl_of(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let occupied = counts.iter().filter(|&&c| c > 0).count() as f64;
        (self.plugin_kl_of(counts) - (occupied - 1.0) / (2.0 * n as f64)).max(0.0)
    }

    pub fn plugin_entropy(&self) -> f64 {
        self.plugin_kl_of(&self.counts)
    }

    pub fn l1(&self) -> f64 {
        let n = self.inside as f64;
        self.counts
            .iter()
            .zip(&self.reference)
            .map(|(&c, &r)| (c as f64 / n - r).abs())
            .sum()
    }

    fn fisher_of(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let n = n as f64;
        let min_count = 10;
        let axes = &self.binning.axes;
        let strides: Vec<usize> = (0..axes.len())
            .map(|k| axes[k + 1..].iter().map(|a| a.bins).product())
            .collect();
        let mut total = 0.0;
        for (cell, &c) in counts.iter().enumerate() {
            if c < min_count {
                continue;
            }
            let f = c as f64 / n;
            for (k, ax) in axes.iter().enumerate() {
                let i = (cell / strides[k]) % ax.bins;
                let neighbour = |di: isize| -> Option<usize> {
                    let j = i as isize + di;
                    let j = if ax.periodic {
                        j.rem_euclid(ax.bins as isize)
                    } else if j < 0 || j >= ax.bins as isize {
                        return None;
                    } else {
                        j
                    };
                    Some(cell - i * strides[k] + j as usize * strides[k])
                };
                let (Some(lo), Some(hi)) = (neighbour(-1), neighbour(1)) else {
                    continue;
                };
                if counts[lo] < min_count || counts[hi] < min_count {
                    continue;
                }
                let lr = |j: usize| (counts[j] as f64 / n / self.reference[j]).ln();
                let h = ax.width();
                let g = (lr(hi) - lr(lo)) / (2.0 * h);
                // remove the sampling variance of the difference quotient
                let noise = (1.0 / counts[hi] as f64 + 1.0 / counts[lo] as f64) / (4.0 * h * h);
                total += f * (g * g - noise);
            }
        }
        total.max(0.0)
    }

    fn bootstrap(&self, opts: BootstrapOptions, stat: &dyn Fn(&[u64]) -> f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let n = self.inside;
        let total = self.inside as f64;
        (0..opts.resamples)
            .map(|_| {
                // multinomial resample by conditional binomials
                let mut left = n;
                let mut mass = 1.0;
                let mut out = vec![0u64; self.counts.len()];
                for (i, &c) in self.counts.iter().enumerate() {
                    if left == 0 {
                        break;
                    }
                    let pi = c as f64 / total;
                    let prob = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 1.0 };
                    let k = if prob >= 1.0 {
                        left
                    } else if prob <= 0.0 {
                        0
                    } else {
                        Binomial::new(left, prob).expect("valid binomial").sample(&mut rng)
                    };
                    out[i] = k;
                    left -= k;
                    mass -= pi;
                }
                stat(&out)
            })
            .collect()
    }

    pub fn entropy(&self, opts: BootstrapOptions) -> EstimateWithCI {
        let value = self.corrected_kl_of(&self.counts);
        let boot = self.bootstrap(opts, &|c| self.corrected_kl_of(c));
        EstimateWithCI::new(
            value,
            quantile(&boot, 0.025).max(0.0),
            quantile(&boot, 0.975),
            "histogram-kl-miller-madow",
            self.inside as usize,
        )
    }

    pub fn fisher(&self, opts: BootstrapOptions) -> EstimateWithCI {
        let value = self.fisher_of(&self.counts);
        let boot = self.bootstrap(opts, &|c| self.fisher_of(c));
        EstimateWithCI::new(
            value,
            quantile(&boot, 0.025).max(0.0),
            quantile(&boot, 0.975),
            "histogram-fisher",
            self.inside as usize,
        )
    }
}

pub fn estimate_relative_entropy(
    samples: &[f64],
    model: &GleModel,
    binning: &Binning,
    opts: BootstrapOptions,
) -> Result<EstimateWithCI> {
    Ok(MarginalHistogram::build(samples, model, binning)?.entropy(opts))
}

pub fn estimate_fisher(samples: &[f64], model: &GleModel, binning: &Binning, opts: BootstrapOptions) -> Result<EstimateWithCI> {
    Ok(MarginalHistogram::build(samples, model, binning)?.fisher(opts))
}

pub fn estimate_l1(samples: &[f64], model: &GleModel, binning: &Binning) -> Result<f64> {
    Ok(MarginalHistogram::build(samples, model, binning)?.l1())
}

/// All distances for one sample set.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub entropy: EstimateWithCI,
    pub plugin_entropy: f64,
    pub fisher: EstimateWithCI,
    pub l1: f64,
    /// `½ L¹² ≤ H` between the binned distributions.
    pub pinsker_holds: bool,
}

pub fn divergence_report(samples: &[f64], model: &GleModel, binning: &Binning, opts: BootstrapOptions) -> Result<DivergenceReport> {
    let h = MarginalHistogram::build(samples, model, binning)?;
    let plugin = h.plugin_entropy();
    let l1 = h.l1();
    Ok(DivergenceReport {
        entropy: h.entropy(opts),
        fisher: h.fisher(opts),
        plugin_entropy: plugin,
        pinsker_holds: 0.5 * l1 * l1 <= plugin + 1e-12,
        l1,
    })
}

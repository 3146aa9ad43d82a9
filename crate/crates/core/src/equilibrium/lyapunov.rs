//! Drift condition `LG ≤ −aG + d̂` for quadratic-plus-potential Lyapunov functions.
//!
//! `G = Ĉ + A|q|²/2 + B|p|²/2 + C|r|²/2 + D V(q) + E(p,q) + F(q,r) + H(p,r) + M(∇V,p)`,
//! with `r` the single auxiliary mode. The torus form uses `A = E = F = M = 0`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dynamics::{stream_id, GaussianStream, StreamKind};
use crate::error::{GleError, Result};
use crate::model::{DomainKind, GleModel, State};
use crate::symbolic::{forward_generator, rat, Poly, Var};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovForm {
    Torus,
    Confining,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpec {
    pub form: LyapunovForm,
    pub c_hat: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub h: f64,
    pub m: f64,
    /// Contraction rate in `LG ≤ −rate·G + d̂`.
    pub rate: f64,
}

impl LyapunovSpec {
    /// Torus constants `a = 1/4`, `B = D = 13/16`, `C = 5/8`, `H = 3/16`; `Ĉ = 2`
    /// keeps `G ≥ 1` for potentials bounded below by `−1`.
    pub fn torus_reference() -> Self {
        LyapunovSpec {
            form: LyapunovForm::Torus,
            c_hat: 2.0,
            a: 0.0,
            b: 13.0 / 16.0,
            c: 5.0 / 8.0,
            d: 13.0 / 16.0,
            e: 0.0,
            f: 0.0,
            h: 3.0 / 16.0,
            m: 0.0,
            rate: 0.25,
        }
    }

    /// Checks the sign constraints that make `G` norm-like.
    pub fn validate(&self, model: &GleModel) -> Result<()> {
        if model.m != 1 {
            return Err(GleError::Unsupported("Lyapunov forms are defined for m = 1".into()));
        }
        if self.form == LyapunovForm::Torus {
            if self.b <= self.h {
                return Err(GleError::Precondition(format!("need B > H, got B={} H={}", self.b, self.h)));
            }
            if self.c <= self.h {
                return Err(GleError::Precondition(format!("need C > H, got C={} H={}", self.c, self.h)));
            }
            let k = -(model.d as f64) * model.potential.profile_min();
            if self.c_hat <= self.d * k {
                return Err(GleError::Precondition(format!(
                    "need Ĉ > D·k = {}, got Ĉ={}",
                    self.d * k,
                    self.c_hat
                )));
            }
        }
        if !(self.rate > 0.0) {
            return Err(GleError::domain("rate", "must be > 0"));
        }
        Ok(())
    }

    pub fn g(&self, model: &GleModel, x: &State) -> f64 {
        let pot = &model.potential;
        let mut g = self.c_hat + self.d * pot.eval(&x.q);
        for i in 0..model.d {
            let (q, p, r) = (x.q[i], x.p[i], x.z[i]);
            let v1 = pot.profile_derivative(q, 1);
            g += 0.5 * self.a * q * q + 0.5 * self.b * p * p + 0.5 * self.c * r * r;
            g += self.e * p * q + self.f * q * r + self.h * p * r + self.m * v1 * p;
        }
        g
    }

    /// `LG` from the closed-form gradients of `G`.
    pub fn lg(&self, model: &GleModel, x: &State) -> f64 {
        let pot = &model.potential;
        let (lam, alpha, beta) = (model.lambda[0], model.alpha[0], model.beta);
        let mut out = 0.0;
        for i in 0..model.d {
            let (q, p, r) = (x.q[i], x.p[i], x.z[i]);
            let v1 = pot.profile_derivative(q, 1);
            let v2 = pot.profile_derivative(q, 2);
            let gq = self.a * q + self.d * v1 + self.e * p + self.f * r + self.m * v2 * p;
            let gp = self.b * p + self.e * q + self.h * r + self.m * v1;
            let gr = self.c * r + self.f * q + self.h * p;
            out += p * gq + (-v1 + lam * r) * gp + (-lam * p - alpha * r) * gr + alpha / beta * self.c;
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub count: usize,
    pub max_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    /// `max (LG + aG)` over the points.
    pub d_hat: f64,
    pub min_g: f64,
    pub bins: Vec<RadiusBin>,
    /// Index of the first bin from which the maxima never increase.
    pub fitted_bin: usize,
    pub fitted_radius: f64,
    pub n_points: usize,
    pub passed: bool,
}

fn radius(model: &GleModel, x: &State) -> f64 {
    let mut s: f64 = x.p.iter().chain(&x.z).map(|v| v * v).sum();
    if model.domain_kind == DomainKind::Confining {
        s += x.q.iter().map(|v| v * v).sum::<f64>();
    }
    s.sqrt()
}

pub fn lyapunov_drift_check(model: &GleModel, spec: &LyapunovSpec, points: &[State]) -> Result<DriftReport> {
    spec.validate(model)?;
    if points.is_empty() {
        return Err(GleError::Precondition("no sample points".into()));
    }
    let mut drift = Vec::with_capacity(points.len());
    let mut min_g = f64::INFINITY;
    for x in points {
        x.check(model)?;
        let g = spec.g(model, x);
        if g < 1.0 {
            return Err(GleError::Precondition(format!(
                "G = {g} < 1 at {x:?}; constants violate the positivity constraints"
            )));
        }
        min_g = min_g.min(g);
        drift.push((radius(model, x), spec.lg(model, x) + spec.rate * g));
    }
    let d_hat = drift.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    let rmax = drift.iter().map(|d| d.0).fold(0.0, f64::max);
    let nb = 20;
    let mut bins: Vec<RadiusBin> = (0..nb)
        .map(|k| RadiusBin {
            r_lo: rmax * k as f64 / nb as f64,
            r_hi: rmax * (k + 1) as f64 / nb as f64,
            count: 0,
            max_drift: f64::NEG_INFINITY,
        })
        .collect();
    for &(r, v) in &drift {
        let k = ((r / rmax * nb as f64) as usize).min(nb - 1);
        bins[k].count += 1;
        bins[k].max_drift = bins[k].max_drift.max(v);
    }
    let occupied: Vec<usize> = (0..nb).filter(|&k| bins[k].count > 0).collect();
    let mut fitted = *occupied.last().expect("at least one bin");
    for w in occupied.windows(2).rev() {
        let (a, b) = (bins[w[0]].max_drift, bins[w[1]].max_drift);
        if b <= a + 1e-12 * a.abs().max(1.0) {
            fitted = w[0];
        } else {
            break;
        }
    }
    let passed = d_hat.is_finite() && fitted <= (3 * nb) / 4;
    Ok(DriftReport {
        d_hat,
        min_g,
        fitted_radius: bins[fitted].r_lo,
        fitted_bin: fitted,
        bins,
        n_points: points.len(),
        passed,
    })
}

/// Points with `‖x‖` uniform in `[0, r_max]` and uniform directions; `q` uniform on the torus.
pub fn drift_proposal(model: &GleModel, n: usize, r_max: f64, seed: u64) -> Vec<State> {
    let d = model.d;
    let mut s = GaussianStream::new(seed, stream_id(0, StreamKind::Sampler), 2);
    (0..n)
        .map(|_| {
            let torus = model.domain_kind == DomainKind::Torus;
            let dim = if torus { 2 * d } else { 3 * d };
            let mut v: Vec<f64> = (0..dim).map(|_| s.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let r = r_max * s.uniform();
            v.iter_mut().for_each(|x| *x *= r / norm);
            if torus {
                State {
                    q: (0..d).map(|_| TAU * (1.0 - s.uniform())).collect(),
                    p: v[..d].to_vec(),
                    z: v[d..].to_vec(),
                }
            } else {
                State {
                    q: v[..d].to_vec(),
                    p: v[d..2 * d].to_vec(),
                    z: v[2 * d..].to_vec(),
                }
            }
        })
        .collect()
}

/// Quadratic part of `x ↦ f(x) − f(0)` on `(q, p, r)` for `d = 1`, by polarization.
fn quadratic_form(f: &dyn Fn(&State) -> f64) -> DMatrix<f64> {
    let at = |v: [f64; 3]| {
        f(&State {
            q: vec![v[0]],
            p: vec![v[1]],
            z: vec![v[2]],
        })
    };
    let f0 = at([0.0; 3]);
    let mut m = DMatrix::zeros(3, 3);
    let e = |i: usize| {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        v
    };
    for i in 0..3 {
        m[(i, i)] = at(e(i)) - f0;
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let mut v = e(i);
            v[j] = 1.0;
            let off = 0.5 * (at(v) - f0 - m[(i, i)] - m[(j, j)]);
            m[(i, j)] = off;
            m[(j, i)] = off;
        }
    }
    m
}

/// Grid search for confining-case constants when `V` is quadratic, `d = 1`.
///
/// Maximizes the largest admissible `a` with `Q_L + a Q_G ≺ 0`, then uses half of it.
pub fn fit_confining_spec(model: &GleModel) -> Result<LyapunovSpec> {
    if model.domain_kind != DomainKind::Confining || model.d != 1 || model.m != 1 {
        return Err(GleError::Unsupported("confining fit needs a confining model with d = m = 1".into()));
    }
    if !matches!(model.potential, crate::model::Potential::Quadratic { .. }) {
        return Err(GleError::Unsupported("confining fit implemented for quadratic potentials".into()));
    }
    let pos = [0.5, 1.0, 1.5, 2.0];
    let cross = [-0.5, -0.25, 0.0, 0.25, 0.5];
    let mut best: Option<(f64, LyapunovSpec)> = None;
    for &a in &pos {
        for &b in &pos {
            for &c in &pos {
                for &d in &[0.0, 0.5, 1.0] {
                    for &e in &cross {
                        for &f in &cross {
                            for &h in &cross {
                                let spec = LyapunovSpec {
                                    form: LyapunovForm::Confining,
                                    c_hat: 0.0,
                                    a,
                                    b,
                                    c,
                                    d,
                                    e,
                                    f,
                                    h,
                                    m: 0.0,
                                    rate: 1.0,
                                };
                                let qg = quadratic_form(&|x| spec.g(model, x));
                                let eg = SymmetricEigen::new(qg.clone());
                                let gmin = eg.eigenvalues.min();
                                if gmin <= 1e-6 {
                                    continue;
                                }
                                let ql = quadratic_form(&|x| spec.lg(model, x));
                                // a* = λ_min(−Q_G^{-1/2} Q_L Q_G^{-1/2})
                                let inv_sqrt = &eg.eigenvectors
                                    * DMatrix::from_diagonal(&eg.eigenvalues.map(|v| 1.0 / v.sqrt()))
                                    * eg.eigenvectors.transpose();
                                let k = -(&inv_sqrt * &ql * &inv_sqrt);
                                let astar = SymmetricEigen::new((&k + k.transpose()) * 0.5).eigenvalues.min();
                                if astar > 1e-6 && best.as_ref().is_none_or(|(s, _)| astar > *s) {
                                    best = Some((astar, spec));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let (astar, mut spec) =
        best.ok_or_else(|| GleError::NoConvergence { solver: "lyapunov grid search".into(), iterations: 0, residual: 0.0 })?;
    spec.rate = 0.5 * astar;
    // quadratic part is positive definite and V ≥ 0, so G ≥ Ĉ
    spec.c_hat = 1.0;
    Ok(spec)
}

fn to_rational(x: f64, path: &str) -> Result<num_rational::Rational64> {
    num_rational::Rational64::approximate_float(x)
        .filter(|r| (*r.numer() as f64 / *r.denom() as f64 - x).abs() <= 1e-15 * x.abs().max(1.0))
        .ok_or_else(|| GleError::Unsupported(format!("{path} = {x} has no exact small rational form")))
}

/// `G` as an exact polynomial in `(q, p, z)` with `V` symbolic (d = 1).
pub fn symbolic_g(spec: &LyapunovSpec) -> Result<Poly> {
    let (q, p, z) = (Poly::var(Var::Q), Poly::var(Var::P), Poly::var(Var::Z));
    let half = rat(1, 2);
    let mut g = Poly::constant(to_rational(spec.c_hat, "c_hat")?);
    g = g.add(&q.mul(&q).scale(to_rational(spec.a, "a")? * half));
    g = g.add(&p.mul(&p).scale(to_rational(spec.b, "b")? * half));
    g = g.add(&z.mul(&z).scale(to_rational(spec.c, "c")? * half));
    g = g.add(&Poly::potential_derivative(0).scale(to_rational(spec.d, "d")?));
    g = g.add(&p.mul(&q).scale(to_rational(spec.e, "e")?));
    g = g.add(&q.mul(&z).scale(to_rational(spec.f, "f")?));
    g = g.add(&p.mul(&z).scale(to_rational(spec.h, "h")?));
    g = g.add(&Poly::potential_derivative(1).mul(&p).scale(to_rational(spec.m, "m")?));
    Ok(g)
}

/// Largest gap between the closed-form `LG` and the symbolic generator applied to `G`.
pub fn symbolic_drift_residual(model: &GleModel, spec: &LyapunovSpec, points: &[State]) -> Result<f64> {
    if model.d != 1 || model.m != 1 {
        return Err(GleError::Unsupported("symbolic oracle covers d = m = 1".into()));
    }
    let gen = forward_generator(
        to_rational(model.lambda[0], "lambda[0]")?,
        to_rational(model.alpha[0], "alpha[0]")?,
        to_rational(model.beta, "beta")?,
    );
    let lg = gen.apply(&symbolic_g(spec)?);
    let pot = &model.potential;
    let vder = |k: u32, q: f64| if k == 0 { pot.profile(q) } else { pot.profile_derivative(q, k) };
    let mut worst: f64 = 0.0;
    for x in points {
        let (q, p, z) = (x.q[0], x.p[0], x.z[0]);
        worst = worst.max((lg.eval(q, p, z, &vder) - spec.lg(model, x)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;

    fn cos_model() -> GleModel {
        GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::cosine(1.0)).unwrap()
    }

    fn g_poly() -> Poly {
        let (p, z) = (Poly::var(Var::P), Poly::var(Var::Z));
        Poly::int(2)
            .add(&p.mul(&p).scale(rat(13, 32)))
            .add(&z.mul(&z).scale(rat(5, 16)))
            .add(&Poly::potential_derivative(0).scale(rat(13, 16)))
            .add(&p.mul(&z).scale(rat(3, 16)))
    }

    #[test]
    fn closed_form_matches_symbolic_generator() {
        let model = cos_model();
        let spec = LyapunovSpec::torus_reference();
        let lg = forward_generator(rat(1, 1), rat(1, 1), rat(1, 1)).apply(&g_poly());
        let vder = |k: u32, q: f64| {
            if k == 0 {
                model.potential.profile(q)
            } else {
                model.potential.profile_derivative(q, k)
            }
        };
        let pts = drift_proposal(&model, 200, 6.0, 3);
        assert!(symbolic_drift_residual(&model, &spec, &pts).unwrap() < 1e-12);
        assert_eq!(symbolic_g(&spec).unwrap(), g_poly());
        for x in pts {
            let (q, p, z) = (x.q[0], x.p[0], x.z[0]);
            assert!((g_poly().eval(q, p, z, &vder) - spec.g(&model, &x)).abs() < 1e-12);
            assert!((lg.eval(q, p, z, &vder) - spec.lg(&model, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_reference_has_drift() {
        let model = cos_model();
        let pts = drift_proposal(&model, 20_000, 12.0, 1);
        let rep = lyapunov_drift_check(&model, &LyapunovSpec::torus_reference(), &pts).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.min_g >= 1.0);
        assert!(rep.bins.last().unwrap().max_drift < 0.0);
    }

    #[test]
    fn rejects_bad_constants() {
        let model = cos_model();
        let pts = drift_proposal(&model, 10, 1.0, 1);
        let mut s = LyapunovSpec::torus_reference();
        s.h = 1.0;
        assert!(matches!(lyapunov_drift_check(&model, &s, &pts), Err(GleError::Precondition(_))));
        let mut s = LyapunovSpec::torus_reference();
        s.c_hat = 0.5;
        assert!(lyapunov_drift_check(&model, &s, &pts).is_err());
    }

    #[test]
    fn confining_quadratic_fit() {
        let model = GleModel::new(1, vec![1.0], vec![1.0], 1.0, Potential::quadratic(1.0), DomainKind::Confining).unwrap();
        let spec = fit_confining_spec(&model).unwrap();
        assert!(spec.rate > 0.0);
        let pts = drift_proposal(&model, 20_000, 10.0, 2);
        let rep = lyapunov_drift_check(&model, &spec, &pts).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.bins.last().unwrap().max_drift < 0.0);
    }
}

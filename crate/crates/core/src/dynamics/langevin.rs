use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::integrator::{IntegratorScheme, SchemeKind};
use super::noise::{stream_id, GaussianStream, NoisePath, StreamKind};
use super::paths::{step_count, Trajectory};
use crate::error::{GleError, Result};
use crate::model::{kernel_mass, wrap_angle, DomainKind, GleModel, Potential, State};

/// Parameters of `Q̇ = P`, `Ṗ = −∇V(Q) − γP + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinSystem {
    pub gamma: f64,
    pub beta: f64,
    pub potential: Potential,
    pub domain_kind: DomainKind,
    pub d: usize,
}

impl LangevinSystem {
    /// White-noise limit of a GLE model.
    pub fn limit_of(model: &GleModel) -> Self {
        LangevinSystem {
            gamma: kernel_mass(model),
            beta: model.beta,
            potential: model.potential.clone(),
            domain_kind: model.domain_kind,
            d: model.d,
        }
    }

    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

#[derive(Debug, Clone)]
pub enum LimitNoise {
    /// Deterministic dynamics.
    None,
    /// Own stream `(replica, Limit)`.
    Independent { seed: u64, replica: u64 },
    /// Reuses the per-mode increments of a GLE path so both systems see the same `Wᵢ`.
    Coupled { lambda: Vec<f64>, alpha: Vec<f64>, path: NoisePath },
}

/// Integrates the limiting Langevin equation from `(q0, p0)`.
pub fn simulate_langevin(
    system: &LangevinSystem,
    scheme: IntegratorScheme,
    horizon: f64,
    q0: &[f64],
    p0: &[f64],
    noise: &LimitNoise,
    stride: usize,
) -> Result<Trajectory> {
    let gamma = system.gamma;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(GleError::domain("gamma", "must be > 0"));
    }
    let d = system.d;
    if q0.len() != d || p0.len() != d {
        return Err(GleError::Dimension("initial condition does not match d".into()));
    }
    let dt = scheme.dt;
    if !(dt > 0.0) {
        return Err(GleError::domain("dt", "must be > 0"));
    }
    let steps = step_count(horizon, dt)?;
    let beta = system.beta;

    // per-mode weights √(2λᵢ²/(αᵢβ)) whose squares sum to 2γ/β
    let (weights, seed, sid, width, mut stream) = match noise {
        LimitNoise::None => (vec![], 0, 0, 0, None),
        LimitNoise::Independent { seed, replica } => {
            let sid = stream_id(*replica, StreamKind::Limit);
            (vec![(2.0 * gamma / beta).sqrt()], *seed, sid, d, Some(GaussianStream::new(*seed, sid, d)))
        }
        LimitNoise::Coupled { lambda, alpha, path } => {
            if scheme.kind != SchemeKind::EulerMaruyama {
                return Err(GleError::Unsupported("coupled limit noise requires euler_maruyama".into()));
            }
            if lambda.len() != alpha.len() || path.width != lambda.len() * d {
                return Err(GleError::Dimension("coupled noise does not match the mode count".into()));
            }
            let w: Vec<f64> = lambda.iter().zip(alpha).map(|(l, a)| (2.0 * l * l / (a * beta)).sqrt()).collect();
            let total: f64 = w.iter().map(|x| x * x).sum();
            if (total - 2.0 * gamma / beta).abs() > 1e-10 * (2.0 * gamma / beta) {
                return Err(GleError::Precondition(format!(
                    "coupled noise intensity {total} differs from 2γ/β = {}",
                    2.0 * gamma / beta
                )));
            }
            if (path.dt - dt).abs() > 1e-15 * dt {
                return Err(GleError::Precondition("noise path grid differs from the scheme".into()));
            }
            (w, path.tag.seed, path.tag.stream, path.width, Some(path.stream()))
        }
    };

    let modes = weights.len();
    let mut normals = vec![0.0; width];
    let (mut q, mut p) = (q0.to_vec(), p0.to_vec());
    let torus = system.domain_kind == DomainKind::Torus;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut lifted = Vec::new();
    let mut record = |k: u64, q: &[f64], p: &[f64]| {
        times.push(k as f64 * dt);
        lifted.extend_from_slice(q);
        states.push(State {
            q: if torus { q.iter().map(|&x| wrap_angle(x)).collect() } else { q.to_vec() },
            p: p.to_vec(),
            z: vec![],
        });
    };
    record(0, &q, &p);
    let decay = (-gamma * dt).exp();
    let response = (1.0 - decay) / gamma;
    let ou_sd = ((1.0 - decay * decay) / beta).sqrt();
    let h = dt.sqrt();
    for k in 1..=steps {
        if let Some(s) = stream.as_mut() {
            s.next_step(&mut normals);
        }
        for i in 0..d {
            match scheme.kind {
                SchemeKind::EulerMaruyama => {
                    let f = -system.potential.profile_derivative(q[i], 1);
                    let p_old = p[i];
                    let mut kick = 0.0;
                    for j in 0..modes {
                        kick += weights[j] * h * normals[j * d + i];
                    }
                    q[i] += p_old * dt;
                    p[i] += (f - gamma * p_old) * dt + kick;
                }
                SchemeKind::OuSplitting => {
                    q[i] += 0.5 * dt * p[i];
                    let f = -system.potential.profile_derivative(q[i], 1);
                    let eta = if modes > 0 { normals[i] } else { 0.0 };
                    p[i] = decay * p[i] + response * f + if modes > 0 { ou_sd * eta } else { 0.0 };
                    q[i] += 0.5 * dt * p[i];
                }
            }
        }
        if k % stride.max(1) as u64 == 0 {
            if !(q.iter().chain(&p).all(|x| x.is_finite())) {
                return Err(GleError::NonFinite(format!("limit system at step {k}")));
            }
            record(k, &q, &p);
        }
    }
    let replica = match noise {
        LimitNoise::Coupled { path, .. } => path.tag.replica,
        LimitNoise::Independent { replica, .. } => *replica,
        LimitNoise::None => 0,
    };
    Ok(Trajectory {
        times,
        states,
        lifted_q: lifted,
        replica_id: replica,
        rng_stream_id: sid,
        seed,
        model_fingerprint: system.fingerprint(),
    })
}

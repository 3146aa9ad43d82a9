use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::integrator::{Integrator, IntegratorScheme};
use super::noise::{stream_id, GaussianStream, StreamKind};
use crate::equilibrium::GibbsSampler;
use crate::error::{GleError, Result};
use crate::model::{wrap_angle, DomainKind, GleModel, State};

/// Time-indexed replica path. `lifted_q` holds unwrapped positions, `d` per stored time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub lifted_q: Vec<f64>,
    pub replica_id: u64,
    pub rng_stream_id: u64,
    pub seed: u64,
    pub model_fingerprint: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.q.len())
    }

    pub fn lifted(&self, k: usize, i: usize) -> f64 {
        self.lifted_q[k * self.dim() + i]
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.states.len() || self.lifted_q.len() != self.times.len() * self.dim() {
            return Err(GleError::Dimension("trajectory arrays disagree in length".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GleError::Precondition("trajectory times must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum InitialCondition {
    Gibbs,
    Point(State),
    /// One state per replica.
    Custom(Vec<State>),
}

#[derive(Debug, Clone, Copy)]
pub struct PathOptions {
    /// Store every `stride`-th step.
    pub stride: usize,
    /// Upper bound on `steps × replicas`.
    pub max_total_steps: u64,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            stride: 1,
            max_total_steps: 1_000_000,
        }
    }
}

pub fn step_count(horizon: f64, dt: f64) -> Result<u64> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(GleError::domain("horizon", "must be > 0"));
    }
    let n = horizon / dt;
    let r = n.round();
    Ok(if (n - r).abs() <= 1e-9 * n.max(1.0) { r as u64 } else { n.ceil() as u64 })
}

/// Simulates `n_replicas` independent paths; replica `r` uses stream `(r, Dynamics)`.
pub fn simulate_paths(
    model: &GleModel,
    scheme: IntegratorScheme,
    horizon: f64,
    n_replicas: usize,
    seed: u64,
    init: &InitialCondition,
    opts: PathOptions,
) -> Result<Vec<Trajectory>> {
    if n_replicas == 0 {
        return Err(GleError::domain("replicas", "must be ≥ 1"));
    }
    let steps = step_count(horizon, scheme.dt)?;
    let total = steps.saturating_mul(n_replicas as u64);
    if total > opts.max_total_steps {
        return Err(GleError::Budget {
            what: "integrator steps".into(),
            requested: total,
            limit: opts.max_total_steps,
        });
    }
    if opts.stride == 0 {
        return Err(GleError::domain("stride", "must be ≥ 1"));
    }
    let integ = Integrator::new(model, scheme)?;
    let starts: Vec<State> = match init {
        InitialCondition::Gibbs => {
            let sampler = GibbsSampler::new(model)?;
            (0..n_replicas as u64)
                .map(|r| sampler.draw_indexed(seed, r, StreamKind::Initial).0)
                .collect()
        }
        InitialCondition::Point(s) => vec![s.clone(); n_replicas],
        InitialCondition::Custom(v) => {
            if v.len() != n_replicas {
                return Err(GleError::Dimension(format!("{} initial states for {} replicas", v.len(), n_replicas)));
            }
            v.clone()
        }
    };
    for s in &starts {
        s.check(model)?;
    }
    let fingerprint = model.fingerprint();
    (0..n_replicas)
        .into_par_iter()
        .map(|r| run_one(&integ, &starts[r], steps, seed, r as u64, opts.stride, &fingerprint))
        .collect()
}

fn run_one(
    integ: &Integrator,
    start: &State,
    steps: u64,
    seed: u64,
    replica: u64,
    stride: usize,
    fingerprint: &str,
) -> Result<Trajectory> {
    let model = integ.model();
    let dt = integ.scheme().dt;
    let sid = stream_id(replica, StreamKind::Dynamics);
    let mut stream = GaussianStream::new(seed, sid, integ.noise_width());
    let mut normals = vec![0.0; integ.noise_width()];
    let (mut q, mut p, mut z) = (start.q.clone(), start.p.clone(), start.z.clone());
    let cap = steps as usize / stride + 1;
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    let mut lifted = Vec::with_capacity(cap * model.d);
    let torus = model.domain_kind == DomainKind::Torus;
    let mut record = |k: u64, q: &[f64], p: &[f64], z: &[f64]| {
        times.push(k as f64 * dt);
        lifted.extend_from_slice(q);
        states.push(State {
            q: if torus { q.iter().map(|&x| wrap_angle(x)).collect() } else { q.to_vec() },
            p: p.to_vec(),
            z: z.to_vec(),
        });
    };
    record(0, &q, &p, &z);
    for k in 1..=steps {
        stream.next_step(&mut normals);
        integ.advance(&mut q, &mut p, &mut z, &normals);
        if k % stride as u64 == 0 {
            if !(q.iter().chain(&p).chain(&z).all(|x| x.is_finite())) {
                return Err(GleError::NonFinite(format!("replica {replica} at step {k}")));
            }
            record(k, &q, &p, &z);
        }
    }
    Ok(Trajectory {
        times,
        states,
        lifted_q: lifted,
        replica_id: replica,
        rng_stream_id: sid,
        seed,
        model_fingerprint: fingerprint.to_string(),
    })
}

/// Many particles advanced in lockstep, for observables of the law at fixed times.
#[derive(Debug, Clone)]
pub struct Ensemble {
    integ: Integrator,
    seed: u64,
    step: u64,
    q: Vec<f64>,
    p: Vec<f64>,
    z: Vec<f64>,
}

impl Ensemble {
    pub fn new(integ: Integrator, states: &[State], seed: u64) -> Result<Self> {
        let model = integ.model();
        let mut q = Vec::with_capacity(states.len() * model.d);
        let mut p = Vec::with_capacity(states.len() * model.d);
        let mut z = Vec::with_capacity(states.len() * model.d * model.m);
        for s in states {
            s.check(model)?;
            q.extend_from_slice(&s.q);
            p.extend_from_slice(&s.p);
            z.extend_from_slice(&s.z);
        }
        Ok(Ensemble {
            integ,
            seed,
            step: 0,
            q,
            p,
            z,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len() / self.integ.model().d
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.integ.scheme().dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Particle `i` draws from stream `(i, Dynamics)` at word offset of the current step.
    pub fn advance(&mut self, steps: u64) {
        let d = self.integ.model().d;
        let md = d * self.integ.model().m;
        let width = self.integ.noise_width();
        let (seed, start) = (self.seed, self.step);
        let integ = &self.integ;
        self.q
            .par_chunks_mut(d)
            .zip(self.p.par_chunks_mut(d))
            .zip(self.z.par_chunks_mut(md))
            .enumerate()
            .for_each(|(i, ((q, p), z))| {
                let mut s = GaussianStream::new(seed, stream_id(i as u64, StreamKind::Dynamics), width);
                s.seek(start);
                let mut normals = vec![0.0; width];
                for _ in 0..steps {
                    s.next_step(&mut normals);
                    integ.advance(q, p, z, &normals);
                }
            });
        self.step += steps;
    }

    /// Wrapped position of coordinate `i` of every particle.
    pub fn positions(&self, i: usize) -> Vec<f64> {
        let d = self.integ.model().d;
        let torus = self.integ.model().domain_kind == DomainKind::Torus;
        self.q
            .iter()
            .skip(i)
            .step_by(d)
            .map(|&x| if torus { wrap_angle(x) } else { x })
            .collect()
    }

    pub fn momenta(&self, i: usize) -> Vec<f64> {
        let d = self.integ.model().d;
        self.p.iter().skip(i).step_by(d).copied().collect()
    }

    pub fn auxiliary(&self, j: usize, i: usize) -> Vec<f64> {
        let d = self.integ.model().d;
        let md = d * self.integ.model().m;
        self.z.iter().skip(j * d + i).step_by(md).copied().collect()
    }
}

/// Writes trajectories as comma-separated rows `t, q.., p.., z.., replica_id`.
pub fn export_trajectories(
    out: &mut dyn Write,
    trajectories: &[Trajectory],
    stride: usize,
    config_hash: &str,
) -> Result<()> {
    let first = trajectories
        .first()
        .ok_or_else(|| GleError::Precondition("no trajectories to export".into()))?;
    let d = first.dim();
    let md = first.states[0].z.len();
    writeln!(
        out,
        "# model_fingerprint={} seed={} config_hash={}",
        first.model_fingerprint, first.seed, config_hash
    )?;
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("q{i}")));
    header.extend((0..d).map(|i| format!("p{i}")));
    header.extend((0..md).map(|i| format!("z{i}")));
    header.push("replica_id".into());
    writeln!(out, "{}", header.join(","))?;
    for tr in trajectories {
        for k in (0..tr.len()).step_by(stride.max(1)) {
            let s = &tr.states[k];
            let mut row = vec![crate::io::fmt_f64(tr.times[k])];
            row.extend(s.q.iter().chain(&s.p).chain(&s.z).map(|&x| crate::io::fmt_f64(x)));
            row.push(tr.replica_id.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

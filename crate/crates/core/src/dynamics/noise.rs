//! Counter-based Gaussian streams.
//!
//! The master seed expands into a ChaCha8 key; each `(replica, kind)` pair selects a
//! ChaCha stream, and step `k` starts at word `k · words_per_step`. Normals come from
//! Box–Muller on pairs of 64-bit draws, so every step consumes a fixed number of words
//! and any step can be regenerated without replaying the ones before it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Purpose tag folded into the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    Dynamics = 1,
    Initial = 2,
    Limit = 3,
    Sampler = 4,
    Resample = 5,
}

pub fn stream_id(replica: u64, kind: StreamKind) -> u64 {
    (replica << 8) | kind as u64
}

/// Uniform on `(0, 1]` from the top 53 bits.
fn unit_open(u: u64) -> f64 {
    ((u >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

pub fn box_muller(u1: u64, u2: u64) -> (f64, f64) {
    let r = (-2.0 * unit_open(u1).ln()).sqrt();
    let theta = TAU * unit_open(u2);
    (r * theta.cos(), r * theta.sin())
}

/// Sequential standard-normal generator on one stream.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    width: usize,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64, width: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        GaussianStream { rng, width }
    }

    pub fn words_per_step(&self) -> u128 {
        (4 * self.width.div_ceil(2)) as u128
    }

    /// Positions the stream at the start of step `k`.
    pub fn seek(&mut self, step: u64) {
        let w = self.words_per_step() * step as u128;
        self.rng.set_word_pos(w);
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Fills `out` (length `width`) with the normals of the next step.
    pub fn next_step(&mut self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.width);
        let mut i = 0;
        while i < self.width {
            let (a, b) = box_muller(self.rng.next_u64(), self.rng.next_u64());
            out[i] = a;
            if i + 1 < self.width {
                out[i + 1] = b;
            }
            i += 2;
        }
    }

    /// Raw access for samplers that need a variable number of draws.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self) -> f64 {
        unit_open(self.rng.next_u64())
    }

    pub fn normal(&mut self) -> f64 {
        box_muller(self.rng.next_u64(), self.rng.next_u64()).0
    }
}

/// Brownian increments on a uniform grid, identified by `(seed, replica, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseTag {
    pub seed: u64,
    pub replica: u64,
    pub stream: u64,
}

#[derive(Debug, Clone)]
pub struct NoisePath {
    pub tag: NoiseTag,
    pub dt: f64,
    pub width: usize,
}

impl NoisePath {
    pub fn new(seed: u64, replica: u64, kind: StreamKind, dt: f64, width: usize) -> Self {
        NoisePath {
            tag: NoiseTag {
                seed,
                replica,
                stream: stream_id(replica, kind),
            },
            dt,
            width,
        }
    }

    pub fn stream(&self) -> GaussianStream {
        GaussianStream::new(self.tag.seed, self.tag.stream, self.width)
    }

    /// `ΔW` for step `k`: `√dt` times standard normals.
    pub fn increments(&self, step: u64) -> Vec<f64> {
        let mut s = self.stream();
        s.seek(step);
        let mut out = vec![0.0; self.width];
        s.next_step(&mut out);
        let h = self.dt.sqrt();
        out.iter_mut().for_each(|x| *x *= h);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seek_matches_sequential() {
        let mut a = GaussianStream::new(7, stream_id(3, StreamKind::Dynamics), 3);
        let mut buf = vec![0.0; 3];
        let mut seq = Vec::new();
        for _ in 0..5 {
            a.next_step(&mut buf);
            seq.push(buf.clone());
        }
        let mut b = GaussianStream::new(7, stream_id(3, StreamKind::Dynamics), 3);
        b.seek(3);
        b.next_step(&mut buf);
        assert_eq!(buf, seq[3]);
    }

    #[test]
    fn streams_differ() {
        let p = NoisePath::new(1, 0, StreamKind::Dynamics, 0.1, 2);
        let q = NoisePath::new(1, 1, StreamKind::Dynamics, 0.1, 2);
        assert_ne!(p.increments(0), q.increments(0));
        assert_eq!(p.increments(5), p.increments(5));
    }

    #[test]
    fn increment_variance() {
        let dt = 0.01;
        let path = NoisePath::new(11, 0, StreamKind::Dynamics, dt, 1);
        let mut s = path.stream();
        let n = 200_000;
        let mut buf = [0.0];
        let mut sum2 = 0.0;
        for _ in 0..n {
            s.next_step(&mut buf);
            sum2 += buf[0] * buf[0] * dt;
        }
        let var = sum2 / n as f64;
        // standard error of the variance estimate is dt·√(2/n)
        assert!((var - dt).abs() < 4.0 * dt * (2.0 / n as f64).sqrt(), "var {var}");
    }
}

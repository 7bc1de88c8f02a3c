//! Monte-Carlo replay of the two-node system.
//!
//! Each draw samples the honest noise `N_h` uniformly in the `Δ`-ball and
//! the adversarial noise `N_a` from the chosen distribution. The report pair
//! is accepted when `‖N_h − N_a‖ ≤ ηΔ`, and the estimation error is
//! `‖(N_h + N_a)/2‖²`. The ground truth cancels in both, so it is never
//! drawn.
//!
//! Draws are split into fixed-size chunks. Chunk `i` owns its own ChaCha8
//! stream seeded with `seed ^ splitmix64(i)`, and chunk statistics are
//! merged in chunk order, so the result does not depend on how many threads
//! run the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::game::NoiseSpec;
use crate::geometry::Dim;
use crate::kernels::GameParams;

/// Adversarial noise for a simulation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SimNoise {
    /// An equilibrium-style noise distribution.
    Spec(NoiseSpec),
    /// A shell of radius `z` anywhere, including outside the game's support.
    FixedMagnitude { z: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: GameParams,
    pub noise: SimNoise,
    pub samples: u64,
    pub seed: u64,
    pub chunk_size: u64,
}

impl SimConfig {
    pub fn new(params: GameParams, noise: SimNoise, samples: u64, seed: u64) -> Self {
        SimConfig { params, noise, samples, seed, chunk_size: 65_536 }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.samples == 0 {
            return Err(config("simulation needs at least one sample"));
        }
        if self.chunk_size == 0 {
            return Err(config("chunk_size must be positive"));
        }
        match self.noise {
            SimNoise::Spec(spec) => spec.validate(&self.params, None)?,
            SimNoise::FixedMagnitude { z } => {
                if !(z >= 0.0) || !z.is_finite() {
                    return Err(config(format!("fixed magnitude must be non-negative, got {z}")));
                }
            }
        }
        Ok(())
    }
}

/// Empirical acceptance probability and conditional MSE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub pa_hat: f64,
    pub pa_stderr: f64,
    /// `None` when no draw was accepted.
    pub mse_hat: Option<f64>,
    pub mse_stderr: Option<f64>,
    pub accepted: u64,
    pub samples: u64,
    pub seed: u64,
}

/// SplitMix64 finalizer, used to decorrelate chunk seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for chunk `index` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ splitmix64(index))
}

fn fill_direction<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    loop {
        let mut norm_sq = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            norm_sq += *x * *x;
        }
        if norm_sq > 0.0 {
            let inv = 1.0 / norm_sq.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Writes a point uniform in the ball of radius `r` into `out`.
pub fn fill_uniform_ball<R: Rng + ?Sized>(out: &mut [f64], r: f64, rng: &mut R) {
    fill_direction(out, rng);
    let u: f64 = rng.random();
    let radius = r * u.powf(1.0 / out.len() as f64);
    out.iter_mut().for_each(|x| *x *= radius);
}

/// Writes a point uniform on the sphere of radius `z` into `out`.
pub fn fill_shell<R: Rng + ?Sized>(out: &mut [f64], z: f64, rng: &mut R) {
    fill_direction(out, rng);
    out.iter_mut().for_each(|x| *x *= z);
}

/// A point uniform in the `n`-ball of radius `r`.
pub fn sample_uniform_ball<R: Rng + ?Sized>(n: Dim, r: f64, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; n.get()];
    fill_uniform_ball(&mut v, r, rng);
    v
}

/// A point uniform on the `n`-sphere of radius `z`.
pub fn sample_shell<R: Rng + ?Sized>(n: Dim, z: f64, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; n.get()];
    fill_shell(&mut v, z, rng);
    v
}

/// Radius drawn from `spec`: the shell itself, or a Bernoulli(β₁) pick of one of two.
pub fn noise_radius<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> f64 {
    match *spec {
        NoiseSpec::SingleShell { z } => z,
        NoiseSpec::TwoShellMixture { z1, z2, beta1, .. } => {
            let u: f64 = rng.random();
            if u < beta1 {
                z1
            } else {
                z2
            }
        }
    }
}

/// A draw of adversarial noise from `spec`.
pub fn sample_noise<R: Rng + ?Sized>(n: Dim, spec: &NoiseSpec, rng: &mut R) -> Vec<f64> {
    let z = noise_radius(spec, rng);
    sample_shell(n, z, rng)
}

/// Sufficient statistics of one chunk (Welford form for the errors).
#[derive(Clone, Copy, Debug, Default)]
struct Stats {
    draws: u64,
    accepted: u64,
    mean: f64,
    m2: f64,
}

impl Stats {
    fn push(&mut self, err: f64) {
        self.accepted += 1;
        let d = err - self.mean;
        self.mean += d / self.accepted as f64;
        self.m2 += d * (err - self.mean);
    }

    fn merge(self, other: Stats) -> Stats {
        let n = self.accepted + other.accepted;
        if n == 0 {
            return Stats { draws: self.draws + other.draws, ..Stats::default() };
        }
        let (na, nb) = (self.accepted as f64, other.accepted as f64);
        let d = other.mean - self.mean;
        Stats {
            draws: self.draws + other.draws,
            accepted: n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }
}

fn run_chunk(cfg: &SimConfig, index: u64, draws: u64) -> Stats {
    let n = cfg.params.n.get();
    let delta = cfg.params.delta;
    let limit_sq = (cfg.params.eta * delta).powi(2);
    let mut rng = chunk_rng(cfg.seed, index);
    let mut h = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut stats = Stats { draws, ..Stats::default() };
    for _ in 0..draws {
        fill_uniform_ball(&mut h, delta, &mut rng);
        let z = match &cfg.noise {
            SimNoise::Spec(spec) => noise_radius(spec, &mut rng),
            SimNoise::FixedMagnitude { z } => *z,
        };
        fill_shell(&mut a, z, &mut rng);
        let mut dist_sq = 0.0;
        let mut err = 0.0;
        for (x, y) in h.iter().zip(&a) {
            dist_sq += (x - y) * (x - y);
            err += (x + y) * (x + y);
        }
        if dist_sq <= limit_sq {
            stats.push(0.25 * err);
        }
    }
    stats
}

/// Runs the simulation described by `cfg`.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let chunks = cfg.samples.div_ceil(cfg.chunk_size);
    let parts: Vec<Stats> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let start = i * cfg.chunk_size;
            let draws = cfg.chunk_size.min(cfg.samples - start);
            run_chunk(cfg, i, draws)
        })
        .collect();
    let total = parts.into_iter().fold(Stats::default(), Stats::merge);
    let samples = total.draws;
    let pa = total.accepted as f64 / samples as f64;
    let (mse_hat, mse_stderr) = match total.accepted {
        0 => (None, None),
        1 => (Some(total.mean), None),
        k => {
            let var = total.m2 / (k - 1) as f64;
            (Some(total.mean), Some((var / k as f64).sqrt()))
        }
    };
    Ok(SimResult {
        pa_hat: pa,
        pa_stderr: (pa * (1.0 - pa) / samples as f64).sqrt(),
        mse_hat,
        mse_stderr,
        accepted: total.accepted,
        samples,
        seed: cfg.seed,
    })
}

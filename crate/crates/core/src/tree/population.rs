use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{tree_fixed_point, PotentialModel, TreeModel};
use crate::dist::{Dist, JointDist};
use crate::error::{Error, Result};
use crate::halfplane::{cd_weight, neg_inv, HPoint, SpectralParam};
use crate::stream::{stream_id, tag, Stream};

/// Slots handed to one rayon task. Draws are addressed per slot, so this
/// only affects scheduling, never values.
const CHUNK: usize = 2048;

/// Generations between two moment checkpoints.
pub const MONITOR_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolInit {
    Point { re: f64, im: f64 },
    /// Start every slot at the free fixed point `z_λ`.
    FixedPoint,
}

impl Default for PoolInit {
    fn default() -> Self {
        PoolInit::Point { re: 0.0, im: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub pool_size: usize,
    pub generations: usize,
    pub init: PoolInit,
    /// Exponent `p` of the monitored moment `M_p`; `None` disables the trace.
    pub monitor_p: Option<f64>,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            pool_size: 100_000,
            generations: 300,
            init: PoolInit::default(),
            monitor_p: Some(1.5),
        }
    }
}

impl PopulationConfig {
    fn validate(&self) -> Result<()> {
        if self.pool_size < 10 {
            return Err(Error::invalid(format!("pool size must be at least 10, got {}", self.pool_size)));
        }
        if self.generations < 1 {
            return Err(Error::invalid("at least one generation is required"));
        }
        if let Some(p) = self.monitor_p {
            if !(p > 1.0) {
                return Err(Error::invalid(format!("moment exponent must exceed 1, got {p}")));
            }
        }
        Ok(())
    }
}

/// Empirical stand-in for the distribution of `G_λ(0,0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePool {
    pub samples: Vec<HPoint>,
    pub lam: SpectralParam,
    pub generation: usize,
    /// `(generation, M_p)` every [`MONITOR_WINDOW`] generations and at the end.
    pub trace: Vec<(usize, f64)>,
}

impl SamplePool {
    /// Relative change of `M_p` over the last window is below 1%.
    pub fn stabilized(&self) -> bool {
        match self.trace.as_slice() {
            [.., (_, a), (_, b)] => (b - a).abs() <= 0.01 * a.abs().max(f64::MIN_POSITIVE),
            _ => false,
        }
    }

    pub fn mean(&self) -> Complex64 {
        self.samples.iter().map(|z| z.z()).sum::<Complex64>() / self.samples.len() as f64
    }

    pub fn min_im(&self) -> f64 {
        self.samples.iter().map(|z| z.im()).fold(f64::INFINITY, f64::min)
    }
}

/// `M_p = mean of cd(z, z_ref)^p` over the samples.
pub fn moment_mp(samples: &[HPoint], p: f64, z_ref: HPoint) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|&z| cd_weight(z, z_ref).powf(p)).sum::<f64>() / samples.len() as f64
}

fn initial_point(init: PoolInit, k: usize, lam: SpectralParam) -> Result<HPoint> {
    match init {
        PoolInit::Point { re, im } => HPoint::new(re, im),
        PoolInit::FixedPoint => tree_fixed_point(k, lam),
    }
}

/// Resampling population for the free and i.i.d. models; two-periodic and
/// oscillating models are forwarded to their own samplers.
///
/// Each generation replaces every slot by `Ψ(z_{i₁},…,z_{i_k}, a·q, λ)` with
/// indices drawn uniformly from the previous pool and a fresh `q ~ ν`.
pub fn population_green(model: &TreeModel, lam: SpectralParam, cfg: &PopulationConfig, seed: u64) -> Result<SamplePool> {
    model.validate()?;
    cfg.validate()?;
    lam.require_strict()?;
    let law = match &model.potential {
        PotentialModel::None => None,
        PotentialModel::Iid { dist, a } => Some((dist, *a)),
        PotentialModel::TwoPeriodic { .. } => return two_periodic_population(model, lam, cfg, seed),
        PotentialModel::Oscillating(osc) => {
            let g = super::oscillating_green(osc, lam, cfg.generations, HPoint::new(0.0, 1.0)?)?;
            return Ok(SamplePool { samples: vec![g; cfg.pool_size], lam, generation: cfg.generations, trace: Vec::new() });
        }
    };
    let k = model.k;
    let p_size = cfg.pool_size;
    let z_ref = tree_fixed_point(k, lam)?;
    let mut pool = vec![initial_point(cfg.init, k, lam)?; p_size];
    let mut next = pool.clone();
    let mut trace = Vec::new();
    let words = (k + 1) as u64;
    let lv = lam.value();

    for g in 0..cfg.generations {
        let stream = stream_id(tag::TREE_POOL, g as u64);
        let old = &pool;
        next.par_chunks_mut(CHUNK).enumerate().try_for_each(|(c, chunk)| -> Result<()> {
            let mut s = Stream::at(seed, stream, (c * CHUNK) as u64, words);
            for out in chunk.iter_mut() {
                let mut sum = Complex64::new(0.0, 0.0);
                for _ in 0..k {
                    sum += old[s.index(p_size)].z();
                }
                let u = s.unit();
                let q = law.map_or(0.0, |(d, a)| a * d.sample(u));
                *out = neg_inv(sum + lv - q)?;
            }
            Ok(())
        })
        .map_err(|e| e.at_generation(g + 1))?;
        std::mem::swap(&mut pool, &mut next);
        if let Some(p) = cfg.monitor_p {
            if (g + 1) % MONITOR_WINDOW == 0 || g + 1 == cfg.generations {
                trace.push((g + 1, moment_mp(&pool, p, z_ref)));
            }
        }
    }
    Ok(SamplePool { samples: pool, lam, generation: cfg.generations, trace })
}

/// Sampler for the transversely two-periodic potential.
///
/// Along a sphere every vertex has one child carrying `q₁` and one carrying
/// `q₂`, so all `q₁`-vertices of a sphere root identical subtrees. With
/// `s_n = g₁(n) + g₂(n)` the recursion closes on one complex number:
/// `s_n = −1/(s_{n+1} + λ − a q₁(n)) − 1/(s_{n+1} + λ − a q₂(n))` and
/// `G(0,0) = −1/(s_1 + λ − a q₀)`. Each slot is an independent realization
/// of the potential, one fresh pair per generation; no resampling is needed.
pub fn two_periodic_population(
    model: &TreeModel,
    lam: SpectralParam,
    cfg: &PopulationConfig,
    seed: u64,
) -> Result<SamplePool> {
    model.validate()?;
    cfg.validate()?;
    lam.require_strict()?;
    let free_pair = JointDist { atoms: vec![[0.0, 0.0]], probs: vec![1.0] };
    let free_site = Dist::Atoms { values: vec![0.0], probs: vec![1.0] };
    let (joint, root, a) = match &model.potential {
        PotentialModel::TwoPeriodic { joint, root, a, .. } => (joint, root, *a),
        PotentialModel::None => (&free_pair, &free_site, 0.0),
        _ => return Err(Error::invalid("two-periodic sampler needs a two-periodic or free model")),
    };
    let z_ref = tree_fixed_point(2, lam)?;
    let init = initial_point(cfg.init, 2, lam)?;
    let lv = lam.value();
    let mut sums = vec![init.z() * 2.0; cfg.pool_size];
    let root_q: Vec<f64> = (0..cfg.pool_size)
        .map(|i| a * root.sample(Stream::at(seed, root_stream(i), 0, 1).unit()))
        .collect();
    let mut trace = Vec::new();
    let mut done = 0;
    while done < cfg.generations {
        let window = MONITOR_WINDOW.min(cfg.generations - done);
        sums.par_chunks_mut(CHUNK).enumerate().try_for_each(|(c, chunk)| -> Result<()> {
            for (j, s) in chunk.iter_mut().enumerate() {
                let slot = c * CHUNK + j;
                let mut draw = Stream::at(seed, stream_id(tag::TWO_PERIODIC, slot as u64), done as u64, 1);
                for g in 0..window {
                    let [q1, q2] = joint.sample(draw.unit());
                    *s = pair_step(*s, a * q1, a * q2, lv).map_err(|e| e.at_generation(done + g + 1))?;
                }
            }
            Ok(())
        })?;
        done += window;
        if let Some(p) = cfg.monitor_p {
            trace.push((done, moment_mp(&close_root(&sums, &root_q, lv)?, p, z_ref)));
        }
    }
    Ok(SamplePool { samples: close_root(&sums, &root_q, lv)?, lam, generation: cfg.generations, trace })
}

fn root_stream(slot: usize) -> u64 {
    stream_id(tag::TWO_PERIODIC, (1 << 55) | slot as u64)
}

/// `s ↦ −1/(s + λ − q₁) − 1/(s + λ − q₂)`.
#[inline]
pub(crate) fn pair_step(s: Complex64, q1: f64, q2: f64, lam: Complex64) -> Result<Complex64> {
    Ok(neg_inv(s + lam - q1)?.z() + neg_inv(s + lam - q2)?.z())
}

fn close_root(sums: &[Complex64], root_q: &[f64], lam: Complex64) -> Result<Vec<HPoint>> {
    sums.iter().zip(root_q).map(|(&s, &q)| neg_inv(s + lam - q)).collect()
}

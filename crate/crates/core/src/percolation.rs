//! Binary tree where each vertex independently loses one of its two forward
//! edges with probability `q_del` (either one with probability `q_del/2`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfplane::{cd_weight, neg_inv, HPoint, SpectralParam};
use crate::stream::{stream_id, tag, Stream};
use crate::tree::{moment_mp, mu3p, tree_fixed_point, PoolInit, PopulationConfig, SamplePool, MONITOR_WINDOW};

const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolationSpec {
    pub q_del: f64,
}

impl PercolationSpec {
    /// `q_del = 1` is allowed: every vertex keeps one edge and the tree is a
    /// half-line.
    pub fn new(q_del: f64) -> Result<Self> {
        let s = PercolationSpec { q_del };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.q_del) {
            Ok(())
        } else {
            Err(Error::invalid(format!("deletion probability must lie in [0,1], got {}", self.q_del)))
        }
    }

    /// Outcome for a uniform draw `u`: both edges with probability `1 − q`,
    /// otherwise left or right with `q/2` each.
    pub fn outcome(&self, u: f64) -> Outcome {
        if u < 1.0 - self.q_del {
            Outcome::Both
        } else if u < 1.0 - 0.5 * self.q_del {
            Outcome::OnlyLeft
        } else {
            Outcome::OnlyRight
        }
    }

    fn weights(&self) -> [(Outcome, f64); 3] {
        let q = self.q_del;
        [(Outcome::Both, 1.0 - q), (Outcome::OnlyLeft, 0.5 * q), (Outcome::OnlyRight, 0.5 * q)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Both,
    OnlyLeft,
    OnlyRight,
}

impl Outcome {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Green function at a vertex from those at its two children.
#[inline]
pub fn percolation_step(z1: HPoint, z2: HPoint, lam: SpectralParam, outcome: Outcome) -> Result<HPoint> {
    let lv = lam.value();
    match outcome {
        Outcome::Both => neg_inv(z1.z() + z2.z() + lv),
        Outcome::OnlyLeft => neg_inv(z1.z() + lv),
        Outcome::OnlyRight => neg_inv(z2.z() + lv),
    }
}

/// Resampling population with one outcome draw per new sample.
pub fn percolation_population(
    spec: PercolationSpec,
    lam: SpectralParam,
    cfg: &PopulationConfig,
    seed: u64,
) -> Result<SamplePool> {
    spec.validate()?;
    lam.require_strict()?;
    if cfg.pool_size < 10 || cfg.generations < 1 {
        return Err(Error::invalid("pool size must be ≥ 10 and generations ≥ 1"));
    }
    let z_ref = tree_fixed_point(2, lam)?;
    let start = match cfg.init {
        PoolInit::Point { re, im } => HPoint::new(re, im)?,
        PoolInit::FixedPoint => z_ref,
    };
    let p_size = cfg.pool_size;
    let mut pool = vec![start; p_size];
    let mut next = pool.clone();
    let mut trace = Vec::new();
    for g in 0..cfg.generations {
        let stream = stream_id(tag::PERCOLATION, g as u64);
        let old = &pool;
        next.par_chunks_mut(CHUNK).enumerate().try_for_each(|(c, chunk)| -> Result<()> {
            let mut s = Stream::at(seed, stream, (c * CHUNK) as u64, 3);
            for out in chunk.iter_mut() {
                let z1 = old[s.index(p_size)];
                let z2 = old[s.index(p_size)];
                *out = percolation_step(z1, z2, lam, spec.outcome(s.unit()))?;
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

/// Outcome counts `[both, left, right]` drawn in generation `generation`
/// (1-based) of a run with this seed and pool size.
pub fn outcome_counts(spec: PercolationSpec, pool_size: usize, generation: usize, seed: u64) -> [usize; 3] {
    let mut s = Stream::at(seed, stream_id(tag::PERCOLATION, generation as u64 - 1), 0, 3);
    let mut counts = [0; 3];
    for _ in 0..pool_size {
        s.next_u64();
        s.next_u64();
        counts[spec.outcome(s.unit()).index()] += 1;
    }
    counts
}

/// `[q·½(cd^p(−1/(z₁+λ)) + cd^p(−1/(z₂+λ))) + (1−q)·cd^p(−1/(z₁+z₂+λ))] / (½cd^p(z₁) + ½cd^p(z₂))`
/// with `cd` centred at the binary-tree fixed point.
pub fn mu2pq(z1: HPoint, z2: HPoint, lam: SpectralParam, p: f64, q_del: f64) -> Result<f64> {
    PercolationSpec::new(q_del)?;
    let zl = tree_fixed_point(2, lam)?;
    let cdp = |z: HPoint| cd_weight(z, zl).powf(p);
    let den = 0.5 * cdp(z1) + 0.5 * cdp(z2);
    if den == 0.0 {
        return Err(Error::Indeterminate("both arguments sit at the fixed point"));
    }
    let single = 0.5 * (cdp(percolation_step(z1, z2, lam, Outcome::OnlyLeft)?)
        + cdp(percolation_step(z1, z2, lam, Outcome::OnlyRight)?));
    let both = cdp(percolation_step(z1, z2, lam, Outcome::Both)?);
    Ok((q_del * single + (1.0 - q_del) * both) / den)
}

/// `μ₃,p,q = (1−q)² μ₃,p + q R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mu3pqParts {
    pub total: f64,
    /// `(1−q)² μ₃,p(z, 0, λ)`.
    pub smooth_part: f64,
    /// `q R`.
    pub remainder: f64,
}

const CYCLES: [[usize; 3]; 3] = [[0, 1, 2], [1, 2, 0], [2, 0, 1]];

/// Two-level percolation functional. For each cyclic relabelling the root's
/// children are `z_σ1` and `w`, where `w` is built from `(z_σ2, z_σ3)`; the
/// total sums `cd^p` over all nine outcome pairs weighted by probability.
/// The remainder is assembled separately from the terms carrying a factor
/// `q`, and the identity `total = smooth + remainder` is checked to 10⁻⁹.
pub fn mu3pq_decomposition(zs: [HPoint; 3], lam: SpectralParam, p: f64, q_del: f64) -> Result<Mu3pqParts> {
    let spec = PercolationSpec::new(q_del)?;
    let zl = tree_fixed_point(2, lam)?;
    let cdp = |z: HPoint| cd_weight(z, zl).powf(p);
    let norm: f64 = zs.iter().map(|&z| cdp(z)).sum();
    if norm == 0.0 {
        return Err(Error::Indeterminate("every argument sits at the fixed point"));
    }
    let q = q_del;
    let step = |a: HPoint, b: HPoint, o: Outcome| percolation_step(a, b, lam, o);

    let mut total = 0.0;
    let mut remainder = 0.0;
    for [a, b, c] in CYCLES {
        let (za, zb, zc) = (zs[a], zs[b], zs[c]);
        for (inner, pi) in spec.weights() {
            let w = step(zb, zc, inner)?;
            for (outer, po) in spec.weights() {
                if pi * po != 0.0 {
                    total += pi * po * cdp(step(za, w, outer)?);
                }
            }
        }

        let w_both = step(zb, zc, Outcome::Both)?;
        let w_left = step(zb, zc, Outcome::OnlyLeft)?;
        let w_right = step(zb, zc, Outcome::OnlyRight)?;
        // root keeps both, inner vertex loses one edge
        let mixed = cdp(step(za, w_left, Outcome::Both)?) + cdp(step(za, w_right, Outcome::Both)?);
        // root loses one edge: either z_σ1 alone or the inner vertex alone
        let lone_w = (1.0 - q) * cdp(step(za, w_both, Outcome::OnlyRight)?)
            + 0.5 * q * (cdp(step(za, w_left, Outcome::OnlyRight)?) + cdp(step(za, w_right, Outcome::OnlyRight)?));
        let lone = 0.5 * cdp(step(za, w_both, Outcome::OnlyLeft)?) + 0.5 * lone_w;
        remainder += q * (0.5 * (1.0 - q) * mixed + lone);
    }
    total /= norm;
    remainder /= norm;
    let smooth_part = (1.0 - q).powi(2) * mu3p(zs, [0.0, 0.0], lam, p)?.direct;
    if (total - smooth_part - remainder).abs() > 1e-9 * total.abs().max(1.0) {
        return Err(Error::NumericalDegeneracy(format!(
            "percolation decomposition mismatch: {total} vs {smooth_part} + {remainder}"
        )));
    }
    Ok(Mu3pqParts { total, smooth_part, remainder })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain1d::free_fixed_point;
    use num_complex::Complex64;
    use crate::tree::mu2p;

    fn hp(re: f64, im: f64) -> HPoint {
        HPoint::new(re, im).unwrap()
    }

    #[test]
    fn step_examples() {
        let l = SpectralParam::real(0.6).unwrap();
        let zl = tree_fixed_point(2, l).unwrap();
        assert!((percolation_step(zl, zl, l, Outcome::Both).unwrap().z() - zl.z()).norm() < 1e-15);
        let zp = free_fixed_point(l).unwrap();
        let out = percolation_step(zp, HPoint::I, l, Outcome::OnlyLeft).unwrap();
        assert!((out.z() - zp.z()).norm() < 1e-15);
        let l0 = SpectralParam::real(0.0).unwrap();
        assert_eq!(percolation_step(HPoint::I, HPoint::I, l0, Outcome::Both).unwrap().z(), Complex64::new(0.0, 0.5));
    }

    #[test]
    fn mu2pq_reductions() {
        let l = SpectralParam::real(0.3).unwrap();
        let (z1, z2) = (hp(0.2, 0.4), hp(-1.0, 2.0));
        let a = mu2pq(z1, z2, l, 1.5, 0.0).unwrap();
        let b = mu2p(z1, z2, 0.0, l, 1.5).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn mu2pq_at_i() {
        // cd(i) = cd(−1/i) = cd(i/2) = (1 − 1/√2)² when z_λ = i/√2
        let l0 = SpectralParam::real(0.0).unwrap();
        let v = mu2pq(HPoint::I, HPoint::I, l0, 2.0, 0.5).unwrap();
        let c = (1.0 - 0.5f64.sqrt()).powi(2);
        let by_hand = (0.5 * c * c + 0.5 * c * c) / (0.5 * c * c + 0.5 * c * c);
        assert!((v - by_hand).abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mu2pq_half_line_baseline() {
        let l = SpectralParam::real(0.5).unwrap();
        let zp = free_fixed_point(l).unwrap();
        let v = mu2pq(zp, zp, l, 2.0, 1.0).unwrap();
        // −1/(z₊ + λ) = z₊, so the quotient is 1 exactly
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn decomposition_reduces_at_zero() {
        let l = SpectralParam::real(0.3).unwrap();
        let zs = [hp(0.5, 0.1), hp(-0.2, 1.3), hp(2.0, 0.02)];
        let d = mu3pq_decomposition(zs, l, 1.5, 0.0).unwrap();
        assert_eq!(d.remainder, 0.0);
        assert!((d.total - mu3p(zs, [0.0, 0.0], l, 1.5).unwrap().direct).abs() < 1e-12);
        let d = mu3pq_decomposition(zs, l, 1.5, 0.1).unwrap();
        assert!((d.total - d.smooth_part - d.remainder).abs() < 1e-12);
    }

    #[test]
    fn full_deletion_is_a_half_line() {
        let lam = SpectralParam::new(0.5, 0.05).unwrap();
        let cfg = PopulationConfig { pool_size: 64, generations: 1500, init: PoolInit::default(), monitor_p: None };
        let pool = percolation_population(PercolationSpec::new(1.0).unwrap(), lam, &cfg, 2).unwrap();
        let zp = free_fixed_point(lam).unwrap();
        assert!(pool.samples.iter().all(|z| (z.z() - zp.z()).norm() < 1e-8));
    }

    #[test]
    fn outcome_counts_are_binomial() {
        let spec = PercolationSpec::new(0.3).unwrap();
        let n = 20_000;
        for g in 1..4 {
            let c = outcome_counts(spec, n, g, 11);
            assert_eq!(c.iter().sum::<usize>(), n);
            for (k, p) in [0.7, 0.15, 0.15].into_iter().enumerate() {
                let sd = (n as f64 * p * (1.0 - p)).sqrt();
                assert!((c[k] as f64 - n as f64 * p).abs() < 3.0 * sd, "{c:?}");
            }
        }
    }
}

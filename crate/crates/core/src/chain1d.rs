//! Green functions on the half-line ℕ₀.
//!
//! `G_λ(0,0) = Φ₀∘Φ₁∘⋯∘Φ_N(start)` with `Φ_n(z) = −1/(z + λ − q_n)`. The
//! composition is folded from the deep end, so the result forgets `start`
//! geometrically fast once `Im λ > 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfplane::{cd_weight, mobius_step, poincare_dist, upper_root, HPoint, SpectralParam};
use crate::stream::{stream_id, tag, Stream};

/// Shape of a centered unit-variance site variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteredShape {
    /// ±1.
    Bernoulli,
    /// Uniform on `[−√3, √3]`.
    Uniform,
}

impl CenteredShape {
    fn sample(self, u: f64) -> f64 {
        match self {
            CenteredShape::Bernoulli => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            CenteredShape::Uniform => 3f64.sqrt() * (2.0 * u - 1.0),
        }
    }

    fn bound(self) -> f64 {
        match self {
            CenteredShape::Bernoulli => 1.0,
            CenteredShape::Uniform => 3f64.sqrt(),
        }
    }
}

/// Independent centered sites with `E q_n² = σ²·decayⁿ`.
///
/// Site `n` of trial `t` is drawn from word `n` of the stream keyed by
/// `(seed, t)`, so lengthening a realization never changes its prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomCentered {
    pub shape: CenteredShape,
    pub sigma: f64,
    /// Variance ratio between consecutive sites; `1` means non-decaying.
    pub variance_decay: f64,
    pub seed: u64,
}

impl RandomCentered {
    pub fn variance(&self, n: usize) -> f64 {
        self.sigma * self.sigma * self.variance_decay.powi(n as i32)
    }

    pub fn sites(&self, len: usize, trial: u64) -> Vec<f64> {
        let mut s = Stream::at(self.seed, stream_id(tag::POTENTIAL_1D, trial), 0, 1);
        let ratio = self.variance_decay.sqrt();
        let mut amp = self.sigma;
        (0..len)
            .map(|_| {
                let q = amp * self.shape.sample(s.unit());
                amp *= ratio;
                q
            })
            .collect()
    }
}

/// A bounded potential on ℕ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSeq {
    Zero,
    /// Listed values; sites past the end are zero.
    Explicit { values: Vec<f64> },
    /// `q_n = amplitude·rateⁿ`, summable for `|rate| < 1`.
    L1Decay { amplitude: f64, rate: f64 },
    /// `q_n = q_inf + amplitude/(n+1)^power`, of bounded variation.
    Mourre { q_inf: f64, amplitude: f64, power: f64 },
    RandomCentered(RandomCentered),
}

impl PotentialSeq {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            PotentialSeq::Zero => true,
            PotentialSeq::Explicit { values } => values.iter().all(|v| v.is_finite()),
            PotentialSeq::L1Decay { amplitude, rate } => amplitude.is_finite() && rate.abs() <= 1.0,
            PotentialSeq::Mourre { q_inf, amplitude, power } => {
                q_inf.is_finite() && amplitude.is_finite() && *power >= 0.0
            }
            PotentialSeq::RandomCentered(r) => {
                r.sigma >= 0.0 && r.sigma.is_finite() && (0.0..=1.0).contains(&r.variance_decay)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("potential {self:?} is not bounded")))
        }
    }

    /// Value at site `n` for deterministic kinds; random kinds use trial 0.
    pub fn value(&self, n: usize) -> f64 {
        match self {
            PotentialSeq::Zero => 0.0,
            PotentialSeq::Explicit { values } => values.get(n).copied().unwrap_or(0.0),
            PotentialSeq::L1Decay { amplitude, rate } => amplitude * rate.powi(n as i32),
            PotentialSeq::Mourre { q_inf, amplitude, power } => {
                q_inf + amplitude / ((n + 1) as f64).powf(*power)
            }
            PotentialSeq::RandomCentered(r) => r.sites(n + 1, 0)[n],
        }
    }

    /// Sites `q_0..q_{len−1}` of realization `trial`.
    pub fn sites(&self, len: usize, trial: u64) -> Vec<f64> {
        match self {
            PotentialSeq::RandomCentered(r) => r.sites(len, trial),
            other => (0..len).map(|n| other.value(n)).collect(),
        }
    }

    /// Uniform bound K on |q_n|.
    pub fn bound(&self) -> f64 {
        match self {
            PotentialSeq::Zero => 0.0,
            PotentialSeq::Explicit { values } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            PotentialSeq::L1Decay { amplitude, .. } => amplitude.abs(),
            PotentialSeq::Mourre { q_inf, amplitude, .. } => q_inf.abs() + amplitude.abs(),
            PotentialSeq::RandomCentered(r) => r.sigma * r.shape.bound(),
        }
    }
}

/// Fixed points `z_n(λ)` of a certificate, indexed from `first`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSequence {
    pub first: usize,
    pub points: Vec<HPoint>,
}

impl CertificateSequence {
    pub fn constant(z: HPoint, first: usize, len: usize) -> Self {
        CertificateSequence { first, points: vec![z; len] }
    }

    pub fn get(&self, n: usize) -> Option<HPoint> {
        n.checked_sub(self.first).and_then(|i| self.points.get(i).copied())
    }
}

/// ℍ-root of `z = −1/(z + λ − q)`.
pub fn site_fixed_point(lam: SpectralParam, q: f64) -> Result<HPoint> {
    let s = lam.value() - q;
    upper_root(1.0, s, 1.0, lam.value(), 2.0)
}

/// `z₊(λ) = −λ/2 + i√(1 − λ²/4)`, the free half-line Green value.
pub fn free_fixed_point(lam: SpectralParam) -> Result<HPoint> {
    site_fixed_point(lam, 0.0)
}

/// Mixing-scale depth `⌈8/Im λ⌉`, capped at 10⁶.
pub fn default_depth(lam: SpectralParam) -> usize {
    if lam.im() <= 0.0 {
        return 1_000_000;
    }
    ((8.0 / lam.im()).ceil() as usize).clamp(1, 1_000_000)
}

/// Fold `Φ₀∘⋯∘Φ_{len−1}(start)` over explicit sites.
pub fn green_1d_sites(sites: &[f64], lam: SpectralParam, start: HPoint) -> Result<HPoint> {
    sites.iter().rev().try_fold(start, |z, &q| mobius_step(z, q, lam))
}

/// `Φ₀∘Φ₁∘⋯∘Φ_depth(start) ≈ G_λ(0,0)`.
pub fn green_1d(pot: &PotentialSeq, lam: SpectralParam, depth: usize, start: HPoint) -> Result<HPoint> {
    lam.require_strict()?;
    if depth == 0 {
        return Err(Error::invalid("green_1d needs depth ≥ 1"));
    }
    green_1d_sites(&pot.sites(depth + 1, 0), lam, start)
}

/// Iterates `w_n = Φ₀∘⋯∘Φ_n(start)` for `n = 0..n_max`.
pub fn composition_sequence(
    pot: &PotentialSeq,
    lam: SpectralParam,
    n_max: usize,
    start: HPoint,
) -> Result<Vec<HPoint>> {
    let sites = pot.sites(n_max, 0);
    (1..=n_max).map(|n| green_1d_sites(&sites[..n], lam, start)).collect()
}

/// Smoothed root density `(λ, Im G_{λ+iε}(0,0)/π)` on `grid` points of `[c, d]`.
pub fn density_profile(
    pot: &PotentialSeq,
    interval: (f64, f64),
    eps: f64,
    grid: usize,
    depth: Option<usize>,
) -> Result<Vec<(f64, f64)>> {
    let (c, d) = interval;
    if !(c < d) || !(eps > 0.0) || grid == 0 {
        return Err(Error::invalid("density_profile needs c < d, eps > 0, grid ≥ 1"));
    }
    let probe = SpectralParam::new(c, eps)?;
    let depth = depth.unwrap_or_else(|| default_depth(probe));
    let sites = pot.sites(depth + 1, 0);
    (0..grid)
        .map(|j| {
            let x = if grid == 1 { 0.5 * (c + d) } else { c + (d - c) * j as f64 / (grid - 1) as f64 };
            let g = green_1d_sites(&sites, SpectralParam::new(x, eps)?, HPoint::I)?;
            Ok((x, g.im() / std::f64::consts::PI))
        })
        .collect()
}

/// Partial sums `Σ_{n=1..N} d(Φ_{n+1}(z_{n+1}), z_n)` for `N = 1..terms`, and `d(z₁, i)`.
pub fn certificate_sum(
    pot: &PotentialSeq,
    lam: SpectralParam,
    zseq: &CertificateSequence,
    terms: usize,
) -> Result<(Vec<f64>, f64)> {
    if terms == 0 {
        return Err(Error::invalid("certificate_sum needs terms ≥ 1"));
    }
    let at = |n: usize| {
        zseq.get(n)
            .ok_or_else(|| Error::invalid(format!("certificate sequence has no entry {n}")))
    };
    let mut sums = Vec::with_capacity(terms);
    let mut acc = 0.0;
    for n in 1..=terms {
        let image = mobius_step(at(n + 1)?, pot.value(n + 1), lam)?;
        acc += poincare_dist(image, at(n)?);
        sums.push(acc);
    }
    Ok((sums, poincare_dist(at(1)?, HPoint::I)))
}

/// Per-site fixed points `z_n = −(λ−q_n)/2 + i√(1 − (λ−q_n)²/4)` for `n ∈ range`.
pub fn mourre_fixed_points(
    pot: &PotentialSeq,
    lam: SpectralParam,
    range: std::ops::Range<usize>,
) -> Result<CertificateSequence> {
    let first = range.start;
    let points = range
        .map(|n| site_fixed_point(lam, pot.value(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificateSequence { first, points })
}

/// Rate of expansion `(cd²(Φ(z)) + 1)/(cd²(z) + 1)`, cd taken about `z_ref`.
pub fn expansion_rate(z: HPoint, q: f64, lam: SpectralParam, z_ref: HPoint) -> Result<f64> {
    let before = cd_weight(z, z_ref);
    let after = cd_weight(mobius_step(z, q, lam)?, z_ref);
    Ok((after * after + 1.0) / (before * before + 1.0))
}

/// Coefficients of the quadratic envelope `μ(z,q) ≤ 1 + A₁(z)q + A₂(z)q²`
/// for real λ in the band and `|q| ≤ q_bound`.
///
/// With `a = cd(z)`, `b = −2 Re(z − z₊)/Im z`, `c = 1/Im z` one has
/// `cd(Φ(z)) = a + bq + cq²` exactly, so μ is a quartic in q whose cubic and
/// quartic terms are folded into the quadratic one using `|q| ≤ q_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

pub fn expansion_envelope(z: HPoint, lam: f64, q_bound: f64) -> Result<Envelope> {
    let zp = free_fixed_point(SpectralParam::real(lam)?)?;
    let y = z.im();
    let a = cd_weight(z, zp);
    let b = -2.0 * (z.re() - zp.re()) / y;
    let c = 1.0 / y;
    let den = a * a + 1.0;
    Ok(Envelope {
        a0: 1.0,
        a1: 2.0 * a * b / den,
        a2: (b * b + 2.0 * a * c + 2.0 * b.abs() * c * q_bound + c * c * q_bound * q_bound) / den,
    })
}

/// Empirical `C₀ = max (μ(z,q) − 1 − A₁(z)q)/q²` over a deterministic grid of
/// z around `z₊(λ)` and `0 < |q| ≤ q_bound`.
pub fn calibrate_c0(lam: f64, q_bound: f64) -> Result<f64> {
    let lamp = SpectralParam::real(lam)?;
    let zp = free_fixed_point(lamp)?;
    if !(q_bound > 0.0) {
        return Ok(0.0);
    }
    let qs: Vec<f64> = (1..=10)
        .flat_map(|j| {
            let q = q_bound * j as f64 / 10.0;
            [q, -q]
        })
        .collect();
    let mut best = 0.0f64;
    for iy in 0..81 {
        let y = 10f64.powf(-4.0 + 8.0 * iy as f64 / 80.0);
        for ix in 0..81 {
            let x = zp.re() + (8.0 * (2.0 * ix as f64 / 80.0 - 1.0)).sinh() / 10.0;
            let z = HPoint::new(x, y)?;
            let env = expansion_envelope(z, lam, q_bound)?;
            for &q in &qs {
                let mu = expansion_rate(z, q, lamp, zp)?;
                best = best.max((mu - 1.0 - env.a1 * q) / (q * q));
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2MomentRow {
    pub eps: f64,
    pub depth: usize,
    /// Monte Carlo mean of `cd²(G_{λ+iε}(0,0))`, cd about `z₊(λ)`.
    pub mean_cd2: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2MomentReport {
    pub c0: f64,
    pub variance_sum: f64,
    /// `exp(C₀ Σ E q_n²)`, an upper bound for `E cd² + 1`.
    pub bound: f64,
    pub rows: Vec<L2MomentRow>,
}

/// Monte Carlo estimate of `E[cd²(G_{λ+iε}(0,0))]` along an ε ladder.
///
/// Trial `t` always sees the same realization (common random numbers across
/// the ladder). Output is independent of the rayon thread count.
pub fn l2_moment_experiment(
    pot: &RandomCentered,
    lam: f64,
    eps_ladder: &[f64],
    depth: Option<usize>,
    trials: usize,
) -> Result<L2MomentReport> {
    if trials == 0 || eps_ladder.is_empty() {
        return Err(Error::invalid("l2_moment_experiment needs trials ≥ 1 and a nonempty ladder"));
    }
    let pot_seq = PotentialSeq::RandomCentered(pot.clone());
    pot_seq.validate()?;
    let zp = free_fixed_point(SpectralParam::real(lam)?)?;
    let params: Vec<(SpectralParam, usize)> = eps_ladder
        .iter()
        .map(|&eps| {
            let l = SpectralParam::new(lam, eps)?;
            Ok((l, depth.unwrap_or_else(|| default_depth(l))))
        })
        .collect::<Result<_>>()?;
    let max_depth = params.iter().map(|p| p.1).max().unwrap_or(1);

    let per_trial: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sites = pot.sites(max_depth + 1, t);
            params
                .iter()
                .map(|&(l, d)| {
                    let g = green_1d_sites(&sites[..=d], l, HPoint::I)?;
                    let cd = cd_weight(g, zp);
                    Ok(cd * cd)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let n = trials as f64;
    let rows = params
        .iter()
        .enumerate()
        .map(|(j, &(l, d))| {
            let mean = per_trial.iter().map(|v| v[j]).sum::<f64>() / n;
            let var = if trials > 1 {
                per_trial.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            L2MomentRow { eps: l.im(), depth: d, mean_cd2: mean, stderr: (var / n).sqrt() }
        })
        .collect();

    let variance_sum: f64 = (0..=max_depth).map(|k| pot.variance(k)).sum();
    let c0 = calibrate_c0(lam, pot_seq.bound())?;
    Ok(L2MomentReport { c0, variance_sum, bound: (c0 * variance_sum).exp(), rows })
}

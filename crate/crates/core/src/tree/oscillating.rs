use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::population::pair_step;
use crate::error::{Error, Result};
use crate::halfplane::{neg_inv, HPoint, SpectralParam};

/// Sibling-alternating potential on the binary tree: in sphere `n ≥ 1` the
/// even-indexed child of every vertex carries `δ₀ + δ₁(n)` and the odd one
/// `−δ₀ + δ₂(n)`. `delta1[n−1]` holds `δ₁(n)`; missing entries are zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillatingPotential {
    pub delta0: f64,
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    /// Potential at the root.
    pub root: f64,
}

impl OscillatingPotential {
    pub fn constant(delta0: f64) -> Self {
        OscillatingPotential { delta0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let all = std::iter::once(&self.delta0).chain(&self.delta1).chain(&self.delta2).chain([&self.root]);
        if all.into_iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("oscillating potential must be finite"))
        }
    }

    /// `(q₁(n), q₂(n))` for `n ≥ 1`.
    pub fn pair(&self, n: usize) -> [f64; 2] {
        let at = |v: &[f64]| v.get(n - 1).copied().unwrap_or(0.0);
        [self.delta0 + at(&self.delta1), -self.delta0 + at(&self.delta2)]
    }
}

/// `G_λ(0,0)` for per-sphere pairs `pairs[n−1] = (q₁(n), q₂(n))`, seeded with
/// `start` at every vertex of sphere `pairs.len() + 1`.
pub fn two_periodic_green(pairs: &[[f64; 2]], q_root: f64, lam: SpectralParam, start: HPoint) -> Result<HPoint> {
    lam.require_strict()?;
    let lv = lam.value();
    let mut s = start.z() * 2.0;
    for [q1, q2] in pairs.iter().rev() {
        s = pair_step(s, *q1, *q2, lv)?;
    }
    neg_inv(s + lv - q_root)
}

/// `G_λ(0,0)` for the oscillating potential truncated below sphere `depth`.
pub fn oscillating_green(osc: &OscillatingPotential, lam: SpectralParam, depth: usize, start: HPoint) -> Result<HPoint> {
    osc.validate()?;
    let pairs: Vec<[f64; 2]> = (1..=depth).map(|n| osc.pair(n)).collect();
    two_periodic_green(&pairs, osc.root, lam, start)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcClass {
    AcInterior,
    NotAc,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicReport {
    pub class: AcClass,
    pub discriminant: f64,
    /// Real roots first, in increasing order; then the conjugate pair,
    /// upper half-plane member first.
    pub roots: [Complex64; 3],
}

/// Discriminant band treated as the spectral edge.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Classifies `λ` by the roots of `z³ + 2λz² + (2 + λ² − δ²)z + 2λ`: one real
/// root and a conjugate pair mean `λ` lies inside the ac spectrum.
///
/// The cubic is the fixed-point equation of the sibling sum
/// `s = −1/(s + λ − δ) − 1/(s + λ + δ)`.
pub fn oscillating_ac_test(lam: f64, delta: f64) -> CubicReport {
    let (b, c, d) = (2.0 * lam, 2.0 + lam * lam - delta * delta, 2.0 * lam);
    let disc = 18.0 * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c - 4.0 * c.powi(3) - 27.0 * d * d;
    let class = if disc.abs() <= BOUNDARY_BAND {
        AcClass::Boundary
    } else if disc < 0.0 {
        AcClass::AcInterior
    } else {
        AcClass::NotAc
    };
    CubicReport { class, discriminant: disc, roots: cubic_roots(b, c, d) }
}

/// Roots of the monic cubic `z³ + bz² + cz + d` by Cardano's formula, or the
/// trigonometric form when all three are real.
fn cubic_roots(b: f64, c: f64, d: f64) -> [Complex64; 3] {
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;
    let big_d = q * q / 4.0 + p.powi(3) / 27.0;
    if big_d > 0.0 || p >= 0.0 {
        let sq = big_d.max(0.0).sqrt();
        // pick the larger-magnitude cube root argument to avoid cancellation
        let u = if q > 0.0 { (-q / 2.0 - sq).cbrt() } else { (-q / 2.0 + sq).cbrt() };
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        let r = t - shift;
        // deflate: z³ + bz² + cz + d = (z − r)(z² + (b + r)z + c + r(b + r))
        let (qb, qc) = (b + r, c + r * (b + r));
        let disc = qb * qb - 4.0 * qc;
        if disc < 0.0 {
            let im = (-disc).sqrt() / 2.0;
            [
                Complex64::new(r, 0.0),
                Complex64::new(-qb / 2.0, im),
                Complex64::new(-qb / 2.0, -im),
            ]
        } else {
            let sd = disc.sqrt();
            let mut rs = [r, (-qb - sd) / 2.0, (-qb + sd) / 2.0];
            rs.sort_by(f64::total_cmp);
            rs.map(|x| Complex64::new(x, 0.0))
        }
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut rs = [0, 1, 2].map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift);
        rs.sort_by(f64::total_cmp);
        rs.map(|x| Complex64::new(x, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub delta: f64,
    /// `δ < 1/2`.
    pub admissible: bool,
}

/// `δ = 2c₁₂/(c₁₁ + c₂₂)`.
pub fn correlation_delta(c11: f64, c22: f64, c12: f64) -> Result<Correlation> {
    let c = c11 + c22;
    if !(c > 0.0) {
        return Err(Error::ZeroVariance(c));
    }
    let delta = 2.0 * c12 / c;
    Ok(Correlation { delta, admissible: delta < 0.5 })
}

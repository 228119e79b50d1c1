//! Loop-decorated binary trees.
//!
//! On the regular loop tree every sphere `S_n` (`N = 2ⁿ` vertices) carries the
//! cycle `j ~ j±1 mod N` with weight `γ`. The truncated Green blocks on a
//! sphere are circulant, so each is described by its symbol
//! `f_k = Σ_ℓ z_ℓ e^{2πiℓk/N}` and the Schur step acts channel by channel:
//!
//! `f⁽ⁿ⁾_k = −1/(2cos²(πk/2N) f⁽ⁿ⁺¹⁾_k + 2sin²(πk/2N) f⁽ⁿ⁺¹⁾_{k+N} + 2γcos(2πk/N) + λ)`.
//!
//! Channel `k` of level `n` sits at angle `θ = 2πk/N`, and reads the finer
//! level at `θ/2` and `θ/2 + π`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::halfplane::{neg_inv, upper_root, HPoint, SpectralParam};
use crate::siegelgraph::RootedGraph;

/// Symbol of a circulant block on sphere `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpectrum {
    pub level: usize,
    pub f: Vec<Complex64>,
}

impl CirculantSpectrum {
    pub fn constant(level: usize, c: HPoint) -> Self {
        CirculantSpectrum { level, f: vec![c.z(); 1 << level] }
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// `θ_k = 2πk/N`.
    pub fn theta(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.f.len() as f64
    }

    /// Largest `|f_{N/2−k} − f_{N/2+k}|`; zero for symmetric blocks.
    pub fn asymmetry(&self) -> f64 {
        let n = self.f.len();
        if n < 2 {
            return 0.0;
        }
        let h = n / 2;
        (0..=h).map(|k| (self.f[h - k] - self.f[(h + k) % n]).norm()).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f.len() != 1 << self.level {
            return Err(Error::invalid(format!(
                "level {} needs {} channels, got {}",
                self.level,
                1usize << self.level,
                self.f.len()
            )));
        }
        for z in &self.f {
            HPoint::from_complex(*z)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopParams {
    pub gamma: f64,
}

impl LoopParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_finite() && self.gamma >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("loop weight must be finite and nonnegative, got {}", self.gamma)))
        }
    }
}

/// `f_j = Σ_ℓ z_ℓ e^{2πiℓj/N}` for the circulant with first row `first_row`.
pub fn fft_symbol(first_row: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = first_row.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut buf = first_row.to_vec();
    // rustfft's inverse is the unnormalized e^{+2πi…} sum
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Ok(buf)
}

/// First row back from the symbol.
pub fn inverse_fft_symbol(f: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = f.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut buf = f.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    Ok(buf)
}

/// One Schur step from sphere `n+1` to sphere `n`, in symbol form.
pub fn loop_recursion_step(f_next: &CirculantSpectrum, gamma: f64, lam: SpectralParam) -> Result<CirculantSpectrum> {
    lam.require_strict()?;
    if f_next.level == 0 {
        return Err(Error::invalid("the root sphere has no level above it to fold into"));
    }
    if f_next.f.len() != 1 << f_next.level {
        return Err(Error::invalid("channel count does not match the level"));
    }
    let level = f_next.level - 1;
    let n = 1usize << level;
    let lv = lam.value();
    let f = (0..n)
        .map(|k| {
            let half = PI * k as f64 / (2 * n) as f64;
            let (s, c) = half.sin_cos();
            let loops = 2.0 * gamma * (2.0 * PI * k as f64 / n as f64).cos();
            let m = 2.0 * c * c * f_next.f[k] + 2.0 * s * s * f_next.f[k + n] + loops + lv;
            neg_inv(m).map(|h| h.z())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CirculantSpectrum { level, f })
}

/// Deepest level for which full spectra are materialized (2²⁴ channels).
pub const MAX_SPECTRUM_LEVEL: usize = 24;

/// Every level from `levels` (the constant `seed`) down to the root.
/// Index `n` of the result holds level `n`.
pub fn loop_spectra(gamma: f64, lam: SpectralParam, levels: usize, seed: HPoint) -> Result<Vec<CirculantSpectrum>> {
    LoopParams { gamma }.validate()?;
    lam.require_strict()?;
    if levels < 1 {
        return Err(Error::invalid("at least one level is required"));
    }
    if levels > MAX_SPECTRUM_LEVEL {
        return Err(Error::CapExceeded(format!("level {levels} exceeds {MAX_SPECTRUM_LEVEL} for full spectra")));
    }
    let mut out = vec![CirculantSpectrum::constant(levels, seed)];
    for _ in 0..levels {
        let next = loop_recursion_step(out.last().expect("nonempty"), gamma, lam)?;
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

/// `G_λ(0,0)` of the regular loop tree, seeded with `i` on every channel of
/// level `levels`.
///
/// Channel 0 only reads channel 0 of the level above (its `sin²` weight is
/// exactly zero), so the fold runs along that chain and is bit-identical to
/// taking `f⁽⁰⁾₀` from [`loop_spectra`], at any depth.
pub fn loop_green_root(gamma: f64, lam: SpectralParam, levels: usize) -> Result<HPoint> {
    loop_green_root_from(gamma, lam, levels, HPoint::I)
}

/// [`loop_green_root`] with an arbitrary constant seed.
pub fn loop_green_root_from(gamma: f64, lam: SpectralParam, levels: usize, seed: HPoint) -> Result<HPoint> {
    LoopParams { gamma }.validate()?;
    lam.require_strict()?;
    if levels < 1 {
        return Err(Error::invalid("at least one level is required"));
    }
    // same association order as the full fold at k = 0
    let loops = 2.0 * gamma;
    let lv = lam.value();
    let mut w = seed;
    for _ in 0..levels {
        w = neg_inv(2.0 * w.z() + loops + lv)?;
    }
    Ok(w)
}

/// `θ = 0` channel: the ℍ-fixed point of `w ↦ −1/(2w + 2γ + λ)`,
/// `−(2γ+λ)/4 + (i/4)√(8 − (2γ+λ)²)`.
pub fn theta_zero_fixed_point(gamma: f64, lam: SpectralParam) -> Result<HPoint> {
    LoopParams { gamma }.validate()?;
    let b = lam.value() + 2.0 * gamma;
    let edge = 2.0 * SQRT_2;
    if lam.is_real() && b.re.abs() >= edge {
        return Err(Error::OutOfBand { lambda: lam.value(), edge });
    }
    upper_root(2.0, b, 1.0, lam.value(), edge)
}

/// `⟨φ_n, Δ_γ φ_n⟩` for `φ_n = 2^{−n/2}` on `S_n`, evaluated on the explicit
/// regular loop tree.
pub fn variational_energy_check(gamma: f64, n: usize) -> Result<f64> {
    LoopParams { gamma }.validate()?;
    if n < 1 {
        return Err(Error::invalid("sphere level must be at least 1"));
    }
    let g = RootedGraph::regular_loop_tree(gamma, n);
    let first = (1usize << n) - 1;
    let sphere = first..first + (1 << n);
    let mut e = 0.0;
    for v in sphere.clone() {
        for &(w, wt) in g.neighbors(v) {
            if sphere.contains(&w) {
                e += wt;
            }
        }
    }
    // φ_n(v)φ_n(w) = 2⁻ⁿ on every pair
    Ok(e / (1u64 << n) as f64)
}

/// `[−2√2+γ, 2√2+γ]` and `[−2√2, 2√2]`.
pub fn meanfield_spectrum(gamma: f64) -> Result<[(f64, f64); 2]> {
    LoopParams { gamma }.validate()?;
    let r = 2.0 * SQRT_2;
    Ok([(-r + gamma, r + gamma), (-r, r)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanfieldCheck {
    pub vertices: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Largest distance from an eigenvalue to the interval union.
    pub max_excess: f64,
    /// `|max eigenvalue − (2√2 + γ)|`.
    pub top_gap: f64,
}

/// Dense eigenvalues of the mean-field adjacency truncated at sphere `depth`,
/// measured against [`meanfield_spectrum`].
pub fn meanfield_eigen_check(gamma: f64, depth: usize, diagonal: bool) -> Result<MeanfieldCheck> {
    let bands = meanfield_spectrum(gamma)?;
    let g = RootedGraph::meanfield_loop_tree_with(gamma, depth, diagonal);
    let n = g.n();
    if n > 4096 {
        return Err(Error::CapExceeded(format!("{n} vertices exceeds the dense limit of 4096")));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        for &(w, wt) in g.neighbors(v) {
            a[(v, w)] = wt;
        }
    }
    let eig = SymmetricEigen::new(a).eigenvalues;
    let dist = |x: f64| {
        bands.iter().map(|&(lo, hi)| if x < lo { lo - x } else if x > hi { x - hi } else { 0.0 }).fold(f64::INFINITY, f64::min)
    };
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MeanfieldCheck {
        vertices: n,
        min_eigenvalue: min,
        max_eigenvalue: max,
        max_excess: eig.iter().map(|&x| dist(x)).fold(0.0, f64::max),
        top_gap: (max - bands[0].1).abs(),
    })
}

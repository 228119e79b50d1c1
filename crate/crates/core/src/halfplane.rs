//! Geometry of the open upper half-plane ℍ.
//!
//! Points of ℍ carry truncated Green values. The maps `z ↦ −1/(z + λ − q)`
//! are hyperbolic isometries for real λ and strict contractions of the
//! Poincaré metric once `Im λ > 0`; everything in this crate leans on that.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest imaginary part accepted for a point of ℍ.
pub const IM_FLOOR: f64 = 1e-300;

/// A point of the open upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint(Complex64);

impl HPoint {
    pub const I: HPoint = HPoint(Complex64::new(0.0, 1.0));

    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() || z.im <= 0.0 {
            return Err(Error::NotInHalfPlane { re: z.re, im: z.im });
        }
        if z.im <= IM_FLOOR {
            return Err(Error::BoundaryUnderflow {
                im: z.im,
                generation: None,
            });
        }
        Ok(HPoint(z))
    }

    #[inline]
    pub fn re(&self) -> f64 {
        self.0.re
    }

    #[inline]
    pub fn im(&self) -> f64 {
        self.0.im
    }

    #[inline]
    pub fn z(&self) -> Complex64 {
        self.0
    }
}

impl From<HPoint> for Complex64 {
    fn from(p: HPoint) -> Self {
        p.0
    }
}

/// Spectral parameter λ with `Im λ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParam(Complex64);

impl SpectralParam {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn real(re: f64) -> Result<Self> {
        Self::new(re, 0.0)
    }

    pub fn from_complex(lam: Complex64) -> Result<Self> {
        if !lam.re.is_finite() || !lam.im.is_finite() || lam.im < 0.0 {
            return Err(Error::invalid(format!(
                "spectral parameter {lam} must be finite with Im λ ≥ 0"
            )));
        }
        Ok(SpectralParam(lam))
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        self.0
    }

    #[inline]
    pub fn re(&self) -> f64 {
        self.0.re
    }

    #[inline]
    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn is_real(&self) -> bool {
        self.0.im == 0.0
    }

    /// Errors unless `Im λ > 0`.
    pub fn require_strict(&self) -> Result<()> {
        if self.0.im > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "operation requires Im λ > 0, got λ = {}",
                self.0
            )))
        }
    }

    /// `λ + iε`.
    pub fn shifted(&self, eps: f64) -> Result<Self> {
        Self::from_complex(self.0 + Complex64::new(0.0, eps))
    }
}

/// `−1/ζ` for `Im ζ > 0`, with the imaginary part formed as `Im ζ/|ζ|²` so it
/// keeps its sign exactly.
#[inline]
pub(crate) fn neg_inv(zeta: Complex64) -> Result<HPoint> {
    let n = zeta.norm_sqr();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateDenominator);
    }
    HPoint::from_complex(Complex64::new(-zeta.re / n, zeta.im / n))
}

/// Root of `a z² + b z + c = 0` lying in ℍ.
///
/// When both roots are real (band edge or outside the band for real
/// coefficients) this reports `OutOfBand` with the supplied `edge` so callers
/// can name their band.
pub(crate) fn upper_root(a: f64, b: Complex64, c: f64, lam: Complex64, edge: f64) -> Result<HPoint> {
    let disc = (b * b - 4.0 * a * c).sqrt();
    // Larger-magnitude root first, the other via the product c/a.
    let s = if (b.conj() * disc).re >= 0.0 { -b - disc } else { -b + disc };
    if s.norm_sqr() == 0.0 {
        return Err(Error::OutOfBand { lambda: lam, edge });
    }
    let r1 = s / (2.0 * a);
    let r2 = (2.0 * c) / s;
    let best = if r1.im >= r2.im { r1 } else { r2 };
    if best.im <= 0.0 || best.im <= 1e-15 * best.norm().max(1.0) && lam.im == 0.0 {
        return Err(Error::OutOfBand { lambda: lam, edge });
    }
    HPoint::from_complex(best)
}

/// Poincaré distance `cosh⁻¹(1 + |z₁−z₂|²/(2 Im z₁ Im z₂))`, evaluated as
/// `ln(1 + t + √(t² + 2t))` to stay accurate near the diagonal.
pub fn poincare_dist(z1: HPoint, z2: HPoint) -> f64 {
    let t = (z1.z() - z2.z()).norm_sqr() / (2.0 * z1.im() * z2.im());
    (t + (t * (t + 2.0)).sqrt()).ln_1p()
}

/// One Möbius step `z ↦ −1/(z + λ − q)`.
#[inline]
pub fn mobius_step(z: HPoint, q: f64, lam: SpectralParam) -> Result<HPoint> {
    neg_inv(z.z() + lam.value() - q)
}

/// Contraction constant `C/(C + Im λ)` valid on `{|z| < C}`.
pub fn contraction_factor(c: f64, im_lambda: f64) -> Result<f64> {
    if !(c > 0.0) || !(im_lambda > 0.0) {
        return Err(Error::invalid(format!(
            "contraction factor needs C > 0 and Im λ > 0 (got C = {c}, Im λ = {im_lambda})"
        )));
    }
    Ok(c / (c + im_lambda))
}

/// `d(Φ z₁, Φ z₂) / d(z₁, z₂)` for a single Möbius step.
pub fn contraction_ratio(q: f64, lam: SpectralParam, z1: HPoint, z2: HPoint) -> Result<f64> {
    let d = poincare_dist(z1, z2);
    if d == 0.0 {
        return Err(Error::invalid("contraction ratio of identical points"));
    }
    let w1 = mobius_step(z1, q, lam)?;
    let w2 = mobius_step(z2, q, lam)?;
    Ok(poincare_dist(w1, w2) / d)
}

/// Weight `|z − z_ref|² / Im z`.
#[inline]
pub fn cd_weight(z: HPoint, z_ref: HPoint) -> f64 {
    (z.z() - z_ref.z()).norm_sqr() / z.im()
}

/// A hyperbolic disk in ℍ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HDisk {
    pub center: HPoint,
    pub radius: f64,
}

impl HDisk {
    pub fn contains(&self, z: HPoint, slack: f64) -> bool {
        poincare_dist(self.center, z) <= self.radius + slack
    }
}

/// Sampled enclosure of the two-step image `Φ_{n−1}∘Φ_n(ℍ)`.
///
/// Diagnostic only: z runs over a wide log-spaced grid of roughly `samples`
/// points and both potential values over a grid of `[−q_bound, q_bound]`.
/// The returned disk covers every sampled image but is not certified.
pub fn two_step_disk_radius(q_bound: f64, lam: SpectralParam, samples: usize) -> Result<HDisk> {
    lam.require_strict()?;
    if !(q_bound >= 0.0) || samples == 0 {
        return Err(Error::invalid("two_step_disk_radius needs q_bound ≥ 0 and samples ≥ 1"));
    }
    let side = (samples as f64).sqrt().ceil().max(1.0) as usize;
    let q_grid: Vec<f64> = if q_bound == 0.0 {
        vec![0.0]
    } else {
        (0..9).map(|j| -q_bound + 2.0 * q_bound * j as f64 / 8.0).collect()
    };
    let mut images = Vec::with_capacity(side * side * q_grid.len() * q_grid.len());
    for a in 0..side {
        let s = if side > 1 { a as f64 / (side - 1) as f64 } else { 0.5 };
        // im from 1e-8 to 1e8
        let im = 10f64.powf(-8.0 + 16.0 * s);
        for b in 0..side {
            let t = if side > 1 { b as f64 / (side - 1) as f64 } else { 0.5 };
            let re = (12.0 * (2.0 * t - 1.0)).sinh() / 8.0e-1;
            let z = HPoint::new(re, im)?;
            for &qn in &q_grid {
                let w = mobius_step(z, qn, lam)?;
                for &qm in &q_grid {
                    images.push(mobius_step(w, qm, lam)?);
                }
            }
        }
    }
    Ok(enclosing_disk(&images))
}

/// Approximate minimal enclosing hyperbolic disk by walking the center
/// toward the current farthest point with shrinking steps.
fn enclosing_disk(points: &[HPoint]) -> HDisk {
    let mut center = points[0];
    let farthest = |c: HPoint| {
        points
            .iter()
            .map(|&p| (poincare_dist(c, p), p))
            .fold((0.0, c), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    for it in 1..200 {
        let (_, p) = farthest(center);
        let step = 1.0 / (it as f64 + 1.0);
        // Convex combinations of points of ℍ stay in ℍ.
        let c = center.z() * (1.0 - step) + p.z() * step;
        center = HPoint::from_complex(c).unwrap_or(center);
    }
    let (radius, _) = farthest(center);
    HDisk { center, radius }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hp(re: f64, im: f64) -> HPoint {
        HPoint::new(re, im).unwrap()
    }

    #[test]
    fn rejects_points_off_the_half_plane() {
        assert!(matches!(HPoint::new(0.0, 0.0), Err(Error::NotInHalfPlane { .. })));
        assert!(matches!(HPoint::new(1.0, -1.0), Err(Error::NotInHalfPlane { .. })));
        assert!(matches!(HPoint::new(f64::NAN, 1.0), Err(Error::NotInHalfPlane { .. })));
        assert!(matches!(HPoint::new(0.0, 1e-301), Err(Error::BoundaryUnderflow { .. })));
        assert!(SpectralParam::new(0.0, -1e-9).is_err());
    }

    #[test]
    fn poincare_distance_examples() {
        assert_eq!(poincare_dist(HPoint::I, HPoint::I), 0.0);
        assert_abs_diff_eq!(poincare_dist(hp(0.0, 1.0), hp(0.0, 2.0)), 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(poincare_dist(hp(0.0, 1.0), hp(1.0, 1.0)), 1.5f64.acosh(), epsilon = 1e-14);
        assert_abs_diff_eq!(1.5f64.acosh(), 0.962424, epsilon = 1e-6);
    }

    #[test]
    fn stable_form_matches_acosh_away_from_diagonal() {
        let (a, b) = (hp(-0.3, 0.2), hp(2.0, 5.0));
        let t = 1.0 + (a.z() - b.z()).norm_sqr() / (2.0 * a.im() * b.im());
        assert_abs_diff_eq!(poincare_dist(a, b), t.acosh(), epsilon = 1e-12);
        // near the diagonal acosh loses digits; the stable form does not
        let c = hp(0.0, 1.0 + 1e-12);
        let exact = (c.im() - 1.0).ln_1p(); // vertical distance is ln(y₂/y₁)
        assert_abs_diff_eq!(poincare_dist(HPoint::I, c), exact, epsilon = 1e-24);
    }

    #[test]
    fn mobius_examples() {
        let lam0 = SpectralParam::real(0.0).unwrap();
        let w = mobius_step(HPoint::I, 0.0, lam0).unwrap();
        assert_abs_diff_eq!(w.re(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.im(), 1.0, epsilon = 1e-15);

        let lami = SpectralParam::new(0.0, 1.0).unwrap();
        let w = mobius_step(HPoint::I, 0.0, lami).unwrap();
        assert_abs_diff_eq!(w.re(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.im(), 0.5, epsilon = 1e-15);

        let zp = hp(-0.5, 0.75f64.sqrt());
        let w = mobius_step(zp, 0.0, SpectralParam::real(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(w.re(), zp.re(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.im(), zp.im(), epsilon = 1e-14);
    }

    #[test]
    fn contraction_factor_examples() {
        assert_abs_diff_eq!(contraction_factor(2.0, 0.5).unwrap(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(contraction_factor(1.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(contraction_factor(1e-3, 1.0).unwrap(), 1e-3 / 1.001, epsilon = 1e-15);
        assert!(contraction_factor(0.0, 1.0).is_err());
        assert!(contraction_factor(1.0, 0.0).is_err());
    }

    #[test]
    fn contraction_ratio_examples() {
        let lami = SpectralParam::new(0.0, 1.0).unwrap();
        let r = contraction_ratio(0.0, lami, hp(0.0, 1.0), hp(0.0, 2.0)).unwrap();
        // oracle: evaluate both distances by hand
        let (w1, w2) = (hp(0.0, 0.5), hp(0.0, 1.0 / 3.0));
        assert_abs_diff_eq!(r, poincare_dist(w1, w2) / 2f64.ln(), epsilon = 1e-14);
        assert!(r <= 2.0 / 3.0);

        let lam0 = SpectralParam::real(0.0).unwrap();
        let r = contraction_ratio(0.0, lam0, hp(0.0, 1.0), hp(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        let r = contraction_ratio(5.0, lam0, hp(0.0, 1.0), hp(0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);

        assert!(contraction_ratio(0.0, lam0, HPoint::I, HPoint::I).is_err());
    }

    #[test]
    fn cd_weight_examples() {
        assert_eq!(cd_weight(hp(0.3, 0.7), hp(0.3, 0.7)), 0.0);
        assert_abs_diff_eq!(cd_weight(hp(0.0, 2.0), hp(0.0, 1.0)), 0.5, epsilon = 1e-15);
        let v = cd_weight(HPoint::I, hp(0.0, 0.5f64.sqrt()));
        assert_abs_diff_eq!(v, (1.0 - 0.5f64.sqrt()).powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.085786, epsilon = 1e-6);
    }

    #[test]
    fn upper_root_picks_half_plane_branch() {
        // z² + z + 1 = 0 has roots -1/2 ± i√3/2
        let lam = Complex64::new(1.0, 0.0);
        let r = upper_root(1.0, lam, 1.0, lam, 2.0).unwrap();
        assert_abs_diff_eq!(r.re(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im(), 0.75f64.sqrt(), epsilon = 1e-15);
        // outside the band both roots are real
        let lam = Complex64::new(3.0, 0.0);
        assert!(matches!(upper_root(1.0, lam, 1.0, lam, 2.0), Err(Error::OutOfBand { .. })));
        let lam = Complex64::new(2.0, 0.0);
        assert!(matches!(upper_root(1.0, lam, 1.0, lam, 2.0), Err(Error::OutOfBand { .. })));
    }

    #[test]
    fn two_step_disk_examples() {
        let lam = SpectralParam::new(0.0, 1.0).unwrap();
        let disk = two_step_disk_radius(0.0, lam, 10_000).unwrap();
        assert!(disk.radius.is_finite());

        let lam = SpectralParam::new(0.5, 0.1).unwrap();
        let disk = two_step_disk_radius(1.0, lam, 2_500).unwrap();
        assert!(disk.radius.is_finite());

        let lam = SpectralParam::new(0.0, 10.0).unwrap();
        let disk = two_step_disk_radius(0.0, lam, 2_500).unwrap();
        assert!(disk.radius < 0.05, "radius {}", disk.radius);

        assert!(two_step_disk_radius(0.0, SpectralParam::real(0.0).unwrap(), 10).is_err());
    }
}

use num_complex::Complex64;

use super::{psi_step, tree_fixed_point};
use crate::error::{Error, Result};
use crate::halfplane::{cd_weight, HPoint, SpectralParam};
use crate::stream::{stream_id, tag, Stream};

/// `cd^p(Ψ(z₁,…,z_k,q,λ)) / ((1/k)·Σ cd^p(z_j))` with `cd` centred at the
/// k-ary fixed point.
pub fn mu_kp(zs: &[HPoint], q: f64, lam: SpectralParam, p: f64) -> Result<f64> {
    let zl = tree_fixed_point(zs.len(), lam)?;
    let den = zs.iter().map(|&z| cd_weight(z, zl).powf(p)).sum::<f64>() / zs.len() as f64;
    if den == 0.0 {
        return Err(Error::Indeterminate("every argument sits at the fixed point"));
    }
    Ok(cd_weight(psi_step(zs, q, lam)?, zl).powf(p) / den)
}

/// Binary-tree contraction quotient `cd^p(Ψ(z₁,z₂,q,λ)) / (½cd^p(z₁) + ½cd^p(z₂))`.
pub fn mu2p(z1: HPoint, z2: HPoint, q: f64, lam: SpectralParam, p: f64) -> Result<f64> {
    mu_kp(&[z1, z2], q, lam, p)
}

/// Radial coordinates of a pair: `1/u_j = r ω_j` with `u_j = (z_j − z_λ)/√y_j`,
/// `v_j = √(y_j/(y₁+y₂))` and `scale = y₁ + y₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blowup {
    pub omega: [Complex64; 2],
    pub v: [f64; 2],
    pub r: f64,
    pub scale: f64,
}

pub fn blowup_coordinates(z1: HPoint, z2: HPoint, lam: SpectralParam) -> Result<Blowup> {
    let zl = tree_fixed_point(2, lam)?;
    let u = [z1, z2].map(|z| (z.z() - zl.z()) / z.im().sqrt());
    if u.iter().any(|x| x.norm_sqr() == 0.0) {
        return Err(Error::Indeterminate("blowup needs both points away from the fixed point"));
    }
    let r = (u[0].norm_sqr().recip() + u[1].norm_sqr().recip()).sqrt();
    let scale = z1.im() + z2.im();
    Ok(Blowup {
        omega: u.map(|x| x.inv() / r),
        v: [(z1.im() / scale).sqrt(), (z2.im() / scale).sqrt()],
        r,
        scale,
    })
}

/// `μ₂,p` in radial coordinates, extended to `r = 0`.
///
/// For real `λ` in the band, `cd(Ψ) = ½|⟨u,v⟩ − q/√s|²` exactly. Multiplying
/// numerator and denominator by `(r²|ω₁ω₂|²)^p` gives
/// `(½|A − q r ω₁ω₂/√s|²)^p / (½|ω₁|^{2p} + ½|ω₂|^{2p})`, `A = ω₂v₁ + ω₁v₂`,
/// which at `r = 0` is `(½|⟨(ω₂,ω₁),v⟩|²)^p / (½|ω₁|^{2p} + ½|ω₂|^{2p})`.
pub fn mu2p_boundary(
    omega: [Complex64; 2],
    v: [f64; 2],
    q: f64,
    lam: f64,
    p: f64,
    r: f64,
    scale: f64,
) -> Result<f64> {
    let norm = omega[0].norm_sqr() + omega[1].norm_sqr();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Normalization(norm));
    }
    if v.iter().any(|x| !(*x >= 0.0)) || (v[0] * v[0] + v[1] * v[1] - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("weight vector must be a nonnegative unit vector"));
    }
    let edge = 2.0 * 2f64.sqrt();
    if !(lam.abs() < edge) {
        return Err(Error::OutOfBand { lambda: Complex64::new(lam, 0.0), edge });
    }
    if !(r >= 0.0) || !(scale > 0.0) {
        return Err(Error::invalid("radius must be ≥ 0 and scale > 0"));
    }
    let a = omega[1] * v[0] + omega[0] * v[1];
    let base = 0.5 * (a - omega[0] * omega[1] * (q * r / scale.sqrt())).norm_sqr();
    let den = 0.5 * omega[0].norm().powf(2.0 * p) + 0.5 * omega[1].norm().powf(2.0 * p);
    Ok(base.powf(p) / den)
}

/// Both evaluations of the three-point functional and the weights `n_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mu3p {
    /// `Σ_σ cd^p(Ψ(z_σ1, Ψ(z_σ2, z_σ3, q₂, λ), q₁, λ)) / Σ_j cd^p(z_j)`.
    pub direct: f64,
    /// `Σ_σ μ₂,p(z_σ1, w_σ, q₁) (½n_σ1 + ¼μ₂,p(z_σ2, z_σ3, q₂)(n_σ2 + n_σ3))`.
    pub reconstructed: f64,
    pub n: [f64; 3],
}

const CYCLES: [[usize; 3]; 3] = [[0, 1, 2], [1, 2, 0], [2, 0, 1]];

/// Three-point functional over the cyclic permutations, evaluated directly
/// and through the two-point quotients; errors if the two disagree beyond
/// `10⁻⁹` relative.
pub fn mu3p(zs: [HPoint; 3], qs: [f64; 2], lam: SpectralParam, p: f64) -> Result<Mu3p> {
    let zl = tree_fixed_point(2, lam)?;
    let cdp = zs.map(|z| cd_weight(z, zl).powf(p));
    let total: f64 = cdp.iter().sum();
    if total == 0.0 {
        return Err(Error::Indeterminate("every argument sits at the fixed point"));
    }
    let n = cdp.map(|c| c / total);

    let mut direct = 0.0;
    let mut reconstructed = 0.0;
    for [a, b, c] in CYCLES {
        let w = psi_step(&[zs[b], zs[c]], qs[1], lam)?;
        let top = psi_step(&[zs[a], w], qs[0], lam)?;
        direct += cd_weight(top, zl).powf(p);

        let inner = if n[b] + n[c] == 0.0 {
            // μ₂,p(z_b, z_c) multiplies zero weight; only defined if w is fixed too
            if cd_weight(w, zl).powf(p) > 1e-15 * total {
                return Err(Error::Indeterminate("inner quotient has zero weight but nonzero image"));
            }
            0.0
        } else {
            0.25 * mu2p(zs[b], zs[c], qs[1], lam, p)? * (n[b] + n[c])
        };
        let coeff = 0.5 * n[a] + inner;
        if coeff != 0.0 {
            reconstructed += mu2p(zs[a], w, qs[0], lam, p)? * coeff;
        }
    }
    direct /= total;
    if (direct - reconstructed).abs() > 1e-9 * direct.abs().max(1.0) {
        return Err(Error::NumericalDegeneracy(format!(
            "three-point decomposition mismatch: {direct} vs {reconstructed}"
        )));
    }
    Ok(Mu3p { direct, reconstructed, n })
}

/// Largest `μ₃,p(z, 0, λ)` seen at one imaginary-part floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanMargin {
    pub floor: f64,
    pub max_mu3: f64,
    /// `1 − max_mu3`.
    pub margin: f64,
    pub samples: usize,
}

/// Random configurations `z_j = x_j + i·floor` with Cauchy-distributed `x_j`,
/// so both bounded and far-out real parts are visited.
pub fn scan_mu3p_margins(lam: f64, p: f64, floors: &[f64], samples: usize, seed: u64) -> Result<Vec<ScanMargin>> {
    let l = SpectralParam::real(lam)?;
    floors
        .iter()
        .enumerate()
        .map(|(fi, &floor)| {
            let mut s = Stream::at(seed, stream_id(tag::SCAN, fi as u64), 0, 3);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..samples {
                let mut zs = [HPoint::I; 3];
                for z in zs.iter_mut() {
                    let x = (std::f64::consts::PI * (s.unit() - 0.5)).tan();
                    *z = HPoint::new(x, floor)?;
                }
                worst = worst.max(mu3p(zs, [0.0, 0.0], l, p)?.direct);
            }
            Ok(ScanMargin { floor, max_mu3: worst, margin: 1.0 - worst, samples })
        })
        .collect()
}

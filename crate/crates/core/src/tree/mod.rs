//! Rooted k-ary trees: the branching recursion `Ψ`, its fixed point, pooled
//! samplers for the Green function distribution under random potentials, the
//! contraction functionals `μ₂,p` and `μ₃,p`, and the oscillating and
//! transversely two-periodic potentials.

mod mu;
mod oscillating;
mod population;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use mu::{
    blowup_coordinates, mu2p, mu2p_boundary, mu3p, mu_kp, scan_mu3p_margins, Blowup, Mu3p, ScanMargin,
};
pub use oscillating::{
    correlation_delta, oscillating_ac_test, oscillating_green, two_periodic_green, AcClass, CubicReport,
    Correlation, OscillatingPotential,
};
pub use population::{
    moment_mp, population_green, two_periodic_population, PoolInit, PopulationConfig, SamplePool, MONITOR_WINDOW,
};

use crate::dist::{Dist, JointDist};
use crate::error::{Error, Result};
use crate::halfplane::{neg_inv, upper_root, HPoint, SpectralParam};

/// Potential on the tree, before scaling by the disorder `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialModel {
    None,
    /// Independent `a·q(v)`, `q ~ ν`, at every vertex.
    Iid { dist: Dist, a: f64 },
    /// One pair `(q₁, q₂) ~ ν` per sphere, repeated with period two across
    /// it; the root draws from `root`.
    TwoPeriodic {
        joint: JointDist,
        root: Dist,
        a: f64,
        /// Permits runs with correlation `δ ≥ 1/2`.
        #[serde(default)]
        allow_inadmissible: bool,
    },
    Oscillating(OscillatingPotential),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeModel {
    pub k: usize,
    pub potential: PotentialModel,
}

impl TreeModel {
    pub fn free(k: usize) -> Self {
        TreeModel { k, potential: PotentialModel::None }
    }

    pub fn iid(k: usize, dist: Dist, a: f64) -> Self {
        TreeModel { k, potential: PotentialModel::Iid { dist, a } }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid(format!("branching must be at least 2, got {}", self.k)));
        }
        match &self.potential {
            PotentialModel::None => Ok(()),
            PotentialModel::Iid { dist, a } => {
                dist.validate()?;
                check_disorder(*a)?;
                if dist.mean().abs() > 1e-12 {
                    return Err(Error::invalid(format!("single-site law must have mean zero, got {}", dist.mean())));
                }
                Ok(())
            }
            PotentialModel::TwoPeriodic { joint, root, a, allow_inadmissible } => {
                if self.k != 2 {
                    return Err(Error::invalid("two-periodic potentials live on the binary tree"));
                }
                joint.validate()?;
                root.validate()?;
                check_disorder(*a)?;
                if !joint.in_unit_square() {
                    return Err(Error::invalid("joint law must be supported in |q₁|, |q₂| ≤ 1"));
                }
                if joint.centering().abs() > 1e-12 {
                    return Err(Error::invalid(format!("joint law must satisfy E[q₁+q₂] = 0, got {}", joint.centering())));
                }
                let m = joint.moments();
                let corr = correlation_delta(m.c11, m.c22, m.c12)?;
                if !corr.admissible && !allow_inadmissible {
                    return Err(Error::invalid(format!(
                        "correlation δ = {} is not below 1/2; set allow_inadmissible to run anyway",
                        corr.delta
                    )));
                }
                Ok(())
            }
            PotentialModel::Oscillating(osc) => {
                if self.k != 2 {
                    return Err(Error::invalid("oscillating potentials live on the binary tree"));
                }
                osc.validate()
            }
        }
    }
}

fn check_disorder(a: f64) -> Result<()> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("disorder must be finite and nonnegative, got {a}")))
    }
}

/// `Ψ(z₁,…,z_k, q, λ) = −1/(z₁ + … + z_k + λ − q)`.
#[inline]
pub fn psi_step(zs: &[HPoint], q: f64, lam: SpectralParam) -> Result<HPoint> {
    if zs.is_empty() {
        return Err(Error::invalid("Ψ needs at least one argument"));
    }
    let sum: Complex64 = zs.iter().map(|z| z.z()).sum();
    neg_inv(sum + lam.value() - q)
}

/// ℍ-root of `k z² + λ z + 1 = 0`.
pub fn tree_fixed_point(k: usize, lam: SpectralParam) -> Result<HPoint> {
    if k == 0 {
        return Err(Error::invalid("branching must be positive"));
    }
    let edge = 2.0 * (k as f64).sqrt();
    if lam.is_real() && lam.re().abs() >= edge {
        return Err(Error::OutOfBand { lambda: lam.value(), edge });
    }
    upper_root(k as f64, lam.value(), 1.0, lam.value(), edge)
}

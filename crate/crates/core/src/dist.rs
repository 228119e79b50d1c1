//! Potential distributions as they appear in run configs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-site distribution ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dist {
    /// ±1 with probability ½ each.
    BernoulliPm1,
    Uniform { lo: f64, hi: f64 },
    /// `values[0]` with probability `p`, `values[1]` otherwise.
    TwoPoint { p: f64, values: [f64; 2] },
    Atoms { values: Vec<f64>, probs: Vec<f64> },
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        match self {
            Dist::BernoulliPm1 => Ok(()),
            Dist::Uniform { lo, hi } => {
                if lo.is_finite() && hi.is_finite() && lo < hi {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("uniform needs finite lo < hi, got [{lo}, {hi}]")))
                }
            }
            Dist::TwoPoint { p, values } => {
                if (0.0..=1.0).contains(p) && values.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::invalid("two_point needs p in [0,1] and finite values"))
                }
            }
            Dist::Atoms { values, probs } => check_atoms(values.len(), probs, values.iter().all(|v| v.is_finite())),
        }
    }

    /// Inverse-CDF sample from a uniform `u ∈ [0,1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            Dist::BernoulliPm1 => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            Dist::Uniform { lo, hi } => lo + (hi - lo) * u,
            Dist::TwoPoint { p, values } => {
                if u < *p {
                    values[0]
                } else {
                    values[1]
                }
            }
            Dist::Atoms { values, probs } => values[pick(probs, u)],
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn second_moment(&self) -> f64 {
        self.moment(2)
    }

    fn moment(&self, k: i32) -> f64 {
        match self {
            Dist::BernoulliPm1 => 0.5 * ((-1f64).powi(k) + 1.0),
            Dist::Uniform { lo, hi } => {
                (hi.powi(k + 1) - lo.powi(k + 1)) / ((k + 1) as f64 * (hi - lo))
            }
            Dist::TwoPoint { p, values } => p * values[0].powi(k) + (1.0 - p) * values[1].powi(k),
            Dist::Atoms { values, probs } => values.iter().zip(probs).map(|(v, p)| p * v.powi(k)).sum(),
        }
    }

    /// Bound K on the support.
    pub fn bound(&self) -> f64 {
        match self {
            Dist::BernoulliPm1 => 1.0,
            Dist::Uniform { lo, hi } => lo.abs().max(hi.abs()),
            Dist::TwoPoint { values, .. } => values[0].abs().max(values[1].abs()),
            Dist::Atoms { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// Joint law of the transversely two-periodic pair `(q₁, q₂)` on finitely
/// many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDist {
    pub atoms: Vec<[f64; 2]>,
    pub probs: Vec<f64>,
}

/// Second moments of a joint law and the derived correlation parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments {
    pub c11: f64,
    pub c22: f64,
    pub c12: f64,
}

impl JointDist {
    /// `q₁, q₂` independent, each ±1 with probability ½.
    pub fn independent_bernoulli() -> Self {
        JointDist {
            atoms: vec![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]],
            probs: vec![0.25; 4],
        }
    }

    /// `q₁ = q₂ = ±1` with probability ½.
    pub fn correlated_bernoulli() -> Self {
        JointDist {
            atoms: vec![[1.0, 1.0], [-1.0, -1.0]],
            probs: vec![0.5, 0.5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_atoms(
            self.atoms.len(),
            &self.probs,
            self.atoms.iter().flatten().all(|v| v.is_finite()),
        )
    }

    pub fn sample(&self, u: f64) -> [f64; 2] {
        self.atoms[pick(&self.probs, u)]
    }

    pub fn moments(&self) -> PairMoments {
        let mut m = PairMoments { c11: 0.0, c22: 0.0, c12: 0.0 };
        for (a, p) in self.atoms.iter().zip(&self.probs) {
            m.c11 += p * a[0] * a[0];
            m.c22 += p * a[1] * a[1];
            m.c12 += p * a[0] * a[1];
        }
        m
    }

    /// Support inside `{|q₁|, |q₂| ≤ 1}`.
    pub fn in_unit_square(&self) -> bool {
        self.atoms.iter().flatten().all(|v| v.abs() <= 1.0)
    }

    /// `∫ (q₁ + q₂) dν`.
    pub fn centering(&self) -> f64 {
        self.atoms.iter().zip(&self.probs).map(|(a, p)| p * (a[0] + a[1])).sum()
    }

    pub fn bound(&self) -> f64 {
        self.atoms.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_atoms(n: usize, probs: &[f64], finite: bool) -> Result<()> {
    if n == 0 || n != probs.len() || !finite {
        return Err(Error::invalid("atom list must be nonempty, finite and match probs in length"));
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("atom probabilities must be ≥ 0 and sum to 1 (sum = {total})")));
    }
    Ok(())
}

fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

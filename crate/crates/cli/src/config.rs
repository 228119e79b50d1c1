use std::path::{Path, PathBuf};

use greenrec_core::chain1d::PotentialSeq;
use greenrec_core::oracle::{ModelDescriptor, SiteDisorder};
use greenrec_core::tree::{PopulationConfig, PotentialModel};
use greenrec_core::SpectralParam;
use serde::Deserialize;

use crate::error::CliError;

/// One run, as read from a JSON file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the subcommand when present.
    #[serde(default)]
    pub command: Option<String>,
    pub model: CliModel,
    #[serde(default)]
    pub lambda: Option<Lambda>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub eps_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub population: Option<PopulationConfig>,
    /// Moment exponent.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lambda {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// `points` equally spaced real parts from `re_min` to `re_max` inclusive.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub re_min: f64,
    pub re_max: f64,
    pub points: usize,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CliModel {
    Chain {
        #[serde(default)]
        potential: Option<PotentialSeq>,
    },
    Tree {
        k: usize,
        #[serde(default)]
        potential: Option<PotentialModel>,
    },
    Percolation {
        q_del: f64,
    },
    RegularLoopTree {
        gamma: f64,
    },
    MeanfieldLoopTree {
        gamma: f64,
        #[serde(default = "yes")]
        diagonal: bool,
    },
    BoxNd {
        dim: usize,
        #[serde(default)]
        disorder: Option<SiteDisorder>,
    },
}

fn yes() -> bool {
    true
}

impl CliModel {
    pub fn potential(&self) -> PotentialModel {
        match self {
            CliModel::Tree { potential: Some(p), .. } => p.clone(),
            _ => PotentialModel::None,
        }
    }

    /// Whether the model draws anything from the seed.
    pub fn is_stochastic(&self) -> bool {
        match self {
            CliModel::Chain { potential } => matches!(potential, Some(PotentialSeq::RandomCentered(_))),
            CliModel::Tree { potential, .. } => match potential {
                Some(PotentialModel::Iid { a, .. }) => *a != 0.0,
                Some(PotentialModel::TwoPeriodic { .. }) => true,
                _ => false,
            },
            CliModel::Percolation { q_del } => *q_del > 0.0,
            CliModel::BoxNd { disorder, .. } => disorder.as_ref().is_some_and(|d| d.a != 0.0),
            _ => false,
        }
    }

    /// The explicit truncation behind this model, when it has one.
    pub fn descriptor(&self) -> Option<ModelDescriptor> {
        Some(match self {
            CliModel::Chain { potential } => ModelDescriptor::Chain { potential: potential.clone() },
            CliModel::Tree { k, potential } => match potential {
                None | Some(PotentialModel::None) => ModelDescriptor::KaryTree { k: *k, disorder: None },
                Some(PotentialModel::Iid { dist, a }) => {
                    ModelDescriptor::KaryTree { k: *k, disorder: Some(SiteDisorder { dist: dist.clone(), a: *a }) }
                }
                _ => return None,
            },
            CliModel::Percolation { q_del } => ModelDescriptor::PercolationSample { q_del: *q_del },
            CliModel::RegularLoopTree { gamma } => ModelDescriptor::RegularLoopTree { gamma: *gamma },
            CliModel::MeanfieldLoopTree { gamma, diagonal } => {
                ModelDescriptor::MeanfieldLoopTree { gamma: *gamma, diagonal: *diagonal }
            }
            CliModel::BoxNd { dim, disorder } => ModelDescriptor::BoxNd { dim: *dim, disorder: disorder.clone() },
        })
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Spectral parameters from `grid`, else the single `lambda`.
    pub fn lambdas(&self) -> Result<Vec<SpectralParam>, CliError> {
        let pts: Vec<(f64, f64)> = if let Some(g) = self.grid {
            if g.points == 0 {
                return Err(CliError::Config("key `grid.points` must be positive".into()));
            }
            if g.points == 1 {
                vec![(g.re_min, g.im)]
            } else {
                let step = (g.re_max - g.re_min) / (g.points - 1) as f64;
                (0..g.points).map(|i| (g.re_min + step * i as f64, g.im)).collect()
            }
        } else if let Some(l) = self.lambda {
            vec![(l.re, l.im)]
        } else {
            return Err(CliError::Config("missing key `lambda` (or `grid`)".into()));
        };
        pts.into_iter()
            .map(|(re, im)| SpectralParam::new(re, im).map_err(|e| CliError::Config(format!("key `lambda`: {e}"))))
            .collect()
    }

    pub fn population(&self) -> PopulationConfig {
        self.population.clone().unwrap_or_default()
    }

    pub fn moment_exponent(&self) -> Result<f64, CliError> {
        let p = self.p.unwrap_or(1.5);
        if p > 1.0 && p.is_finite() {
            Ok(p)
        } else {
            Err(CliError::Config(format!("key `p` must exceed 1, got {p}")))
        }
    }
}

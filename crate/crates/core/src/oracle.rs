//! Brute-force ground truth: explicit truncations of each model, Green
//! functions by sparse elimination, and dense spectra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

use crate::chain1d::PotentialSeq;
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::halfplane::{HPoint, SpectralParam};
use crate::percolation::{Outcome, PercolationSpec};
use crate::siegelgraph::RootedGraph;
use crate::stream::{stream_id, tag, Stream};

/// Deepest tree truncation.
pub const MAX_TREE_DEPTH: usize = 16;
/// Largest k-ary tree, in vertices.
pub const MAX_TREE_VERTICES: usize = 1 << 22;
/// Longest box side.
pub const MAX_BOX_SIDE: usize = 64;
/// Largest box, in vertices.
pub const MAX_BOX_VERTICES: usize = 1 << 18;
/// Longest chain.
pub const MAX_CHAIN_LEN: usize = 10_000_000;
/// Largest matrix handed to the dense eigensolver.
pub const MAX_DENSE: usize = 4096;

/// `a·q(v)` with `q ~ dist` independently at every vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDisorder {
    pub dist: Dist,
    pub a: f64,
}

/// Models with an explicit finite truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDescriptor {
    /// Sites `0..=L` of the half-line.
    Chain {
        #[serde(default)]
        potential: Option<PotentialSeq>,
    },
    /// Spheres `0..=L` of the rooted k-ary tree.
    KaryTree {
        k: usize,
        #[serde(default)]
        disorder: Option<SiteDisorder>,
    },
    /// `{0..L}^dim` with `L` vertices per axis, rooted at a corner.
    BoxNd {
        dim: usize,
        #[serde(default)]
        disorder: Option<SiteDisorder>,
    },
    RegularLoopTree { gamma: f64 },
    MeanfieldLoopTree {
        gamma: f64,
        #[serde(default = "yes")]
        diagonal: bool,
    },
    /// One realization of the percolated binary tree.
    PercolationSample { q_del: f64 },
}

fn yes() -> bool {
    true
}

impl ModelDescriptor {
    pub fn is_stochastic(&self) -> bool {
        match self {
            ModelDescriptor::Chain { potential } => matches!(potential, Some(PotentialSeq::RandomCentered(_))),
            ModelDescriptor::KaryTree { disorder, .. } | ModelDescriptor::BoxNd { disorder, .. } => {
                disorder.as_ref().is_some_and(|d| d.a != 0.0)
            }
            ModelDescriptor::PercolationSample { q_del } => *q_del > 0.0,
            _ => false,
        }
    }
}

/// `H = −Δ + q` on a finite vertex set, as symmetric sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHamiltonian {
    /// `rows[v]` lists `(w, H[v][w])`, diagonal included when nonzero.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub root: usize,
}

impl FiniteHamiltonian {
    /// `−(adjacency of g) + diag(pot)`; an empty `pot` is the zero potential.
    pub fn from_graph(g: &RootedGraph, pot: &[f64]) -> Result<Self> {
        if !pot.is_empty() && pot.len() != g.n() {
            return Err(Error::invalid(format!("potential has {} sites, graph has {}", pot.len(), g.n())));
        }
        let rows = (0..g.n())
            .map(|v| {
                let mut row: BTreeMap<usize, f64> = g.neighbors(v).iter().map(|&(w, wt)| (w, -wt)).collect();
                if let Some(&q) = pot.get(v) {
                    *row.entry(v).or_insert(0.0) += q;
                }
                row.into_iter().filter(|&(_, x)| x != 0.0).collect()
            })
            .collect();
        Ok(FiniteHamiltonian { rows, root: g.root() })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, v: usize, w: usize) -> f64 {
        self.rows[v].iter().find(|e| e.0 == w).map_or(0.0, |e| e.1)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (v, row) in self.rows.iter().enumerate() {
            for &(w, x) in row {
                m[(v, w)] = x;
            }
        }
        m
    }

    /// Largest `|H[v][w] − H[w][v]|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for (v, row) in self.rows.iter().enumerate() {
            for &(w, x) in row {
                worst = worst.max((x - self.entry(w, v)).abs());
            }
        }
        worst
    }
}

/// Explicit truncation of `model` at depth `depth`; random parts are drawn
/// from `seed`.
pub fn build_truncation(model: &ModelDescriptor, depth: usize, seed: u64) -> Result<FiniteHamiltonian> {
    let (g, pot) = build_graph(model, depth, seed)?;
    FiniteHamiltonian::from_graph(&g, &pot)
}

/// Graph and per-vertex potential behind [`build_truncation`]. Vertex ids of
/// trees and chains are stable under deepening, and so are their random
/// draws.
pub fn build_graph(model: &ModelDescriptor, depth: usize, seed: u64) -> Result<(RootedGraph, Vec<f64>)> {
    let tree_cap = || {
        if depth > MAX_TREE_DEPTH {
            Err(Error::CapExceeded(format!("tree depth {depth} exceeds {MAX_TREE_DEPTH}")))
        } else {
            Ok(())
        }
    };
    match model {
        ModelDescriptor::Chain { potential } => {
            if depth >= MAX_CHAIN_LEN {
                return Err(Error::CapExceeded(format!("chain length {depth} exceeds {MAX_CHAIN_LEN}")));
            }
            let pot = match potential {
                Some(p) => {
                    p.validate()?;
                    p.sites(depth + 1, seed)
                }
                None => Vec::new(),
            };
            Ok((RootedGraph::half_line(depth + 1), pot))
        }
        ModelDescriptor::KaryTree { k, disorder } => {
            tree_cap()?;
            if *k < 1 {
                return Err(Error::invalid("branching must be positive"));
            }
            let size = (0..=depth as i32).map(|n| (*k as f64).powi(n)).sum::<f64>();
            if size > MAX_TREE_VERTICES as f64 {
                return Err(Error::CapExceeded(format!("tree of {size} vertices exceeds {MAX_TREE_VERTICES}")));
            }
            let g = RootedGraph::kary_tree(*k, depth);
            let pot = site_potential(disorder.as_ref(), g.n(), seed)?;
            Ok((g, pot))
        }
        ModelDescriptor::BoxNd { dim, disorder } => {
            if depth > MAX_BOX_SIDE {
                return Err(Error::CapExceeded(format!("box side {depth} exceeds {MAX_BOX_SIDE}")));
            }
            if *dim < 1 || depth < 1 {
                return Err(Error::invalid("box needs positive dimension and side"));
            }
            let size = (depth as f64).powi(*dim as i32);
            if size > MAX_BOX_VERTICES as f64 {
                return Err(Error::CapExceeded(format!("box of {size} vertices exceeds {MAX_BOX_VERTICES}")));
            }
            let g = RootedGraph::box_nd(*dim, depth);
            let pot = site_potential(disorder.as_ref(), g.n(), seed)?;
            Ok((g, pot))
        }
        ModelDescriptor::RegularLoopTree { gamma } => {
            tree_cap()?;
            check_gamma(*gamma)?;
            Ok((RootedGraph::regular_loop_tree(*gamma, depth), Vec::new()))
        }
        ModelDescriptor::MeanfieldLoopTree { gamma, diagonal } => {
            tree_cap()?;
            check_gamma(*gamma)?;
            Ok((RootedGraph::meanfield_loop_tree_with(*gamma, depth, *diagonal), Vec::new()))
        }
        ModelDescriptor::PercolationSample { q_del } => {
            tree_cap()?;
            let spec = PercolationSpec::new(*q_del)?;
            let s = stream_id(tag::TRUNCATION, 1);
            let g = RootedGraph::tree_from_child_counts(
                |v| match spec.outcome(Stream::at(seed, s, v as u64, 1).unit()) {
                    Outcome::Both => 2,
                    Outcome::OnlyLeft | Outcome::OnlyRight => 1,
                },
                depth,
            );
            Ok((g, Vec::new()))
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("loop weight must be finite and nonnegative, got {gamma}")))
    }
}

fn site_potential(disorder: Option<&SiteDisorder>, n: usize, seed: u64) -> Result<Vec<f64>> {
    let Some(d) = disorder else { return Ok(Vec::new()) };
    d.dist.validate()?;
    if !(d.a.is_finite() && d.a >= 0.0) {
        return Err(Error::invalid(format!("disorder must be finite and nonnegative, got {}", d.a)));
    }
    let s = stream_id(tag::TRUNCATION, 0);
    Ok((0..n).map(|v| d.a * d.dist.sample(Stream::at(seed, s, v as u64, 1).unit())).collect())
}

/// `⟨e_v, (H − λ)⁻¹ e_v⟩`.
///
/// Every other vertex reachable from `v` is eliminated, farthest first, from
/// the complex symmetric matrix `H − λ`; what remains at `v` is `1/G(v,v)`.
/// Trees eliminate leaf by leaf without fill. Pivots of a matrix with
/// negative definite imaginary part stay nonzero, so no pivoting is needed.
///
/// `lam` may lie in either half-plane; only the real axis is excluded.
pub fn solve_green(h: &FiniteHamiltonian, lam: Complex64, v: usize) -> Result<Complex64> {
    if !(lam.im != 0.0 && lam.is_finite()) {
        return Err(Error::invalid("the resolvent needs Im λ ≠ 0"));
    }
    if v >= h.dim() {
        return Err(Error::invalid(format!("vertex {v} out of range for dimension {}", h.dim())));
    }
    let order = bfs_order(h, v);
    let lv = lam;
    let mut diag = vec![-lv; h.dim()];
    let mut off: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); h.dim()];
    for &u in &order {
        for &(w, x) in &h.rows[u] {
            if w == u {
                diag[u] += x;
            } else {
                off[u].insert(w, Complex64::new(x, 0.0));
            }
        }
    }
    for &u in order.iter().skip(1).rev() {
        let p = diag[u];
        if p.norm_sqr() == 0.0 || !p.is_finite() {
            return Err(Error::NumericalDegeneracy(format!("zero pivot at vertex {u}")));
        }
        let nbrs: Vec<(usize, Complex64)> = std::mem::take(&mut off[u]).into_iter().collect();
        for &(x, axu) in &nbrs {
            off[x].remove(&u);
            let f = axu / p;
            diag[x] -= f * axu;
            for &(y, auy) in &nbrs {
                if y != x {
                    *off[x].entry(y).or_insert(Complex64::new(0.0, 0.0)) -= f * auy;
                }
            }
        }
    }
    let g = 1.0 / diag[v];
    if !g.is_finite() {
        return Err(Error::NumericalDegeneracy(format!("zero Schur complement at vertex {v}")));
    }
    Ok(g)
}

/// [`solve_green`] at the root, as a point of ℍ.
pub fn solve_green_root(h: &FiniteHamiltonian, lam: SpectralParam) -> Result<HPoint> {
    lam.require_strict()?;
    HPoint::from_complex(solve_green(h, lam.value(), h.root)?)
}

/// Vertices reachable from `v`, in breadth-first order starting at `v`.
fn bfs_order(h: &FiniteHamiltonian, v: usize) -> Vec<usize> {
    let mut seen = vec![false; h.dim()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([v]);
    seen[v] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(w, _) in &h.rows[u] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order
}

fn dense_cap(h: &FiniteHamiltonian) -> Result<()> {
    if h.dim() > MAX_DENSE {
        Err(Error::CapExceeded(format!("dimension {} exceeds the dense limit of {MAX_DENSE}", h.dim())))
    } else {
        Ok(())
    }
}

/// All eigenvalues, ascending.
pub fn eig_spectrum(h: &FiniteHamiltonian) -> Result<Vec<f64>> {
    dense_cap(h)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `Σ_k |ψ_k(v)|²/(λ_k − λ)` from a dense eigendecomposition.
pub fn green_from_eigen(h: &FiniteHamiltonian, lam: Complex64, v: usize) -> Result<Complex64> {
    dense_cap(h)?;
    let eig = SymmetricEigen::new(h.to_dense());
    Ok(eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.row(v).iter())
        .map(|(&e, &psi)| psi * psi / (e - lam))
        .sum())
}

//! Green functions on general rooted graphs.
//!
//! The adjacency matrix is cut along the spheres `S_n` around the root into
//! intra-sphere blocks `D_n` and forward blocks `E_n : ℓ²(S_n) → ℓ²(S_{n+1})`.
//! The truncated Green matrices then obey the Schur-complement recursion
//! `Z_n = −(E_nᵀ Z_{n+1} E_n + D_n − q_n + λ)⁻¹` on the Siegel half-space of
//! complex symmetric matrices with positive definite imaginary part.

mod graph;

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub use graph::RootedGraph;

use crate::error::{Error, Result};
use crate::halfplane::{neg_inv, HPoint, SpectralParam};

/// Relative singular-value cut for the kernel check.
pub const RANK_TOL: f64 = 1e-10;

/// Sparse entry `(row, col, value)` in sphere-local indices.
pub type Entry = (usize, usize, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct SphereDecomposition {
    /// `spheres[n]` lists the vertices at distance `n`, in BFS order.
    pub spheres: Vec<Vec<usize>>,
    /// `d[n]`: symmetric intra-sphere block, both triangles stored.
    pub d: Vec<Vec<Entry>>,
    /// `e[n]`: `(row in S_{n+1}, col in S_n, weight)`; one fewer than spheres.
    pub e: Vec<Vec<Entry>>,
    /// Vertices with no path to the root; excluded from every sphere.
    pub unreachable: Vec<usize>,
}

impl SphereDecomposition {
    pub fn depth(&self) -> usize {
        self.spheres.len() - 1
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        self.spheres.iter().map(Vec::len).collect()
    }

    /// Vertices of the ball in sphere order; the index into this list is
    /// the row index of [`Self::to_dense`].
    pub fn ordering(&self) -> Vec<usize> {
        self.spheres.concat()
    }

    /// Reassembles the adjacency matrix of the ball from the blocks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let offsets = self.offsets();
        let n = *offsets.last().unwrap();
        let mut a = DMatrix::zeros(n, n);
        for (s, block) in self.d.iter().enumerate() {
            for &(i, j, w) in block {
                a[(offsets[s] + i, offsets[s] + j)] += w;
            }
        }
        for (s, block) in self.e.iter().enumerate() {
            for &(i, j, w) in block {
                a[(offsets[s + 1] + i, offsets[s] + j)] += w;
                a[(offsets[s] + j, offsets[s + 1] + i)] += w;
            }
        }
        a
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for s in &self.spheres {
            off.push(off.last().unwrap() + s.len());
        }
        off
    }

    /// `E_n` as a dense `|S_{n+1}| × |S_n|` matrix.
    pub fn forward_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.spheres[n + 1].len(), self.spheres[n].len());
        for &(i, j, w) in &self.e[n] {
            m[(i, j)] += w;
        }
        m
    }
}

/// BFS spheres `S_0..=S_depth` and their blocks.
pub fn decompose_spheres(g: &RootedGraph, depth: usize) -> SphereDecomposition {
    let n = g.n();
    let mut dist = vec![usize::MAX; n];
    let mut local = vec![0usize; n];
    let mut spheres: Vec<Vec<usize>> = vec![vec![g.root()]];
    dist[g.root()] = 0;
    let mut queue = VecDeque::from([g.root()]);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in g.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                if dist[w] >= spheres.len() {
                    spheres.push(Vec::new());
                }
                local[w] = spheres[dist[w]].len();
                spheres[dist[w]].push(w);
                queue.push_back(w);
            }
        }
    }
    let unreachable = (0..n).filter(|&v| dist[v] == usize::MAX).collect();
    spheres.truncate(depth + 1);

    let mut d = vec![Vec::new(); spheres.len()];
    let mut e = vec![Vec::new(); spheres.len().saturating_sub(1)];
    for (s, sphere) in spheres.iter().enumerate() {
        for &v in sphere {
            for &(w, x) in g.neighbors(v) {
                if dist[w] == s {
                    d[s].push((local[v], local[w], x));
                } else if dist[w] == s + 1 && s + 1 < spheres.len() {
                    e[s].push((local[w], local[v], x));
                }
            }
        }
    }
    SphereDecomposition { spheres, d, e, unreachable }
}

/// Point of the Siegel half-space. Trees stay diagonal under the recursion,
/// so the diagonal case is stored without the zeros.
#[derive(Debug, Clone, PartialEq)]
pub enum SiegelPoint {
    Diagonal(Vec<Complex64>),
    Dense(DMatrix<Complex64>),
}

impl SiegelPoint {
    /// `c·I` of dimension `d`.
    pub fn scalar(c: HPoint, d: usize) -> Self {
        SiegelPoint::Diagonal(vec![c.z(); d])
    }

    /// Checks symmetry and positive definiteness of the imaginary part.
    pub fn new_dense(z: DMatrix<Complex64>) -> Result<Self> {
        let p = SiegelPoint::Dense(z);
        p.validate(1e-12)?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        match self {
            SiegelPoint::Diagonal(v) => v.len(),
            SiegelPoint::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            SiegelPoint::Diagonal(v) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v)),
            SiegelPoint::Dense(m) => m.clone(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match self {
            SiegelPoint::Diagonal(v) if i == j => v[i],
            SiegelPoint::Diagonal(_) => Complex64::new(0.0, 0.0),
            SiegelPoint::Dense(m) => m[(i, j)],
        }
    }

    /// Smallest eigenvalue of `Im Z`.
    pub fn min_im_eigenvalue(&self) -> f64 {
        match self {
            SiegelPoint::Diagonal(v) => v.iter().map(|z| z.im).fold(f64::INFINITY, f64::min),
            SiegelPoint::Dense(m) => {
                let y = m.map(|z| z.im);
                let y = (&y + y.transpose()) * 0.5;
                SymmetricEigen::new(y).eigenvalues.min()
            }
        }
    }

    /// Largest `|Z_ij − Z_ji|`.
    pub fn asymmetry(&self) -> f64 {
        match self {
            SiegelPoint::Diagonal(_) => 0.0,
            SiegelPoint::Dense(m) => {
                let mut worst = 0f64;
                for i in 0..m.nrows() {
                    for j in 0..i {
                        worst = worst.max((m[(i, j)] - m[(j, i)]).norm());
                    }
                }
                worst
            }
        }
    }

    pub fn validate(&self, sym_tol: f64) -> Result<()> {
        if let SiegelPoint::Dense(m) = self {
            if !m.is_square() {
                return Err(Error::invalid("Siegel point must be square"));
            }
            if m.iter().any(|z| !z.is_finite()) {
                return Err(Error::NumericalDegeneracy("non-finite matrix entry".into()));
            }
        }
        let scale = match self {
            SiegelPoint::Diagonal(v) => v.iter().fold(1f64, |m, z| m.max(z.norm())),
            SiegelPoint::Dense(m) => m.iter().fold(1f64, |a, z| a.max(z.norm())),
        };
        if self.asymmetry() > sym_tol * scale {
            return Err(Error::invalid(format!("matrix not symmetric (defect {:e})", self.asymmetry())));
        }
        let lo = self.min_im_eigenvalue();
        if !(lo > 0.0) {
            return Err(Error::invalid(format!("imaginary part not positive definite (λ_min = {lo:e})")));
        }
        Ok(())
    }
}

/// One Schur step `Φ_n(Z, q_n, λ) = −(E_nᵀ Z E_n + D_n − q_n + λ)⁻¹`.
///
/// `z` lives on `S_{n+1}`, `q_n` on `S_n` (empty means zero). Stays diagonal
/// when `z` is diagonal, `D_n` is diagonal and every vertex of `S_{n+1}` has
/// one parent.
pub fn siegel_mobius(
    z: &SiegelPoint,
    dec: &SphereDecomposition,
    n: usize,
    q_n: &[f64],
    lam: SpectralParam,
) -> Result<SiegelPoint> {
    if n + 1 >= dec.spheres.len() {
        return Err(Error::invalid(format!("no forward block below sphere {n}")));
    }
    step(z, &dec.d[n], &dec.e[n], dec.spheres[n].len(), dec.spheres[n + 1].len(), q_n, lam.value())
}

fn step(
    z: &SiegelPoint,
    d: &[Entry],
    e: &[Entry],
    dim: usize,
    dim_next: usize,
    q: &[f64],
    lam: Complex64,
) -> Result<SiegelPoint> {
    if z.dim() != dim_next {
        return Err(Error::invalid(format!("seed has dimension {}, sphere has {dim_next}", z.dim())));
    }
    if !q.is_empty() && q.len() != dim {
        return Err(Error::invalid(format!("potential has {} entries, sphere has {dim}", q.len())));
    }
    let qv = |i: usize| if q.is_empty() { 0.0 } else { q[i] };

    if let SiegelPoint::Diagonal(zd) = z {
        if d.iter().all(|&(i, j, _)| i == j) && single_parent(e, dim_next) {
            let mut m = vec![Complex64::new(0.0, 0.0); dim];
            for &(r, c, w) in e {
                m[c] += w * w * zd[r];
            }
            // same association as the scalar map: (z + λ) − q
            for (i, x) in m.iter_mut().enumerate() {
                *x = *x + lam - qv(i);
            }
            for &(i, _, w) in d {
                m[i] += w;
            }
            return m
                .into_iter()
                .map(|x| {
                    neg_inv(x)
                        .map(|h| h.z())
                        .map_err(|_| Error::NumericalDegeneracy("singular diagonal entry".into()))
                })
                .collect::<Result<Vec<_>>>()
                .map(SiegelPoint::Diagonal);
        }
    }

    // M = EᵀZE built by scattering the sparse E; Z entries addressed through
    // the rows E touches.
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    match z {
        SiegelPoint::Diagonal(zd) => {
            for &(r1, c1, w1) in e {
                for &(r2, c2, w2) in e {
                    if r1 == r2 {
                        m[(c1, c2)] += w1 * w2 * zd[r1];
                    }
                }
            }
        }
        SiegelPoint::Dense(zm) => {
            let mut ef = DMatrix::<Complex64>::zeros(dim_next, dim);
            for &(r, c, w) in e {
                ef[(r, c)] += Complex64::new(w, 0.0);
            }
            m = ef.transpose() * zm * &ef;
        }
    }
    for &(i, j, w) in d {
        m[(i, j)] += w;
    }
    for i in 0..dim {
        m[(i, i)] += lam - qv(i);
    }
    let inv = m
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NumericalDegeneracy("Schur block is singular to working precision".into()))?;
    let out = (&inv + inv.transpose()).map(|x| -0.5 * x);
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalDegeneracy("non-finite Schur inverse".into()));
    }
    Ok(SiegelPoint::Dense(out))
}

fn single_parent(e: &[Entry], dim_next: usize) -> bool {
    let mut seen = vec![false; dim_next];
    for &(r, _, _) in e {
        if std::mem::replace(&mut seen[r], true) {
            return false;
        }
    }
    true
}

/// Starting matrix on the sphere just outside the truncation.
#[derive(Debug, Clone, PartialEq)]
pub enum Seed {
    /// `c·I`; `i·I` is the usual arbitrary choice.
    Identity(HPoint),
    Matrix(SiegelPoint),
    /// Zero outside the ball: the result is exactly the root entry of the
    /// inverse of the truncated `H − λ` on the ball of radius `depth`.
    Dirichlet,
}

impl Default for Seed {
    fn default() -> Self {
        Seed::Identity(HPoint::I)
    }
}

/// `G_λ(0,0)` by composing the Schur steps from sphere `depth` down to the
/// root, starting from `seed` on `S_{depth+1}`.
///
/// `pot` is indexed by vertex id; an empty slice is the zero potential.
/// Every `E_n` up to `depth` must be injective.
pub fn green_root_graph(
    g: &RootedGraph,
    pot: &[f64],
    lam: SpectralParam,
    depth: usize,
    seed: &Seed,
) -> Result<HPoint> {
    let dec = decompose_spheres(g, depth + 1);
    if dec.spheres.len() < depth + 2 {
        return Err(Error::Graph(format!(
            "graph has only {} spheres, need {} for depth {depth}",
            dec.spheres.len(),
            depth + 2
        )));
    }
    if let Some(n) = check_kernel_condition(&dec).iter().position(|ok| !ok) {
        return Err(Error::KernelCondition { sphere: n });
    }
    green_root_decomposed(&dec, pot, lam, seed)
}

/// Composition on a given decomposition, without the kernel check. The seed
/// sits on the last sphere of `dec`.
pub fn green_root_decomposed(
    dec: &SphereDecomposition,
    pot: &[f64],
    lam: SpectralParam,
    seed: &Seed,
) -> Result<HPoint> {
    lam.require_strict()?;
    let last = dec.depth();
    let size = dec.spheres[last].len();
    let mut z = match seed {
        Seed::Identity(c) => SiegelPoint::scalar(*c, size),
        Seed::Matrix(m) => m.clone(),
        Seed::Dirichlet => SiegelPoint::Diagonal(vec![Complex64::new(0.0, 0.0); size]),
    };
    let mut q = Vec::new();
    for n in (0..last).rev() {
        q.clear();
        if !pot.is_empty() {
            q.extend(dec.spheres[n].iter().map(|&v| pot[v]));
        }
        z = siegel_mobius(&z, dec, n, &q, lam)?;
    }
    HPoint::from_complex(z.entry(0, 0))
}

/// Root entry of `(H − λ)⁻¹` on the whole finite graph, by the Schur steps
/// from its outermost sphere inward with nothing beyond it.
///
/// Exact block elimination needs no kernel condition, so boxes and other
/// graphs with shrinking spheres are fine here.
pub fn green_root_exhaustive(g: &RootedGraph, pot: &[f64], lam: SpectralParam) -> Result<HPoint> {
    let mut dec = decompose_spheres(g, g.n());
    if !dec.unreachable.is_empty() {
        return Err(Error::Graph(format!("{} vertices are not reachable from the root", dec.unreachable.len())));
    }
    dec.spheres.push(Vec::new());
    dec.d.push(Vec::new());
    dec.e.push(Vec::new());
    green_root_decomposed(&dec, pot, lam, &Seed::Dirichlet)
}

/// `true` at `n` iff `E_n` has trivial kernel, for each forward block.
pub fn check_kernel_condition(dec: &SphereDecomposition) -> Vec<bool> {
    (0..dec.e.len())
        .map(|n| {
            let cols = dec.spheres[n].len();
            if single_parent(&dec.e[n], dec.spheres[n + 1].len()) {
                // disjoint column supports: injective iff no column is empty
                let mut hit = vec![false; cols];
                for &(_, c, w) in &dec.e[n] {
                    hit[c] |= w != 0.0;
                }
                hit.iter().all(|&h| h)
            } else {
                let e = dec.forward_dense(n);
                if e.nrows() < cols {
                    return false;
                }
                let sv = e.singular_values();
                let top = sv.max();
                top > 0.0 && sv.iter().filter(|&&s| s > RANK_TOL * top).count() == cols
            }
        })
        .collect()
}

/// `‖Y^{−1/2} W Y^{−1/2}‖` with `Y = Im Z`.
pub fn finsler_norm(z: &SiegelPoint, w: &DMatrix<Complex64>) -> Result<f64> {
    let d = z.dim();
    if w.nrows() != d || w.ncols() != d {
        return Err(Error::invalid("tangent vector has the wrong dimension"));
    }
    let y = z.to_dense().map(|x| x.im);
    let eig = SymmetricEigen::new((&y + y.transpose()) * 0.5);
    if eig.eigenvalues.min() < 1e-12 {
        return Err(Error::NumericalDegeneracy(format!(
            "Im Z nearly singular (λ_min = {:e})",
            eig.eigenvalues.min()
        )));
    }
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let s = inv_sqrt.map(|x| Complex64::new(x, 0.0));
    let a = &s * w * &s;
    Ok(a.singular_values().max())
}

/// Length of the straight segment from `z1` to `z2` by the midpoint rule.
/// An upper bound for the Finsler distance.
pub fn finsler_path_upper(z1: &SiegelPoint, z2: &SiegelPoint, segments: usize) -> Result<f64> {
    if z1.dim() != z2.dim() {
        return Err(Error::invalid("endpoints have different dimensions"));
    }
    let a = z1.to_dense();
    let b = z2.to_dense();
    let tangent = &b - &a;
    if tangent.iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    let m = segments.max(1);
    let mut total = 0.0;
    for k in 0..m {
        let t = (k as f64 + 0.5) / m as f64;
        let zt = SiegelPoint::Dense(&a * Complex64::new(1.0 - t, 0.0) + &b * Complex64::new(t, 0.0));
        total += finsler_norm(&zt, &tangent)?;
    }
    Ok(total / m as f64)
}

/// Finsler length of the image under `Φ_n` of the straight segment from
/// `z1` to `z2`, integrated with the differential `W ↦ Φ Eᵀ W E Φ`.
pub fn finsler_image_length(
    z1: &SiegelPoint,
    z2: &SiegelPoint,
    dec: &SphereDecomposition,
    n: usize,
    q_n: &[f64],
    lam: SpectralParam,
    segments: usize,
) -> Result<f64> {
    let a = z1.to_dense();
    let b = z2.to_dense();
    let tangent = &b - &a;
    let e = dec.forward_dense(n).map(|x| Complex64::new(x, 0.0));
    let pushed = e.transpose() * &tangent * &e;
    let m = segments.max(1);
    let mut total = 0.0;
    for k in 0..m {
        let t = (k as f64 + 0.5) / m as f64;
        let zt = SiegelPoint::Dense(&a * Complex64::new(1.0 - t, 0.0) + &b * Complex64::new(t, 0.0));
        let phi = siegel_mobius(&zt, dec, n, q_n, lam)?.to_dense();
        total += finsler_norm(&SiegelPoint::Dense(phi.clone()), &(&phi * &pushed * &phi))?;
    }
    Ok(total / m as f64)
}

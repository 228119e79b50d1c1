use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Weighted symmetric graph with a distinguished root.
///
/// `adj[v]` lists `(w, weight)`; a self-entry `(v, weight)` is a diagonal
/// term of the adjacency matrix (loop trees need them at small spheres).
#[derive(Debug, Clone, PartialEq)]
pub struct RootedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    root: usize,
}

/// Collects weighted entries and merges duplicates.
#[derive(Default)]
struct Builder {
    rows: Vec<BTreeMap<usize, f64>>,
}

impl Builder {
    fn with_vertices(n: usize) -> Self {
        Builder { rows: vec![BTreeMap::new(); n] }
    }

    /// Adds `w` to entries `(u,v)` and `(v,u)` (once on the diagonal).
    fn add(&mut self, u: usize, v: usize, w: f64) {
        let need = u.max(v) + 1;
        if self.rows.len() < need {
            self.rows.resize(need, BTreeMap::new());
        }
        *self.rows[u].entry(v).or_insert(0.0) += w;
        if u != v {
            *self.rows[v].entry(u).or_insert(0.0) += w;
        }
    }

    fn finish(self, root: usize) -> RootedGraph {
        RootedGraph {
            adj: self.rows.into_iter().map(|r| r.into_iter().collect()).collect(),
            root,
        }
    }
}

impl RootedGraph {
    /// Validates symmetry of a prebuilt adjacency list.
    pub fn from_adjacency(adj: Vec<Vec<(usize, f64)>>, root: usize) -> Result<Self> {
        let n = adj.len();
        if root >= n {
            return Err(Error::Graph(format!("root {root} out of range for {n} vertices")));
        }
        for (v, row) in adj.iter().enumerate() {
            for &(w, x) in row {
                if w >= n || !x.is_finite() {
                    return Err(Error::Graph(format!("bad entry ({v},{w}) = {x}")));
                }
                let back: f64 = adj[w].iter().filter(|e| e.0 == v).map(|e| e.1).sum();
                let fwd: f64 = row.iter().filter(|e| e.0 == w).map(|e| e.1).sum();
                if (back - fwd).abs() > 1e-12 * fwd.abs().max(1.0) {
                    return Err(Error::Graph(format!("edge ({v},{w}) has no symmetric partner")));
                }
            }
        }
        Ok(RootedGraph { adj, root })
    }

    /// Parses `u v [weight]` lines; `#` starts a comment. Each unordered
    /// pair counts once, so listing both `u v` and `v u` is harmless.
    /// Root is vertex 0.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Graph(format!("line {}: expected `u v [weight]`, got {raw:?}", lineno + 1));
            if !(2..=3).contains(&fields.len()) {
                return Err(bad());
            }
            let u: usize = fields[0].parse().map_err(|_| bad())?;
            let v: usize = fields[1].parse().map_err(|_| bad())?;
            let w: f64 = match fields.get(2) {
                Some(s) => s.parse().map_err(|_| bad())?,
                None => 1.0,
            };
            pairs.insert((u.min(v), u.max(v)), w);
        }
        let mut b = Builder::with_vertices(1);
        for ((u, v), w) in pairs {
            b.add(u, v, w);
        }
        Ok(b.finish(0))
    }

    /// ℕ₀ truncated to `len` sites.
    pub fn half_line(len: usize) -> Self {
        let mut b = Builder::with_vertices(len.max(1));
        for j in 1..len {
            b.add(j - 1, j, 1.0);
        }
        b.finish(0)
    }

    /// Rooted k-ary tree through sphere `depth`, numbered sphere by sphere;
    /// `(n, j)` has children `(n+1, kj..kj+k)`.
    pub fn kary_tree(k: usize, depth: usize) -> Self {
        Self::tree_with_spheres(k, depth, |_, _| {})
    }

    /// Binary tree plus the weighted cycle `j ~ j±1 mod 2ⁿ` in every sphere.
    ///
    /// Sphere 1 carries a doubled edge (weight 2γ) and the root a diagonal
    /// entry 2γ. This is the circulant with first row `γ(e₁ + e_{N−1})`.
    pub fn regular_loop_tree(gamma: f64, depth: usize) -> Self {
        Self::tree_with_spheres(2, depth, |b, sphere| {
            let n = sphere.len();
            // on a one-vertex sphere both cycle neighbours are the vertex itself
            let w = if n == 1 { 2.0 * gamma } else { gamma };
            for j in 0..n {
                b.add(sphere[j], sphere[(j + 1) % n], w);
            }
        })
    }

    /// Binary tree plus `γ2⁻ⁿ` between every pair `v, w ∈ S_n`, `v = w` included.
    pub fn meanfield_loop_tree(gamma: f64, depth: usize) -> Self {
        Self::meanfield_loop_tree_with(gamma, depth, true)
    }

    /// As [`Self::meanfield_loop_tree`], optionally without the diagonal term.
    pub fn meanfield_loop_tree_with(gamma: f64, depth: usize, diagonal: bool) -> Self {
        Self::tree_with_spheres(2, depth, |b, sphere| {
            let w = gamma / sphere.len() as f64;
            for (i, &v) in sphere.iter().enumerate() {
                if diagonal {
                    b.add(v, v, w);
                }
                for &u in &sphere[i + 1..] {
                    b.add(v, u, w);
                }
            }
        })
    }

    fn tree_with_spheres(k: usize, depth: usize, mut decorate: impl FnMut(&mut Builder, &[usize])) -> Self {
        assert!(k >= 1, "branching must be positive");
        let mut b = Builder::with_vertices(1);
        let mut sphere = vec![0usize];
        let mut next_id = 1usize;
        decorate(&mut b, &sphere);
        for _ in 0..depth {
            let mut next = Vec::with_capacity(sphere.len() * k);
            for &v in &sphere {
                for _ in 0..k {
                    b.add(v, next_id, 1.0);
                    next.push(next_id);
                    next_id += 1;
                }
            }
            decorate(&mut b, &next);
            sphere = next;
        }
        b.finish(0)
    }

    /// `{0..side}^dim` with nearest-neighbour edges, rooted at the origin.
    pub fn box_nd(dim: usize, side: usize) -> Self {
        let n = side.pow(dim as u32);
        let mut b = Builder::with_vertices(n.max(1));
        for v in 0..n {
            let mut stride = 1;
            for _ in 0..dim {
                let coord = (v / stride) % side;
                if coord + 1 < side {
                    b.add(v, v + stride, 1.0);
                }
                stride *= side;
            }
        }
        b.finish(0)
    }

    /// Tree built from per-vertex child counts in breadth-first order: vertex
    /// ids are assigned sphere by sphere, `children[v]` new vertices per `v`.
    pub fn tree_from_child_counts(children: impl Fn(usize) -> usize, depth: usize) -> Self {
        let mut b = Builder::with_vertices(1);
        let mut sphere = vec![0usize];
        let mut next_id = 1usize;
        for _ in 0..depth {
            let mut next = Vec::new();
            for &v in &sphere {
                for _ in 0..children(v) {
                    b.add(v, next_id, 1.0);
                    next.push(next_id);
                    next_id += 1;
                }
            }
            sphere = next;
        }
        b.finish(0)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    /// Largest number of distinct neighbours, diagonal entries excluded.
    pub fn max_degree(&self) -> usize {
        self.adj
            .iter()
            .enumerate()
            .map(|(v, row)| row.iter().filter(|e| e.0 != v).count())
            .max()
            .unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj
            .iter()
            .enumerate()
            .map(|(v, row)| row.iter().filter(|e| e.0 > v).count())
            .sum()
    }
}

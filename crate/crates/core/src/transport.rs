//! Exact discrete optimal transport.
//!
//! [`solve_ot`] runs a primal network simplex on the complete bipartite
//! transportation graph (block-search pricing, strongly feasible spanning
//! trees, deterministic tie-breaking). [`brute_force_ot`] enumerates
//! permutations and is only meant as a verification oracle on tiny uniform
//! problems. The Ω-plane costs `c`, `C` and the optimal meeting point `m`
//! live here as well.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plans with at most this many cells are returned dense.
pub const DENSE_LIMIT: usize = 1_000_000;

/// Relative tolerance on the balance of source and target masses.
pub const BALANCE_TOL: f64 = 1e-9;

/// Largest problem size accepted by [`brute_force_ot`].
pub const BRUTE_FORCE_MAX: usize = 7;

/// Row-major cost matrix; `+∞` marks forbidden cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidMeasure(format!(
                "cost matrix has {} entries, expected {rows}x{cols}",
                entries.len()
            )));
        }
        if let Some(bad) = entries
            .iter()
            .find(|c| c.is_nan() || **c < 0.0 || **c == f64::NEG_INFINITY)
        {
            return Err(Error::InvalidMeasure(format!(
                "cost entry {bad} is not in [0, +inf]"
            )));
        }
        Ok(CostMatrix {
            rows,
            cols,
            entries,
        })
    }

    /// Fills the matrix in parallel from `f(i, j)`.
    pub fn from_fn<F>(rows: usize, cols: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let mut entries = vec![0.0; rows * cols];
        if cols > 0 {
            entries
                .par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, row)| row.iter_mut().enumerate().for_each(|(j, c)| *c = f(i, j)));
        }
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }
}

/// Storage of a coupling matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "storage", rename_all = "snake_case")]
pub enum Coupling {
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Sparse {
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, f64)>,
    },
}

impl Coupling {
    fn from_entries(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        if rows * cols <= DENSE_LIMIT {
            let mut data = vec![0.0; rows * cols];
            for (i, j, w) in entries {
                data[i * cols + j] += w;
            }
            Coupling::Dense { rows, cols, data }
        } else {
            Coupling::Sparse {
                rows,
                cols,
                entries,
            }
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Coupling::Dense { rows, cols, .. } | Coupling::Sparse { rows, cols, .. } => {
                (*rows, *cols)
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Coupling::Dense { cols, data, .. } => data[i * cols + j],
            Coupling::Sparse { entries, .. } => entries
                .iter()
                .filter(|e| e.0 == i && e.1 == j)
                .map(|e| e.2)
                .sum(),
        }
    }

    /// Strictly positive cells in row-major order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, f64)> {
        match self {
            Coupling::Dense { cols, data, .. } => data
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(k, &w)| (k / cols, k % cols, w))
                .collect(),
            Coupling::Sparse { entries, .. } => {
                let mut v: Vec<_> = entries.iter().copied().filter(|e| e.2 > 0.0).collect();
                v.sort_by_key(|e| (e.0, e.1));
                v
            }
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let (rows, _) = self.shape();
        let mut s = vec![0.0; rows];
        for (i, _, w) in self.nonzeros() {
            s[i] += w;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let (_, cols) = self.shape();
        let mut s = vec![0.0; cols];
        for (_, j, w) in self.nonzeros() {
            s[j] += w;
        }
        s
    }
}

/// A coupling together with its cost and the marginals it was solved for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub coupling: Coupling,
    pub cost: f64,
    pub source_marginal: Vec<f64>,
    pub target_marginal: Vec<f64>,
}

impl TransportPlan {
    /// Recomputes `Σ π_ij C_ij` for an arbitrary cost matrix of the same shape.
    pub fn cost_under(&self, cost: &CostMatrix) -> f64 {
        self.coupling
            .nonzeros()
            .iter()
            .map(|&(i, j, w)| w * cost.get(i, j))
            .sum()
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<f64> {
    if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidMeasure(format!(
            "{name} weight {bad} is not finite and nonnegative"
        )));
    }
    Ok(w.iter().sum())
}

/// Exact optimal plan between `src` and `dst` under `cost`.
pub fn solve_ot(src: &[f64], dst: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    if cost.rows() != src.len() || cost.cols() != dst.len() {
        return Err(Error::InvalidMeasure(format!(
            "cost matrix is {}x{} but marginals have {} and {} atoms",
            cost.rows(),
            cost.cols(),
            src.len(),
            dst.len()
        )));
    }
    let ms = check_weights("source", src)?;
    let mt = check_weights("target", dst)?;
    if (ms - mt).abs() > BALANCE_TOL * ms.max(mt).max(f64::MIN_POSITIVE) {
        return Err(Error::Unbalanced {
            source_mass: ms,
            target_mass: mt,
        });
    }
    if src.is_empty() || dst.is_empty() || ms == 0.0 {
        return Err(Error::InvalidMeasure(
            "transport between empty measures".into(),
        ));
    }
    let entries = NetworkSimplex::new(src, dst, cost).solve()?;
    let cost_value = entries.iter().map(|&(i, j, w)| w * cost.get(i, j)).sum();
    Ok(TransportPlan {
        coupling: Coupling::from_entries(src.len(), dst.len(), entries),
        cost: cost_value,
        source_marginal: src.to_vec(),
        target_marginal: dst.to_vec(),
    })
}

const STATE_LOWER: u8 = 0;
const STATE_TREE: u8 = 1;
const STATE_OFF: u8 = 2;

/// Primal network simplex specialised to the complete bipartite graph.
///
/// Nodes `0..n` are sources, `n..n+m` sinks and `n+m` the artificial root.
/// Arc `i*m + j` goes from source `i` to sink `j`; arc `n*m + u` is the
/// artificial arc joining node `u` to the root.
struct NetworkSimplex<'a> {
    n: usize,
    m: usize,
    cost: &'a CostMatrix,
    supply: Vec<f64>,
    art_cost: f64,
    eps: f64,
    flow: Vec<f64>,
    state: Vec<u8>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    children: Vec<Vec<usize>>,
    next_arc: usize,
    block: usize,
}

impl<'a> NetworkSimplex<'a> {
    fn new(src: &[f64], dst: &[f64], cost: &'a CostMatrix) -> Self {
        let (n, m) = (src.len(), dst.len());
        let nodes = n + m + 1;
        let root = n + m;
        let real = n * m;
        let max_cost = cost
            .entries
            .iter()
            .filter(|c| c.is_finite())
            .fold(0.0f64, |a, &c| a.max(c));
        let art_cost = (max_cost + 1.0) * nodes as f64;
        let eps = (1e-12 * (1.0 + max_cost)).max(8.0 * f64::EPSILON * art_cost);

        let mut supply = Vec::with_capacity(nodes);
        supply.extend_from_slice(src);
        supply.extend(dst.iter().map(|w| -w));
        supply.push(0.0);

        let mut state = vec![STATE_LOWER; real + n + m];
        for (e, s) in state[..real].iter_mut().enumerate() {
            if !cost.entries[e].is_finite() {
                *s = STATE_OFF;
            }
        }
        let mut flow = vec![0.0; real + n + m];
        let mut parent = vec![root; nodes];
        let mut pred = vec![usize::MAX; nodes];
        let mut up = vec![false; nodes];
        let mut depth = vec![1; nodes];
        let mut pi = vec![0.0; nodes];
        let mut children = vec![Vec::new(); nodes];
        for u in 0..n + m {
            let e = real + u;
            state[e] = STATE_TREE;
            pred[u] = e;
            flow[e] = supply[u].abs();
            if supply[u] >= 0.0 {
                up[u] = true;
                pi[u] = 0.0;
            } else {
                up[u] = false;
                pi[u] = art_cost;
            }
            children[root].push(u);
        }
        parent[root] = usize::MAX;
        depth[root] = 0;
        let block = ((real as f64).sqrt().ceil() as usize)
            .max(10)
            .min(real.max(1));
        NetworkSimplex {
            n,
            m,
            cost,
            supply,
            art_cost,
            eps,
            flow,
            state,
            parent,
            pred,
            up,
            depth,
            pi,
            children,
            next_arc: 0,
            block,
        }
    }

    #[inline]
    fn root(&self) -> usize {
        self.n + self.m
    }

    #[inline]
    fn endpoints(&self, e: usize) -> (usize, usize) {
        let real = self.n * self.m;
        if e < real {
            (e / self.m, self.n + e % self.m)
        } else {
            let u = e - real;
            if self.supply[u] >= 0.0 {
                (u, self.root())
            } else {
                (self.root(), u)
            }
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        let real = self.n * self.m;
        if e < real {
            self.cost.entries[e]
        } else if self.supply[e - real] >= 0.0 {
            0.0
        } else {
            self.art_cost
        }
    }

    #[inline]
    fn reduced_cost(&self, e: usize) -> f64 {
        let (s, t) = self.endpoints(e);
        self.arc_cost(e) + self.pi[s] - self.pi[t]
    }

    /// Block search over the real arcs, starting where the previous search stopped.
    fn find_entering(&mut self) -> Option<usize> {
        let total = self.n * self.m;
        let mut e = self.next_arc;
        let mut cnt = self.block;
        let mut best = None;
        let mut min_c = -self.eps;
        for _ in 0..total {
            if self.state[e] == STATE_LOWER {
                let c = self.reduced_cost(e);
                if c < min_c {
                    min_c = c;
                    best = Some(e);
                }
            }
            e += 1;
            if e == total {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if best.is_some() {
                    break;
                }
                cnt = self.block;
            }
        }
        self.next_arc = e;
        best
    }

    fn find_join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] > self.depth[v] {
                u = self.parent[u];
            } else if self.depth[v] > self.depth[u] {
                v = self.parent[v];
            } else {
                u = self.parent[u];
                v = self.parent[v];
            }
        }
        u
    }

    fn solve(mut self) -> Result<Vec<(usize, usize, f64)>> {
        let real = self.n * self.m;
        let max_iter = 50 * (real + self.n + self.m) + 1_000_000;
        let mut iter = 0usize;
        while let Some(in_arc) = self.find_entering() {
            iter += 1;
            if iter > max_iter {
                return Err(Error::Internal(
                    "network simplex exceeded its pivot budget".into(),
                ));
            }
            self.pivot(in_arc)?;
        }

        let mass: f64 = self.supply[..self.n].iter().sum();
        let art_flow: f64 = self.flow[real..].iter().sum();
        if art_flow > BALANCE_TOL * mass.max(1.0) * 2.0 {
            return Err(Error::NoFinitePlan);
        }
        let entries = (0..real)
            .filter(|&e| self.flow[e] > 0.0)
            .map(|e| (e / self.m, e % self.m, self.flow[e]))
            .collect();
        Ok(entries)
    }

    fn pivot(&mut self, in_arc: usize) -> Result<()> {
        let (first, second) = self.endpoints(in_arc);
        let join = self.find_join(first, second);

        // leaving arc: strict comparison on the first side, non-strict on the
        // second, so the tree stays strongly feasible
        let mut delta = f64::INFINITY;
        let mut u_out = usize::MAX;
        let mut out_first = true;
        let mut u = first;
        while u != join {
            if self.up[u] {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    u_out = u;
                    out_first = true;
                }
            }
            u = self.parent[u];
        }
        u = second;
        while u != join {
            if !self.up[u] {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    out_first = false;
                }
            }
            u = self.parent[u];
        }
        if u_out == usize::MAX {
            return Err(Error::Internal(
                "unbounded pivot in transportation problem".into(),
            ));
        }

        if delta > 0.0 {
            self.flow[in_arc] += delta;
            let mut u = first;
            while u != join {
                let e = self.pred[u];
                if self.up[u] {
                    self.flow[e] -= delta;
                } else {
                    self.flow[e] += delta;
                }
                u = self.parent[u];
            }
            u = second;
            while u != join {
                let e = self.pred[u];
                if self.up[u] {
                    self.flow[e] += delta;
                } else {
                    self.flow[e] -= delta;
                }
                u = self.parent[u];
            }
        }
        let out_arc = self.pred[u_out];
        self.flow[out_arc] = 0.0;

        let (u_in, v_in) = if out_first {
            (first, second)
        } else {
            (second, first)
        };

        // re-hang the subtree of u_out below v_in, reversing the path u_in..u_out
        let mut path = vec![u_in];
        while *path.last().unwrap() != u_out {
            let w = *path.last().unwrap();
            path.push(self.parent[w]);
        }
        let old_preds: Vec<usize> = path.iter().map(|&w| self.pred[w]).collect();
        let top_parent = self.parent[u_out];
        remove_child(&mut self.children[top_parent], u_out);
        for i in 0..path.len() - 1 {
            let (child, par) = (path[i], path[i + 1]);
            remove_child(&mut self.children[par], child);
            self.children[child].push(par);
            self.parent[par] = child;
            self.pred[par] = old_preds[i];
        }
        self.parent[u_in] = v_in;
        self.pred[u_in] = in_arc;
        self.children[v_in].push(u_in);
        for &w in &path {
            self.up[w] = self.endpoints(self.pred[w]).0 == w;
        }

        self.state[in_arc] = STATE_TREE;
        self.state[out_arc] = if out_arc < self.n * self.m {
            STATE_LOWER
        } else {
            STATE_OFF
        };

        self.refresh_subtree(u_in);
        Ok(())
    }

    /// Recomputes depth and potentials below (and including) `top`.
    fn refresh_subtree(&mut self, top: usize) {
        let mut stack = vec![top];
        while let Some(w) = stack.pop() {
            let p = self.parent[w];
            let c = self.arc_cost(self.pred[w]);
            self.depth[w] = self.depth[p] + 1;
            self.pi[w] = if self.up[w] {
                self.pi[p] - c
            } else {
                self.pi[p] + c
            };
            stack.extend(self.children[w].iter().copied());
        }
    }
}

fn remove_child(list: &mut Vec<usize>, child: usize) {
    if let Some(pos) = list.iter().position(|&c| c == child) {
        list.swap_remove(pos);
    }
}

/// Exhaustive minimum over all `n!` matchings for uniform marginals of equal size.
pub fn brute_force_ot(src: &[f64], dst: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    let n = src.len();
    if n == 0 || n != dst.len() || n > BRUTE_FORCE_MAX {
        return Err(Error::OracleDomain(format!(
            "need equal sizes 1..={BRUTE_FORCE_MAX}, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    let w = src[0];
    let uniform = |v: &[f64]| v.iter().all(|x| (x - w).abs() <= 1e-12 * w.abs().max(1.0));
    if !uniform(src) || !uniform(dst) {
        return Err(Error::OracleDomain("marginals are not uniform".into()));
    }
    if cost.rows() != n || cost.cols() != n {
        return Err(Error::OracleDomain("cost matrix shape mismatch".into()));
    }

    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_perm = perm.clone();
    let mut best = f64::INFINITY;
    let eval = |p: &[usize]| {
        p.iter()
            .enumerate()
            .map(|(i, &j)| cost.get(i, j))
            .sum::<f64>()
    };
    // Heap's algorithm, iterative
    let mut c = vec![0usize; n];
    let v = eval(&perm);
    if v < best {
        best = v;
        best_perm.clone_from(&perm);
    }
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = eval(&perm);
            if v < best {
                best = v;
                best_perm.clone_from(&perm);
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    if !best.is_finite() {
        return Err(Error::NoFinitePlan);
    }
    let entries = best_perm
        .iter()
        .enumerate()
        .map(|(i, &j)| (i, j, w))
        .collect();
    Ok(TransportPlan {
        coupling: Coupling::from_entries(n, n, entries),
        cost: w * best,
        source_marginal: src.to_vec(),
        target_marginal: dst.to_vec(),
    })
}

/// A point `(h, d)` of the Ω-plane: Bayes value and signed group density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaPoint {
    pub h: f64,
    pub d: f64,
}

impl OmegaPoint {
    pub fn new(h: f64, d: f64) -> Self {
        OmegaPoint { h, d }
    }
}

/// `c(x, y) = (h − y)² / |d|`.
pub fn cost_c(x: OmegaPoint, y: f64) -> Result<f64> {
    if x.d == 0.0 {
        return Err(Error::CostUndefined);
    }
    Ok(cost_c_unchecked(x, y))
}

#[inline]
pub(crate) fn cost_c_unchecked(x: OmegaPoint, y: f64) -> f64 {
    (x.h - y).powi(2) / x.d.abs()
}

/// `C(x₁, x₂) = min_z c(x₁, z) + c(x₂, z) = (h₂ − h₁)² / (|d₁| + |d₂|)`.
pub fn cost_pair(x1: OmegaPoint, x2: OmegaPoint) -> Result<f64> {
    if x1.d == 0.0 || x2.d == 0.0 {
        return Err(Error::CostUndefined);
    }
    Ok(cost_pair_unchecked(x1, x2))
}

#[inline]
pub(crate) fn cost_pair_unchecked(x1: OmegaPoint, x2: OmegaPoint) -> f64 {
    (x2.h - x1.h).powi(2) / (x1.d.abs() + x2.d.abs())
}

/// The minimiser of `z ↦ c(x₁, z) + c(x₂, z)`: the `1/|d|`-weighted mean of `h₁, h₂`.
pub fn midpoint(x1: OmegaPoint, x2: OmegaPoint) -> Result<f64> {
    if x1.d == 0.0 || x2.d == 0.0 {
        return Err(Error::CostUndefined);
    }
    Ok(midpoint_unchecked(x1, x2))
}

#[inline]
pub(crate) fn midpoint_unchecked(x1: OmegaPoint, x2: OmegaPoint) -> f64 {
    let (a, b) = (1.0 / x1.d.abs(), 1.0 / x2.d.abs());
    (x1.h * a + x2.h * b) / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn single_atom() {
        let c = CostMatrix::new(1, 1, vec![3.5]).unwrap();
        let plan = solve_ot(&[1.0], &[1.0], &c).unwrap();
        assert_eq!(plan.coupling.get(0, 0), 1.0);
        assert_eq!(plan.cost, 3.5);
    }

    #[test]
    fn zero_cost_matching() {
        let c = CostMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let plan = solve_ot(&[0.5, 0.5], &[0.5, 0.5], &c).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert_eq!(plan.coupling.get(0, 0), 0.5);
        assert_eq!(plan.coupling.get(1, 1), 0.5);
        assert_eq!(plan.coupling.get(0, 1), 0.0);
    }

    #[test]
    fn four_atoms_match_permutation_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let entries: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..10.0)).collect();
            let c = CostMatrix::new(4, 4, entries).unwrap();
            let plan = solve_ot(&uniform(4), &uniform(4), &c).unwrap();
            // independent enumeration of the 24 matchings
            let mut best = f64::INFINITY;
            for a in 0..4 {
                for b in 0..4 {
                    for cc in 0..4 {
                        for d in 0..4 {
                            let p = [a, b, cc, d];
                            let mut seen = [false; 4];
                            if p.iter().all(|&k| !std::mem::replace(&mut seen[k], true)) {
                                let v: f64 = p.iter().enumerate().map(|(i, &j)| c.get(i, j)).sum();
                                best = best.min(v / 4.0);
                            }
                        }
                    }
                }
            }
            assert!((plan.cost - best).abs() <= 1e-12, "{} vs {best}", plan.cost);
        }
    }

    #[test]
    fn unbalanced_rejected() {
        let c = CostMatrix::new(1, 1, vec![0.0]).unwrap();
        assert!(matches!(
            solve_ot(&[1.0], &[0.9], &c),
            Err(Error::Unbalanced { .. })
        ));
    }

    #[test]
    fn infinite_costs_respected_or_infeasible() {
        let inf = f64::INFINITY;
        let c = CostMatrix::new(2, 2, vec![inf, 1.0, 2.0, inf]).unwrap();
        let plan = solve_ot(&[0.5, 0.5], &[0.5, 0.5], &c).unwrap();
        assert!((plan.cost - 1.5).abs() < 1e-12);
        let c = CostMatrix::new(2, 2, vec![inf, inf, 2.0, 1.0]).unwrap();
        assert!(matches!(
            solve_ot(&[0.5, 0.5], &[0.5, 0.5], &c),
            Err(Error::NoFinitePlan)
        ));
    }

    #[test]
    fn marginals_and_cost_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let (n, m) = (rng.gen_range(1..15), rng.gen_range(1..15));
            let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
            a.iter_mut().for_each(|x| *x /= sa);
            b.iter_mut().for_each(|x| *x /= sb);
            let c = CostMatrix::from_fn(n, m, |i, j| ((i * 7919 + j * 104729) % 101) as f64 / 10.0)
                .unwrap();
            let plan = solve_ot(&a, &b, &c).unwrap();
            for (x, y) in plan.coupling.row_sums().iter().zip(&a) {
                assert!((x - y).abs() <= 1e-9);
            }
            for (x, y) in plan.coupling.col_sums().iter().zip(&b) {
                assert!((x - y).abs() <= 1e-9);
            }
            assert!((plan.cost - plan.cost_under(&c)).abs() <= 1e-9 * plan.cost.max(1.0));
            assert!(plan.coupling.nonzeros().len() <= n + m - 1);
        }
    }

    #[test]
    fn brute_force_examples() {
        let c = CostMatrix::new(1, 1, vec![2.0]).unwrap();
        assert_eq!(brute_force_ot(&[1.0], &[1.0], &c).unwrap().cost, 2.0);
        let c = CostMatrix::new(3, 3, vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]).unwrap();
        let plan = brute_force_ot(&uniform(3), &uniform(3), &c).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert!((plan.coupling.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn brute_force_domain() {
        let c = CostMatrix::new(8, 8, vec![0.0; 64]).unwrap();
        assert!(matches!(
            brute_force_ot(&uniform(8), &uniform(8), &c),
            Err(Error::OracleDomain(_))
        ));
        let c = CostMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(
            brute_force_ot(&[0.3, 0.7], &[0.5, 0.5], &c),
            Err(Error::OracleDomain(_))
        ));
    }

    #[test]
    fn five_atoms_agree_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let c =
                CostMatrix::new(5, 5, (0..25).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
            let a = solve_ot(&uniform(5), &uniform(5), &c).unwrap().cost;
            let b = brute_force_ot(&uniform(5), &uniform(5), &c).unwrap().cost;
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn omega_costs() {
        let x1 = OmegaPoint::new(1.0, 1.0);
        let x2 = OmegaPoint::new(0.0, -1.0);
        assert_eq!(cost_pair(x1, x2).unwrap(), 0.5);
        assert_eq!(midpoint(x1, x2).unwrap(), 0.5);
        assert_eq!(
            cost_pair(OmegaPoint::new(0.3, 2.0), OmegaPoint::new(0.3, -5.0)).unwrap(),
            0.0
        );
        let x1 = OmegaPoint::new(1.0, 2.0);
        let x2 = OmegaPoint::new(0.0, -1.0);
        assert!((midpoint(x1, x2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((cost_pair(x1, x2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            cost_c(OmegaPoint::new(1.0, 0.0), 0.0),
            Err(Error::CostUndefined)
        ));
        assert!(matches!(
            midpoint(OmegaPoint::new(1.0, 0.0), x2),
            Err(Error::CostUndefined)
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        fn point() -> impl Strategy<Value = OmegaPoint> {
            (-5.0f64..5.0, 0.05f64..4.0, any::<bool>())
                .prop_map(|(h, d, neg)| OmegaPoint::new(h, if neg { -d } else { d }))
        }

        proptest! {
            #[test]
            fn pair_cost_splits_at_midpoint(x1 in point(), x2 in point()) {
                let m = midpoint(x1, x2).unwrap();
                let split = cost_c(x1, m).unwrap() + cost_c(x2, m).unwrap();
                let whole = cost_pair(x1, x2).unwrap();
                prop_assert!((split - whole).abs() <= 1e-12 * (1.0 + whole));
                prop_assert!((cost_pair(x2, x1).unwrap() - whole).abs() <= 1e-15 * (1.0 + whole));
                // grid minimisation of z ↦ c(x1,z)+c(x2,z)
                let lo = x1.h.min(x2.h) - 1.0;
                let grid_min = (0..=4000)
                    .map(|k| lo + k as f64 * ((x1.h - x2.h).abs() + 2.0) / 4000.0)
                    .map(|z| cost_c(x1, z).unwrap() + cost_c(x2, z).unwrap())
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(whole <= grid_min + 1e-12);
            }

            #[test]
            fn never_worse_than_a_feasible_plan(n in 1usize..7, m in 1usize..7, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let c = CostMatrix::new(n, m, (0..n * m).map(|_| rng.gen_range(0.0..3.0)).collect()).unwrap();
                let a = vec![1.0 / n as f64; n];
                let b = vec![1.0 / m as f64; m];
                let plan = solve_ot(&a, &b, &c).unwrap();
                // the independent (product) coupling is always feasible
                let product: f64 = (0..n).flat_map(|i| (0..m).map(move |j| (i, j)))
                    .map(|(i, j)| a[i] * b[j] * c.get(i, j)).sum();
                prop_assert!(plan.cost <= product + 1e-12);
            }
        }
    }
}

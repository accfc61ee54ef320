//! Undirected binary graphs, block partitions, and block-level sufficient
//! statistics.

use crate::error::{Error, Result};

/// Symmetric binary adjacency over `n_v` vertices with an explicit
/// self-loop convention.
///
/// When `loops_allowed` is false the diagonal is identically zero and the
/// admissible vertex pairs are the C(n_v, 2) off-diagonal ones; otherwise
/// the diagonal participates and there are C(n_v, 2) + n_v admissible
/// pairs. The canonical ordering of pairs (used for edge-indicator vectors
/// and everything derived from them) is the row-major upper triangle,
/// diagonal included exactly when loops are allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n_v: usize,
    loops_allowed: bool,
    adj: Vec<u8>,
}

impl Graph {
    /// An edgeless graph.
    pub fn empty(n_v: usize, loops_allowed: bool) -> Result<Self> {
        if n_v == 0 {
            return Err(Error::Domain("graph needs at least one vertex".into()));
        }
        Ok(Self {
            n_v,
            loops_allowed,
            adj: vec![0; n_v * n_v],
        })
    }

    /// The graph with every admissible pair present.
    pub fn complete(n_v: usize, loops_allowed: bool) -> Result<Self> {
        let mut g = Self::empty(n_v, loops_allowed)?;
        for i in 0..n_v {
            for j in i..n_v {
                if i == j && !loops_allowed {
                    continue;
                }
                g.set_edge(i, j, true);
            }
        }
        Ok(g)
    }

    /// Builds a graph from a full adjacency matrix, validating symmetry,
    /// 0/1 entries, and the loop convention.
    pub fn from_adjacency(rows: &[Vec<u8>], loops_allowed: bool) -> Result<Self> {
        let n_v = rows.len();
        let mut g = Self::empty(n_v, loops_allowed)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_v {
                return Err(Error::Domain(format!(
                    "adjacency row {} has length {}, expected {}",
                    i + 1,
                    row.len(),
                    n_v
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::Domain(format!(
                        "adjacency entry ({},{}) is {}, expected 0 or 1",
                        i + 1,
                        j + 1,
                        v
                    )));
                }
                if v != rows[j][i] {
                    return Err(Error::Domain(format!(
                        "adjacency not symmetric at ({},{})",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && v == 1 && !loops_allowed {
                    return Err(Error::Domain(format!(
                        "self-loop at vertex {} but loops are disallowed",
                        i + 1
                    )));
                }
            }
            for (j, &v) in row.iter().enumerate() {
                if v == 1 && j >= i {
                    g.set_edge(i, j, true);
                }
            }
        }
        Ok(g)
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn loops_allowed(&self) -> bool {
        self.loops_allowed
    }

    /// Sets or clears the undirected edge {i, j} (both triangle entries).
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        assert!(i < self.n_v && j < self.n_v);
        assert!(i != j || self.loops_allowed, "self-loops are disallowed");
        let v = present as u8;
        self.adj[i * self.n_v + j] = v;
        self.adj[j * self.n_v + i] = v;
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n_v + j] == 1
    }

    /// Number of admissible vertex pairs under the loop convention.
    pub fn pair_count(&self) -> u64 {
        let nv = self.n_v as u64;
        if self.loops_allowed {
            nv * (nv + 1) / 2
        } else {
            nv * (nv - 1) / 2
        }
    }

    /// (possible edges, observed edges) under the loop convention.
    pub fn edge_count(&self) -> (u64, u64) {
        let s = self.pairs().filter(|&(i, j)| self.has_edge(i, j)).count() as u64;
        (self.pair_count(), s)
    }

    /// Admissible pairs (i ≤ j) in canonical row-major upper-triangle order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n_v = self.n_v;
        let loops = self.loops_allowed;
        (0..n_v).flat_map(move |i| {
            let start = if loops { i } else { i + 1 };
            (start..n_v).map(move |j| (i, j))
        })
    }

    /// Edge indicators a over admissible pairs, in canonical order.
    pub fn edge_indicators(&self) -> Vec<u8> {
        self.pairs().map(|(i, j)| self.has_edge(i, j) as u8).collect()
    }

    pub fn is_complete(&self) -> bool {
        let (n, s) = self.edge_count();
        n == s
    }

    pub fn is_edgeless(&self) -> bool {
        self.edge_count().1 == 0
    }

    /// Copy of the graph with self-loops removed and the convention flag
    /// set to exclude the diagonal.
    pub fn without_loops(&self) -> Graph {
        let mut g = Graph::empty(self.n_v, false).expect("n_v validated");
        for (i, j) in self.pairs() {
            if i != j && self.has_edge(i, j) {
                g.set_edge(i, j, true);
            }
        }
        g
    }

    /// Dense float copy of the adjacency matrix.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n_v, self.n_v, |i, j| self.adj[i * self.n_v + j] as f64)
    }
}

/// A partition of the vertices into K blocks, labeled 1..=K. Every label
/// must occur at least once; vertices of a block need not be contiguous.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl BlockAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("block count must be positive".into()));
        }
        if labels.is_empty() {
            return Err(Error::Domain("assignment covers no vertices".into()));
        }
        let mut seen = vec![false; k];
        for (v, &lab) in labels.iter().enumerate() {
            if lab == 0 || lab > k {
                return Err(Error::Domain(format!(
                    "vertex {} has label {}, expected 1..={}",
                    v + 1,
                    lab,
                    k
                )));
            }
            seen[lab - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::Domain(format!("block {} is empty", missing + 1)));
        }
        Ok(Self { labels, k })
    }

    /// All vertices in one block.
    pub fn single_block(n_v: usize) -> Self {
        Self {
            labels: vec![1; n_v],
            k: 1,
        }
    }

    /// Contiguous balanced partition: the first blocks take one extra
    /// vertex when n_v is not divisible by k.
    pub fn contiguous_balanced(n_v: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n_v {
            return Err(Error::Domain(format!(
                "cannot split {n_v} vertices into {k} nonempty blocks"
            )));
        }
        let base = n_v / k;
        let extra = n_v % k;
        let mut labels = Vec::with_capacity(n_v);
        for b in 0..k {
            let size = base + usize::from(b < extra);
            labels.extend(std::iter::repeat(b + 1).take(size));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_v(&self) -> usize {
        self.labels.len()
    }

    /// Block label of vertex `v` (0-based vertex index, 1-based label).
    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &lab in &self.labels {
            sizes[lab - 1] += 1;
        }
        sizes
    }

    /// Fraction of vertices on which the two assignments agree, maximized
    /// over relabelings of `other` (exact for small K via permutations).
    pub fn agreement(&self, other: &BlockAssignment) -> f64 {
        assert_eq!(self.n_v(), other.n_v());
        let k = self.k.max(other.k);
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = 0usize;
        permute(&mut perm, 0, &mut |p| {
            let matches = self
                .labels
                .iter()
                .zip(other.labels.iter())
                .filter(|&(&a, &b)| a - 1 == p[b - 1])
                .count();
            best = best.max(matches);
        });
        best as f64 / self.n_v() as f64
    }
}

fn permute(p: &mut Vec<usize>, i: usize, visit: &mut impl FnMut(&[usize])) {
    if i == p.len() {
        visit(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, visit);
        p.swap(i, j);
    }
}

/// Block-pair edge and non-edge counts: the sufficient statistics of the
/// rank-1 blockmodel likelihood. `S[k][k']` counts present edges between
/// blocks k and k' and `O[k][k']` the absent admissible pairs, each
/// unordered pair counted once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockStats {
    k: usize,
    s: Vec<u64>,
    o: Vec<u64>,
    sizes: Vec<usize>,
    loops_allowed: bool,
}

impl BlockStats {
    /// Extracts block statistics from a graph under a partition.
    pub fn from_graph(g: &Graph, assignment: &BlockAssignment) -> Result<Self> {
        if assignment.n_v() != g.n_v() {
            return Err(Error::Domain(format!(
                "assignment covers {} vertices but the graph has {}",
                assignment.n_v(),
                g.n_v()
            )));
        }
        let k = assignment.k();
        let mut s = vec![0u64; k * k];
        let mut o = vec![0u64; k * k];
        for (i, j) in g.pairs() {
            let (a, b) = (assignment.label(i) - 1, assignment.label(j) - 1);
            let (lo, hi) = (a.min(b), a.max(b));
            if g.has_edge(i, j) {
                s[lo * k + hi] += 1;
            } else {
                o[lo * k + hi] += 1;
            }
        }
        for lo in 0..k {
            for hi in lo + 1..k {
                s[hi * k + lo] = s[lo * k + hi];
                o[hi * k + lo] = o[lo * k + hi];
            }
        }
        Ok(Self {
            k,
            s,
            o,
            sizes: assignment.block_sizes(),
            loops_allowed: g.loops_allowed(),
        })
    }

    /// Directly assembles statistics (used by closed-form constructions
    /// and tests); validates the pair-count identity S + O = pairs.
    pub fn from_counts(
        s: Vec<Vec<u64>>,
        o: Vec<Vec<u64>>,
        sizes: Vec<usize>,
        loops_allowed: bool,
    ) -> Result<Self> {
        let k = sizes.len();
        if s.len() != k || o.len() != k || s.iter().chain(o.iter()).any(|r| r.len() != k) {
            return Err(Error::Domain("block count mismatch in S/O matrices".into()));
        }
        let mut flat_s = vec![0u64; k * k];
        let mut flat_o = vec![0u64; k * k];
        for i in 0..k {
            for j in 0..k {
                if s[i][j] != s[j][i] || o[i][j] != o[j][i] {
                    return Err(Error::Domain("S and O must be symmetric".into()));
                }
                flat_s[i * k + j] = s[i][j];
                flat_o[i * k + j] = o[i][j];
            }
        }
        let stats = Self {
            k,
            s: flat_s,
            o: flat_o,
            sizes,
            loops_allowed,
        };
        for i in 0..k {
            for j in i..k {
                let pairs = stats.pair_count_between(i, j);
                if stats.s(i, j) + stats.o(i, j) != pairs {
                    return Err(Error::Domain(format!(
                        "S+O between blocks {} and {} is {}, expected {}",
                        i + 1,
                        j + 1,
                        stats.s(i, j) + stats.o(i, j),
                        pairs
                    )));
                }
            }
        }
        Ok(stats)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn loops_allowed(&self) -> bool {
        self.loops_allowed
    }

    /// Edge count between blocks i and j (0-based).
    pub fn s(&self, i: usize, j: usize) -> u64 {
        self.s[i * self.k + j]
    }

    /// Non-edge count between blocks i and j (0-based).
    pub fn o(&self, i: usize, j: usize) -> u64 {
        self.o[i * self.k + j]
    }

    /// Admissible pair count between blocks i and j.
    pub fn pair_count_between(&self, i: usize, j: usize) -> u64 {
        if i == j {
            let n = self.sizes[i] as u64;
            if self.loops_allowed {
                n * (n + 1) / 2
            } else {
                n * (n - 1) / 2
            }
        } else {
            self.sizes[i] as u64 * self.sizes[j] as u64
        }
    }

    /// Likelihood exponent of the i-th latent coordinate: 2 S_ii + Σ_{j≠i} S_ij.
    pub fn edge_exponent(&self, i: usize) -> u64 {
        let mut e = 2 * self.s(i, i);
        for j in 0..self.k {
            if j != i {
                e += self.s(i, j);
            }
        }
        e
    }

    pub fn total_edges(&self) -> u64 {
        let mut t = 0;
        for i in 0..self.k {
            for j in i..self.k {
                t += self.s(i, j);
            }
        }
        t
    }

    pub fn total_nonedges(&self) -> u64 {
        let mut t = 0;
        for i in 0..self.k {
            for j in i..self.k {
                t += self.o(i, j);
            }
        }
        t
    }

    /// Smallest S+O over block pairs; small exposures mean the observed
    /// data barely constrains the corresponding latent coordinates.
    pub fn min_exposure(&self) -> u64 {
        let mut m = u64::MAX;
        for i in 0..self.k {
            for j in i..self.k {
                m = m.min(self.s(i, j) + self.o(i, j));
            }
        }
        m
    }
}

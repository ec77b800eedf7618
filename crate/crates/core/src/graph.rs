//! Small simple graphs stored as per-vertex neighbour bitsets.
//!
//! Every graph in this crate has at most [`MAX_VERTICES`] vertices, so one
//! `u16` per vertex holds its whole neighbourhood.

use std::fmt;

use crate::canon::{canonical_form, CanonicalLabel};
use crate::error::{Error, Result};

pub const MAX_VERTICES: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: [u16; MAX_VERTICES],
}

impl Graph {
    /// Builds a graph from an explicit edge list.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::TooManyVertices(n));
        }
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::Loop(u));
            }
            if g.has_edge(u, v) {
                return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    /// Edgeless graph on `n` vertices. Panics if `n > 16`.
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_VERTICES, "graph too large: {n}");
        Graph { n, adj: [0; MAX_VERTICES] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn masks(&self) -> &[u16] {
        &self.adj[..self.n]
    }

    pub fn neighbors(&self, v: usize) -> u16 {
        self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub(crate) fn add_edge(&mut self, u: usize, v: usize) {
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.masks().iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Adds one vertex adjacent to the vertices in `nbhd`.
    pub fn with_vertex(&self, nbhd: u16) -> Graph {
        let v = self.n;
        let mut g = *self;
        g.n += 1;
        assert!(g.n <= MAX_VERTICES);
        g.adj[v] = nbhd;
        for u in 0..self.n {
            if nbhd >> u & 1 == 1 {
                g.adj[u] |= 1 << v;
            }
        }
        g
    }

    /// Subgraph induced on `vertices`, relabelled in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut g = Graph::empty(vertices.len());
        for (i, &u) in vertices.iter().enumerate() {
            for (j, &v) in vertices.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Subgraph induced on the vertex set `mask`, in increasing vertex order.
    pub fn induced_mask(&self, mask: u32) -> Graph {
        self.induced(&bits(mask))
    }

    /// Graph with vertex `v` renamed to `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let mut g = Graph::empty(self.n);
        for (u, v) in self.edges() {
            g.add_edge(perm[u], perm[v]);
        }
        g
    }

    /// Removes vertex `v`, shifting higher indices down by one.
    pub fn without_vertex(&self, v: usize) -> Graph {
        let keep: Vec<usize> = (0..self.n).filter(|&u| u != v).collect();
        self.induced(&keep)
    }

    pub fn is_independent(&self, set: u16) -> bool {
        bits(set as u32).into_iter().all(|v| self.adj[v] & set == 0)
    }

    pub fn is_triangle_free(&self) -> bool {
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.has_edge(u, v) && self.adj[u] & self.adj[v] != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Number of 5-cycle subgraphs, each counted once.
    pub fn count_c5(&self) -> u64 {
        let mut count = 0u64;
        for s in 0..self.n {
            let above: u16 = !((1u32 << (s + 1)) - 1) as u16;
            let first = self.adj[s] & above;
            for a in bits(first as u32) {
                for b in bits((self.adj[a] & above & !(1 << a)) as u32) {
                    for c in bits((self.adj[b] & above & !(1 << a | 1 << b)) as u32) {
                        // d closes the cycle back to s; a < d fixes the direction.
                        let ds = self.adj[c] & first & !(1 << a | 1 << b | 1 << c);
                        count += bits(ds as u32).into_iter().filter(|&d| d > a).count() as u64;
                    }
                }
            }
        }
        count
    }

    pub fn canonical_form(&self) -> CanonicalLabel {
        canonical_form(self)
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.n).map(|v| self.degree(v)).collect();
        d.sort_unstable();
        d
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph({}, {:?})", self.n, self.edges())
    }
}

/// Indices of the set bits of `mask`, ascending.
pub fn bits(mut mask: u32) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    out
}

/// All `k`-subsets of `0..n` as bitmasks, in increasing numeric order.
pub fn subsets(n: usize, k: usize) -> impl Iterator<Item = u32> {
    let limit = 1u64 << n;
    let start = if k == 0 { 0u64 } else { (1u64 << k) - 1 };
    let mut next = if k <= n { Some(start) } else { None };
    std::iter::from_fn(move || {
        let cur = next?;
        if cur >= limit && !(cur == 0 && k == 0) {
            return None;
        }
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < limit).then_some(nxt)
        };
        Some(cur as u32)
    })
}

/// Number of vertex subsets `S` with `G[S]` isomorphic to `H`.
pub fn count_induced(g: &Graph, h: &Graph) -> u64 {
    let k = h.n();
    if k > g.n() {
        return 0;
    }
    let target_edges = h.edge_count();
    let target_degrees = h.degree_sequence();
    let target = h.canonical_form();
    subsets(g.n(), k)
        .filter(|&mask| {
            let sub = g.induced_mask(mask);
            sub.edge_count() == target_edges
                && sub.degree_sequence() == target_degrees
                && sub.canonical_form().bytes == target.bytes
        })
        .count() as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowupSpec {
    pub base: Graph,
    pub sizes: Vec<usize>,
}

/// Replaces vertex `i` of the base by an independent set of `sizes[i]`
/// vertices and every edge by a complete bipartite graph. Parts are laid out
/// consecutively in base-vertex order.
pub fn blowup(spec: &BlowupSpec) -> Result<Graph> {
    let base = &spec.base;
    if spec.sizes.len() != base.n() {
        return Err(Error::BlowupShape { base: base.n(), parts: spec.sizes.len() });
    }
    let total: usize = spec.sizes.iter().sum();
    if total > MAX_VERTICES {
        return Err(Error::TooManyVertices(total));
    }
    let part: Vec<usize> = spec.sizes.iter().enumerate().flat_map(|(i, &s)| std::iter::repeat_n(i, s)).collect();
    let mut g = Graph::empty(total);
    for u in 0..total {
        for v in u + 1..total {
            if base.has_edge(part[u], part[v]) {
                g.add_edge(u, v);
            }
        }
    }
    Ok(g)
}

pub fn cycle(n: usize) -> Graph {
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::new(n, &edges).expect("cycle")
}

pub fn complete(n: usize) -> Graph {
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v);
        }
    }
    g
}

pub fn c5() -> Graph {
    cycle(5)
}

/// C5 with one vertex duplicated.
pub fn c5_plus() -> Graph {
    blowup(&BlowupSpec { base: c5(), sizes: vec![2, 1, 1, 1, 1] }).expect("C5+")
}

/// Part sizes of the balanced blow-up of C5 on `n` vertices, larger parts first.
pub fn balanced_sizes(n: usize) -> Vec<usize> {
    (0..5).map(|i| n / 5 + usize::from(i < n % 5)).collect()
}

pub fn balanced_blowup_c5(n: usize) -> Result<Graph> {
    blowup(&BlowupSpec { base: c5(), sizes: balanced_sizes(n) })
}

/// Balanced blow-ups of C5 on `n` vertices for every arrangement of the part
/// sizes around the cycle, one per isomorphism class. For `n % 5` in `{2, 3}`
/// there are two classes, otherwise one.
pub fn balanced_blowup_arrangements(n: usize) -> Vec<Graph> {
    let sizes = balanced_sizes(n);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    // Each mask picks which cycle positions receive the larger parts.
    let big = n % 5;
    for mask in subsets(5, big) {
        let arranged: Vec<usize> = (0..5).map(|i| sizes[4] + (mask >> i & 1) as usize).collect();
        let g = blowup(&BlowupSpec { base: c5(), sizes: arranged }).expect("n <= 16");
        if seen.insert(g.canonical_form().bytes) {
            out.push(g);
        }
    }
    out
}

/// The Moebius ladder on 8 vertices (Wagner graph): the 8-cycle plus its four
/// long diagonals.
pub fn mobius_ladder_8() -> Graph {
    let mut edges: Vec<(usize, usize)> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
    edges.extend((0..4).map(|i| (i, i + 4)));
    Graph::new(8, &edges).expect("ML8")
}

pub fn petersen() -> Graph {
    let mut edges: Vec<(usize, usize)> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
    edges.extend((0..5).map(|i| (5 + i, 5 + (i + 2) % 5)));
    edges.extend((0..5).map(|i| (i, i + 5)));
    Graph::new(10, &edges).expect("Petersen")
}

/// Product of the five balanced part sizes, the claimed maximum number of
/// 5-cycles in a triangle-free graph on `n` vertices.
pub fn c5_product_formula(n: u64) -> u64 {
    (0..5).map(|i| (n + i) / 5).product()
}

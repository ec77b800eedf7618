//! Canonical labelling by partition refinement and individualisation.
//!
//! The search tree is the usual one: refine an ordered partition to an
//! equitable one, individualise each vertex of the first non-singleton cell,
//! recurse. Children that lie in the same orbit of the pointwise stabiliser of
//! the current prefix are explored once; orbit membership is decided by an
//! explicit isomorphism search between the two child partitions. The orbit
//! sizes met along the leftmost path multiply to the automorphism group order.

use crate::graph::{bits, Graph};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalLabel {
    /// `[n, roots, packed upper triangle of the canonical adjacency matrix]`.
    pub bytes: Vec<u8>,
    pub aut_count: u64,
}

/// Canonical labelling together with the permutation that produced it.
#[derive(Clone, Debug)]
pub struct Canonical {
    pub label: CanonicalLabel,
    /// `labeling[v]` is the canonical position of vertex `v`.
    pub labeling: Vec<usize>,
}

impl Canonical {
    /// The graph relabelled into canonical order.
    pub fn graph(&self, g: &Graph) -> Graph {
        g.permuted(&self.labeling)
    }
}

pub fn canonical_form(g: &Graph) -> CanonicalLabel {
    canonical(g, &[]).label
}

/// Canonical form of `g` with the ordered root tuple `roots` kept fixed:
/// root `i` always receives canonical position `i`.
pub fn canonical_form_rooted(g: &Graph, roots: &[usize]) -> CanonicalLabel {
    canonical(g, roots).label
}

pub fn canonical(g: &Graph, roots: &[usize]) -> Canonical {
    let n = g.n();
    let mut cells: Vec<u16> = roots.iter().map(|&r| 1u16 << r).collect();
    let root_mask: u16 = cells.iter().fold(0, |a, &c| a | c);
    let full: u16 = if n == 16 { u16::MAX } else { (1u16 << n) - 1 };
    let rest = full & !root_mask;
    if rest != 0 {
        cells.push(rest);
    }
    let mut search = Search { g, best: None, aut: 1 };
    if n > 0 {
        search.node(cells, true);
    }
    let (code, labeling) = search.best.unwrap_or((0, Vec::new()));
    let pairs = n * n.saturating_sub(1) / 2;
    let nbytes = pairs.div_ceil(8);
    let shifted = if pairs == 0 { 0 } else { code << (128 - pairs) };
    let mut bytes = vec![n as u8, roots.len() as u8];
    bytes.extend_from_slice(&shifted.to_be_bytes()[..nbytes]);
    Canonical { label: CanonicalLabel { bytes, aut_count: search.aut }, labeling }
}

struct Search<'a> {
    g: &'a Graph,
    best: Option<(u128, Vec<usize>)>,
    aut: u64,
}

impl Search<'_> {
    fn node(&mut self, mut cells: Vec<u16>, leftmost: bool) {
        refine(self.g, &mut cells);
        let Some(t) = cells.iter().position(|c| c.count_ones() > 1) else {
            self.leaf(&cells);
            return;
        };
        let mut reps: Vec<(Vec<u16>, u64)> = Vec::new();
        for w in bits(cells[t] as u32) {
            let mut child = individualize(&cells, t, w);
            refine(self.g, &mut child);
            match reps.iter_mut().find(|(rep, _)| equivalent(self.g, rep, &child)) {
                Some((_, size)) => *size += 1,
                None => reps.push((child, 1)),
            }
        }
        if leftmost {
            self.aut *= reps[0].1;
        }
        for (i, (child, _)) in reps.into_iter().enumerate() {
            self.node(child, leftmost && i == 0);
        }
    }

    fn leaf(&mut self, cells: &[u16]) {
        let order: Vec<usize> = cells.iter().map(|c| c.trailing_zeros() as usize).collect();
        let code = code_of(self.g, &order);
        if self.best.as_ref().is_none_or(|(b, _)| code > *b) {
            let mut labeling = vec![0; order.len()];
            for (pos, &v) in order.iter().enumerate() {
                labeling[v] = pos;
            }
            self.best = Some((code, labeling));
        }
    }
}

/// Upper triangle of the adjacency matrix in graph6 column order, most
/// significant bit first. `order[i]` is the vertex placed at position `i`.
fn code_of(g: &Graph, order: &[usize]) -> u128 {
    let mut code = 0u128;
    for j in 1..order.len() {
        for i in 0..j {
            code = code << 1 | u128::from(g.has_edge(order[i], order[j]));
        }
    }
    code
}

fn individualize(cells: &[u16], t: usize, v: usize) -> Vec<u16> {
    let mut out = Vec::with_capacity(cells.len() + 1);
    out.extend_from_slice(&cells[..t]);
    out.push(1 << v);
    out.push(cells[t] & !(1 << v));
    out.extend_from_slice(&cells[t + 1..]);
    out
}

/// Refines an ordered partition to the coarsest equitable refinement, splitting
/// cells by neighbour counts into earlier cells. The result depends only on
/// the isomorphism type of `(g, cells)`.
pub(crate) fn refine(g: &Graph, cells: &mut Vec<u16>) {
    'restart: loop {
        for s in 0..cells.len() {
            let splitter = cells[s];
            for c in 0..cells.len() {
                let cell = cells[c];
                if cell.count_ones() < 2 {
                    continue;
                }
                let mut groups = [0u16; 17];
                for v in bits(cell as u32) {
                    groups[(g.neighbors(v) & splitter).count_ones() as usize] |= 1 << v;
                }
                let parts: Vec<u16> = groups.into_iter().filter(|&m| m != 0).collect();
                if parts.len() > 1 {
                    cells.splice(c..=c, parts);
                    continue 'restart;
                }
            }
        }
        return;
    }
}

/// Whether some automorphism of `g` maps the ordered partition `a` onto `b`
/// cell by cell.
fn equivalent(g: &Graph, a: &[u16], b: &[u16]) -> bool {
    if !same_shape(g, a, b) {
        return false;
    }
    let Some(t) = a.iter().position(|c| c.count_ones() > 1) else {
        return is_automorphism(g, a, b);
    };
    let v = a[t].trailing_zeros() as usize;
    let mut a1 = individualize(a, t, v);
    refine(g, &mut a1);
    bits(b[t] as u32).into_iter().any(|w| {
        let mut b1 = individualize(b, t, w);
        refine(g, &mut b1);
        equivalent(g, &a1, &b1)
    })
}

fn same_shape(g: &Graph, a: &[u16], b: &[u16]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.iter().zip(b).any(|(x, y)| x.count_ones() != y.count_ones()) {
        return false;
    }
    // Equitable partitions: neighbour counts between cells are constant.
    for i in 0..a.len() {
        let va = a[i].trailing_zeros() as usize;
        let vb = b[i].trailing_zeros() as usize;
        for j in 0..a.len() {
            if (g.neighbors(va) & a[j]).count_ones() != (g.neighbors(vb) & b[j]).count_ones() {
                return false;
            }
        }
    }
    true
}

fn is_automorphism(g: &Graph, a: &[u16], b: &[u16]) -> bool {
    let mut map = vec![0usize; g.n()];
    for (x, y) in a.iter().zip(b) {
        map[x.trailing_zeros() as usize] = y.trailing_zeros() as usize;
    }
    (0..g.n()).all(|u| (0..g.n()).all(|v| g.has_edge(u, v) == g.has_edge(map[u], map[v])))
}

//! Isomorph-free generation of triangle-free graphs by canonical augmentation.
//!
//! A child is its parent plus one vertex whose neighbourhood is an independent
//! set, so every child is triangle-free. A child is accepted only when the new
//! vertex lies in the automorphism orbit of the child's canonical deletion
//! vertex; isomorphic accepted children then share a parent, and a per-parent
//! set removes the remaining duplicates.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::canon::{canonical, canonical_form_rooted, CanonicalLabel};
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const MAX_ENUMERATION: usize = 12;

/// Depth at which the parallel traversal splits the tree into independent jobs.
const SPLIT_DEPTH: usize = 6;

/// Visits one representative of every isomorphism class of triangle-free
/// graphs on `n` vertices and returns the number of classes.
pub fn enumerate_triangle_free(n: usize, mut visit: impl FnMut(&Graph)) -> Result<u64> {
    if n > MAX_ENUMERATION {
        return Err(Error::EnumerationLimit(n));
    }
    let mut count = 0;
    extend(&Graph::empty(0), n, &mut |g| {
        count += 1;
        visit(g)
    });
    Ok(count)
}

/// Parallel variant; `visit` may be called concurrently from several threads.
pub fn enumerate_triangle_free_par(n: usize, visit: impl Fn(&Graph) + Sync) -> Result<u64> {
    if n > MAX_ENUMERATION {
        return Err(Error::EnumerationLimit(n));
    }
    let mut frontier = Vec::new();
    extend(&Graph::empty(0), n.min(SPLIT_DEPTH), &mut |g| frontier.push(*g));
    Ok(frontier
        .par_iter()
        .map(|root| {
            let mut count = 0u64;
            extend(root, n, &mut |g| {
                count += 1;
                visit(g)
            });
            count
        })
        .sum())
}

fn extend(g: &Graph, target: usize, visit: &mut dyn FnMut(&Graph)) {
    if g.n() == target {
        visit(g);
        return;
    }
    let mut seen = HashSet::new();
    for nbhd in 0..(1u32 << g.n()) {
        let nbhd = nbhd as u16;
        if !g.is_independent(nbhd) {
            continue;
        }
        let child = g.with_vertex(nbhd);
        if let Some(label) = accept(&child) {
            if seen.insert(label.bytes) {
                extend(&child, target, visit);
            }
        }
    }
}

/// Canonical-deletion test for the last vertex of `child`. Returns the
/// child's canonical label when accepted.
fn accept(child: &Graph) -> Option<CanonicalLabel> {
    let v = child.n() - 1;
    let min_degree = (0..child.n()).map(|u| child.degree(u)).min()?;
    if child.degree(v) != min_degree {
        return None;
    }
    let canon = canonical(child, &[]);
    // Deletion vertex: minimum degree, latest canonical position.
    let m = (0..child.n()).filter(|&u| child.degree(u) == min_degree).max_by_key(|&u| canon.labeling[u])?;
    if m == v || canonical_form_rooted(child, &[v]).bytes == canonical_form_rooted(child, &[m]).bytes {
        Some(canon.label)
    } else {
        None
    }
}

/// All triangle-free graphs on `n` vertices, canonically relabelled and
/// sorted by canonical bytes.
pub fn triangle_free_classes(n: usize) -> Result<Vec<(CanonicalLabel, Graph)>> {
    let mut out = Vec::new();
    enumerate_triangle_free(n, |g| {
        let c = canonical(g, &[]);
        out.push((c.label.clone(), c.graph(g)));
    })?;
    out.sort_by(|a, b| a.0.bytes.cmp(&b.0.bytes));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Winner {
    pub label: CanonicalLabel,
    /// The winner relabelled into canonical order.
    pub graph: Graph,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    pub n: usize,
    pub total: u64,
    pub max_c5: u64,
    /// Every class attaining `max_c5`, sorted by canonical bytes.
    pub winners: Vec<Winner>,
}

#[derive(Default)]
struct Tally {
    total: u64,
    max_c5: u64,
    winners: Vec<Graph>,
}

impl Tally {
    fn add(&mut self, g: &Graph) {
        self.total += 1;
        let c = g.count_c5();
        if self.total == 1 || c > self.max_c5 {
            self.max_c5 = c;
            self.winners.clear();
        }
        if c == self.max_c5 {
            self.winners.push(*g);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        if other.total == 0 {
            return self;
        }
        if self.total == 0 || other.max_c5 > self.max_c5 {
            self.max_c5 = other.max_c5;
            self.winners = other.winners;
        } else if other.max_c5 == self.max_c5 {
            self.winners.extend(other.winners);
        }
        self.total += other.total;
        self
    }

    fn into_census(self, n: usize) -> Census {
        let mut winners: Vec<Winner> = self
            .winners
            .iter()
            .map(|g| {
                let c = canonical(g, &[]);
                Winner { graph: c.graph(g), label: c.label }
            })
            .collect();
        winners.sort_by(|a, b| a.label.bytes.cmp(&b.label.bytes));
        Census { n, total: self.total, max_c5: self.max_c5, winners }
    }
}

/// Exact maximum number of 5-cycles over triangle-free graphs on `n`
/// vertices, with every maximiser up to isomorphism.
pub fn extremal_c5(n: usize) -> Result<Census> {
    let mut tally = Tally::default();
    enumerate_triangle_free(n, |g| tally.add(g))?;
    Ok(tally.into_census(n))
}

/// Same result as [`extremal_c5`], traversing the tree on the rayon pool.
pub fn extremal_c5_par(n: usize) -> Result<Census> {
    if n > MAX_ENUMERATION {
        return Err(Error::EnumerationLimit(n));
    }
    let mut frontier = Vec::new();
    extend(&Graph::empty(0), n.min(SPLIT_DEPTH), &mut |g| frontier.push(*g));
    let tally = frontier
        .par_iter()
        .map(|root| {
            let mut t = Tally::default();
            extend(root, n, &mut |g| t.add(g));
            t
        })
        .reduce(Tally::default, Tally::merge);
    Ok(tally.into_census(n))
}

//! Types, flags and the level-`l` coefficient tables behind the flag-algebra
//! inequalities: induced-density expansions, rooted pair densities, and the
//! unlabelled expansion of `x^T M x`.
//!
//! Unlabelling convention: for a level-`l` graph `F`, the coefficient of a
//! square term averages over *all* injective `k`-tuples of vertices of `F`;
//! tuples whose induced labelled graph is not the type contribute zero.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::canon::{canonical, canonical_form_rooted, CanonicalLabel};
use crate::enumerate::triangle_free_classes;
use crate::error::{Error, Result};
use crate::graph::{bits, count_induced, subsets, Graph};
use crate::rational::Rational;

pub const MAX_LEVEL: usize = 8;

/// A fully labelled triangle-free graph; vertex `i` carries label `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Type {
    sigma: Graph,
}

impl Type {
    pub fn new(sigma: Graph) -> Result<Self> {
        if !sigma.is_triangle_free() {
            return Err(Error::Precondition("type must be triangle-free".into()));
        }
        Ok(Type { sigma })
    }

    pub fn sigma(&self) -> &Graph {
        &self.sigma
    }

    pub fn k(&self) -> usize {
        self.sigma.n()
    }

    /// The labelling of this type's isomorphism class chosen by the canonical
    /// form; types in the same class give identical square cones.
    pub fn canonical_representative(&self) -> Type {
        let c = canonical(&self.sigma, &[]);
        Type { sigma: c.graph(&self.sigma) }
    }
}

/// A triangle-free graph with an ordered tuple of distinct root vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Flag {
    graph: Graph,
    roots: Vec<usize>,
}

impl Flag {
    pub fn new(graph: Graph, roots: Vec<usize>) -> Result<Self> {
        for (i, &r) in roots.iter().enumerate() {
            if r >= graph.n() {
                return Err(Error::VertexOutOfRange { vertex: r, n: graph.n() });
            }
            if roots[..i].contains(&r) {
                return Err(Error::RootMismatch(format!("root {r} repeated")));
            }
        }
        if !graph.is_triangle_free() {
            return Err(Error::Precondition("flag graph must be triangle-free".into()));
        }
        Ok(Flag { graph, roots })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn k(&self) -> usize {
        self.roots.len()
    }

    pub fn size(&self) -> usize {
        self.graph.n()
    }

    pub fn flag_type(&self) -> Type {
        Type { sigma: self.graph.induced(&self.roots) }
    }

    /// Isomorphism class respecting root labels.
    pub fn canonical(&self) -> CanonicalLabel {
        canonical_form_rooted(&self.graph, &self.roots)
    }

    /// Canonical relabelling, which puts root `i` at vertex `i`.
    pub fn normalized(&self) -> Flag {
        let c = canonical(&self.graph, &self.roots);
        Flag { graph: c.graph(&self.graph), roots: (0..self.k()).collect() }
    }
}

/// Every triangle-free labelled graph on `k` vertices, ordered by the
/// bitmask of its edge set (pairs in graph6 order).
pub fn enumerate_types(k: usize) -> Vec<Type> {
    let pairs: Vec<(usize, usize)> = (1..k).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    (0..1u32 << pairs.len())
        .filter_map(|mask| {
            let mut g = Graph::empty(k);
            for (b, &(i, j)) in pairs.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    g.add_edge(i, j);
                }
            }
            Type::new(g).ok()
        })
        .collect()
}

/// Index of `t` within [`enumerate_types`]`(t.k())`.
pub fn type_id(t: &Type) -> usize {
    enumerate_types(t.k()).iter().position(|u| u == t).expect("every triangle-free type is listed")
}

/// Representatives of all flag classes of type `t` on `m` vertices, in
/// normalized form (roots `0..k`), sorted by canonical bytes.
pub fn enumerate_flags(t: &Type, m: usize) -> Result<Vec<Flag>> {
    if m < t.k() || m > MAX_LEVEL {
        return Err(Error::Precondition(format!("flags on {m} vertices over a type of size {}", t.k())));
    }
    let roots: Vec<usize> = (0..t.k()).collect();
    let mut level = vec![t.sigma];
    for _ in t.k()..m {
        let mut next: BTreeMap<Vec<u8>, Graph> = BTreeMap::new();
        for g in &level {
            for nbhd in 0..1u32 << g.n() {
                if g.is_independent(nbhd as u16) {
                    let child = g.with_vertex(nbhd as u16);
                    let c = canonical(&child, &roots);
                    next.entry(c.label.bytes.clone()).or_insert_with(|| c.graph(&child));
                }
            }
        }
        level = next.into_values().collect();
    }
    let mut out: Vec<Flag> = level.into_iter().map(|graph| Flag { graph, roots: roots.clone() }).collect();
    out.sort_by_key(Flag::canonical);
    Ok(out)
}

/// The triangle-free graphs on `level` vertices in canonical form, sorted by
/// canonical bytes. This order indexes every density vector at that level.
pub struct LevelBasis {
    pub level: usize,
    pub graphs: Vec<Graph>,
    pub labels: Vec<CanonicalLabel>,
    index: HashMap<Vec<u8>, usize>,
}

impl LevelBasis {
    pub fn get(level: usize) -> Result<&'static LevelBasis> {
        static CACHE: [OnceLock<LevelBasis>; MAX_LEVEL + 1] = [const { OnceLock::new() }; MAX_LEVEL + 1];
        if level > MAX_LEVEL {
            return Err(Error::Precondition(format!("level {level} > {MAX_LEVEL}")));
        }
        Ok(CACHE[level].get_or_init(|| {
            let classes = triangle_free_classes(level).expect("level <= 7");
            let index = classes.iter().enumerate().map(|(i, (l, _))| (l.bytes.clone(), i)).collect();
            let (labels, graphs) = classes.into_iter().unzip();
            LevelBasis { level, graphs, labels, index }
        }))
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn index_of(&self, g: &Graph) -> Option<usize> {
        self.index.get(&g.canonical_form().bytes).copied()
    }
}

/// Coefficients over the level basis, aligned with [`LevelBasis`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityVector {
    pub level: usize,
    pub entries: Vec<Rational>,
}

impl DensityVector {
    pub fn zero(level: usize) -> Result<Self> {
        Ok(DensityVector { level, entries: vec![Rational::zero(); LevelBasis::get(level)?.len()] })
    }

    pub fn get(&self, label: &CanonicalLabel) -> Option<&Rational> {
        let basis = LevelBasis::get(self.level).ok()?;
        basis.index.get(&label.bytes).map(|&i| &self.entries[i])
    }

    /// `sum_F entries[F] * densities[F]`.
    pub fn dot(&self, densities: &[Rational]) -> Rational {
        self.entries.iter().zip(densities).map(|(a, b)| a * b).sum()
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// `c_F = P(|H| random vertices of F induce H)` for each `F` on `level`
/// vertices, so that `d(H) = sum_F c_F d(F)` in every graphon.
pub fn expansion_coefficients(h: &Graph, level: usize) -> Result<DensityVector> {
    if h.n() > level {
        return Err(Error::Precondition(format!("{}-vertex graph expanded at level {level}", h.n())));
    }
    let basis = LevelBasis::get(level)?;
    let total = binomial(level, h.n());
    let entries = basis.graphs.iter().map(|f| Rational::new(BigInt::from(count_induced(f, h)), BigInt::from(total))).collect();
    Ok(DensityVector { level, entries })
}

/// Densities of all level graphs in the graphon of `g`, in basis order.
pub fn level_densities(g: &Graph, level: usize) -> Result<Vec<Rational>> {
    let basis = LevelBasis::get(level)?;
    let profile = crate::density::density_profile(g, level);
    Ok(basis.labels.iter().map(|l| profile.get(&l.bytes).cloned().unwrap_or_else(Rational::zero)).collect())
}

/// Fraction of ordered splits `(S1, S2)` of `V(F) \ theta` with
/// `F[theta + S1] = F1` and `F[theta + S2] = F2` as flags rooted at `theta`.
pub fn pair_density(f1: &Flag, f2: &Flag, f: &Graph, theta: &[usize]) -> Result<Rational> {
    let k = theta.len();
    if f1.k() != k || f2.k() != k || f1.flag_type() != f2.flag_type() {
        return Err(Error::Dimension("flags must share the root type".into()));
    }
    if f1.size() + f2.size() - k != f.n() {
        return Err(Error::Dimension(format!("|F1| + |F2| - k = {} but |F| = {}", f1.size() + f2.size() - k, f.n())));
    }
    if f.induced(theta) != *f1.flag_type().sigma() {
        return Err(Error::RootMismatch("theta does not induce the type".into()));
    }
    let (c1, c2) = (f1.canonical().bytes, f2.canonical().bytes);
    let rest: Vec<usize> = (0..f.n()).filter(|v| !theta.contains(v)).collect();
    let s1 = f1.size() - k;
    let mut hits = 0u64;
    let mut total = 0u64;
    for mask in subsets(rest.len(), s1) {
        total += 1;
        let (a, b) = split(&rest, mask);
        if rooted_bytes(f, theta, &a) == c1 && rooted_bytes(f, theta, &b) == c2 {
            hits += 1;
        }
    }
    Ok(Rational::new(BigInt::from(hits), BigInt::from(total)))
}

fn split(rest: &[usize], mask: u32) -> (Vec<usize>, Vec<usize>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, &v) in rest.iter().enumerate() {
        if mask >> i & 1 == 1 {
            a.push(v);
        } else {
            b.push(v);
        }
    }
    (a, b)
}

fn rooted_bytes(f: &Graph, theta: &[usize], extra: &[usize]) -> Vec<u8> {
    let mut vs = theta.to_vec();
    vs.extend_from_slice(extra);
    canonical_form_rooted(&f.induced(&vs), &(0..theta.len()).collect::<Vec<_>>()).bytes
}

/// Symmetric sparse matrix over flag-basis indices.
pub type SparseSym = BTreeMap<(usize, usize), Rational>;

/// For a type and an ordered flag basis with `|flag| = (level + k)/2`, the
/// matrix `Q_F` for every level graph `F` such that
/// `[[x^T M x]] = sum_F <M, Q_F> d(F)`.
pub fn square_tables(t: &Type, flags: &[Flag], level: usize) -> Result<Vec<SparseSym>> {
    let k = t.k();
    if !(level + k).is_multiple_of(2) {
        return Err(Error::Parity { level, k });
    }
    let m = (level + k) / 2;
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    for (i, fl) in flags.iter().enumerate() {
        if fl.size() != m || fl.flag_type() != *t {
            return Err(Error::Dimension(format!("flag {i} does not have type size {k} and {m} vertices")));
        }
        index.insert(fl.canonical().bytes, i);
    }
    let basis = LevelBasis::get(level)?;
    let tuples = injective_tuples(level, k);
    let splits = binomial(level - k, m - k);
    let denom = BigInt::from(tuples.len() as u64 * splits);
    let tables = basis
        .graphs
        .iter()
        .map(|f| {
            let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
            for theta in &tuples {
                if f.induced(theta) != t.sigma {
                    continue;
                }
                let rest: Vec<usize> = (0..level).filter(|v| !theta.contains(v)).collect();
                let side: HashMap<u32, Option<usize>> = subsets(rest.len(), m - k)
                    .map(|mask| {
                        let (a, _) = split(&rest, mask);
                        (mask, index.get(&rooted_bytes(f, theta, &a)).copied())
                    })
                    .collect();
                let full = (1u32 << rest.len()) - 1;
                for (&mask, &i) in &side {
                    if let (Some(i), Some(&Some(j))) = (i, side.get(&(full & !mask))) {
                        *counts.entry((i, j)).or_insert(0) += 1;
                    }
                }
            }
            counts.into_iter().map(|(ij, c)| (ij, Rational::new(BigInt::from(c), denom.clone()))).collect()
        })
        .collect();
    Ok(tables)
}

/// All ordered `k`-tuples of distinct vertices from `0..n`.
pub fn injective_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !cur.contains(&v) {
                cur.push(v);
                go(n, k, cur, out);
                cur.pop();
            }
        }
    }
    go(n, k, &mut cur, &mut out);
    out
}

/// `<M, Q>` for a dense symmetric `M` and sparse `Q`.
pub fn frobenius(m: &[Vec<Rational>], q: &SparseSym) -> Rational {
    q.iter().map(|(&(i, j), v)| &m[i][j] * v).sum()
}

/// `<A / scale, Q>` for an integer matrix `A`, summed over integers with a
/// single reduction at the end.
pub fn frobenius_integer(a: &[Vec<BigInt>], scale: &BigInt, q: &SparseSym) -> Rational {
    let den = q.values().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
    let sum: BigInt = q.iter().map(|(&(i, j), v)| &a[i][j] * v.numer() * (&den / v.denom())).sum();
    Rational::new(sum, scale * den)
}

/// Level-`level` expansion of the unlabelled square `[[x^T M x]]` of type `t`
/// over the flag basis `flags`.
pub fn sos_coefficients(t: &Type, flags: &[Flag], m: &[Vec<Rational>], level: usize) -> Result<DensityVector> {
    if m.len() != flags.len() || m.iter().any(|row| row.len() != flags.len()) {
        return Err(Error::Dimension(format!("matrix is not {0}x{0}", flags.len())));
    }
    let tables = square_tables(t, flags, level)?;
    Ok(DensityVector { level, entries: tables.iter().map(|q| frobenius(m, q)).collect() })
}

/// Vertex set of a flag's non-root part, as a helper for callers building
/// flags from masks.
pub fn non_roots(f: &Flag) -> Vec<usize> {
    bits(((1u32 << f.size()) - 1) & !f.roots().iter().fold(0u32, |a, &r| a | 1 << r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{c5, c5_plus, complete};
    use crate::rational::{frac, int};

    #[test]
    fn type_counts() {
        assert_eq!(enumerate_types(0).len(), 1);
        assert_eq!(enumerate_types(1).len(), 1);
        assert_eq!(enumerate_types(2).len(), 2);
        assert_eq!(enumerate_types(3).len(), 7);
        assert_eq!(enumerate_types(4).len(), 41);
    }

    #[test]
    fn flag_counts() {
        let vertex = &enumerate_types(1)[0];
        assert_eq!(enumerate_flags(vertex, 2).unwrap().len(), 2);
        let empty = &enumerate_types(0)[0];
        assert_eq!(enumerate_flags(empty, 5).unwrap().len(), 14);
        assert_eq!(enumerate_flags(empty, 6).unwrap().len(), 38);
        assert!(enumerate_flags(vertex, 0).is_err());
    }

    /// Flags over the labelled edge on 3 vertices by brute force: the third
    /// vertex may see root 0, root 1 or neither (both would be a triangle).
    #[test]
    fn edge_type_flags() {
        let edge = Type::new(complete(2)).unwrap();
        let flags = enumerate_flags(&edge, 3).unwrap();
        let mut classes = std::collections::HashSet::new();
        for nbhd in 0..4u16 {
            let g = complete(2).with_vertex(nbhd);
            if g.is_triangle_free() {
                classes.insert(canonical_form_rooted(&g, &[0, 1]).bytes);
            }
        }
        assert_eq!(flags.len(), classes.len());
        assert_eq!(flags.len(), 3);
        // Over the non-edge the third vertex can also see both roots.
        let nonedge = Type::new(Graph::empty(2)).unwrap();
        assert_eq!(enumerate_flags(&nonedge, 3).unwrap().len(), 4);
    }

    #[test]
    fn level_sizes() {
        assert_eq!(LevelBasis::get(5).unwrap().len(), 14);
        assert_eq!(LevelBasis::get(6).unwrap().len(), 38);
        assert!(LevelBasis::get(9).is_err());
    }

    #[test]
    fn expansion_examples() {
        let basis5 = LevelBasis::get(5).unwrap();
        let v = expansion_coefficients(&c5(), 5).unwrap();
        let c5i = basis5.index_of(&c5()).unwrap();
        for (i, e) in v.entries.iter().enumerate() {
            assert_eq!(*e, if i == c5i { int(1) } else { int(0) });
        }
        let v = expansion_coefficients(&c5(), 6).unwrap();
        let plus = LevelBasis::get(6).unwrap().index_of(&c5_plus()).unwrap();
        assert_eq!(v.entries[plus], frac(2, 6));
        let v = expansion_coefficients(&complete(2), 3).unwrap();
        for (g, e) in LevelBasis::get(3).unwrap().graphs.iter().zip(&v.entries) {
            assert_eq!(*e, frac(g.edge_count() as i64, 3));
        }
    }

    #[test]
    fn pair_density_examples() {
        let vertex_type = Type::new(Graph::empty(1)).unwrap();
        let adj = Flag::new(complete(2), vec![0]).unwrap();
        let cherry = Graph::new(3, &[(0, 1), (0, 2)]).unwrap();
        assert_eq!(pair_density(&adj, &adj, &cherry, &[0]).unwrap(), int(1));
        let one_side = Graph::new(3, &[(0, 1)]).unwrap();
        assert_eq!(pair_density(&adj, &adj, &one_side, &[0]).unwrap(), int(0));
        let nonadj = Flag::new(Graph::empty(2), vec![0]).unwrap();
        assert_eq!(pair_density(&adj, &nonadj, &one_side, &[0]).unwrap(), frac(1, 2));
        assert_eq!(adj.flag_type(), vertex_type);
        assert!(pair_density(&adj, &adj, &c5(), &[0]).is_err());
    }

    #[test]
    fn sos_examples() {
        let empty = Type::new(Graph::empty(0)).unwrap();
        let flags = vec![Flag::new(complete(2), vec![]).unwrap()];
        let v = sos_coefficients(&empty, &flags, &[vec![int(0)]], 4).unwrap();
        assert!(v.entries.iter().all(Zero::is_zero));
        // d(edge)^2 at level 4: both halves of a random split are edges.
        let v = sos_coefficients(&empty, &flags, &[vec![int(1)]], 4).unwrap();
        let basis = LevelBasis::get(4).unwrap();
        let c4 = basis.index_of(&crate::graph::cycle(4)).unwrap();
        assert_eq!(v.entries[c4], frac(2, 3));
        let matching = basis.index_of(&Graph::new(4, &[(0, 1), (2, 3)]).unwrap()).unwrap();
        assert_eq!(v.entries[matching], frac(1, 3));
        let vertex = Type::new(Graph::empty(1)).unwrap();
        assert!(matches!(sos_coefficients(&vertex, &[], &[], 6), Err(Error::Parity { .. })));
        let c5flag = vec![Flag::new(c5(), vec![]).unwrap()];
        assert!(matches!(sos_coefficients(&empty, &c5flag, &[vec![int(1)]], 5), Err(Error::Parity { .. })));
        assert!(sos_coefficients(&empty, &flags, &[vec![int(1), int(0)]], 4).is_err());
    }

    #[test]
    fn non_root_vertices() {
        let f = Flag::new(c5(), vec![3, 1]).unwrap();
        assert_eq!(non_roots(&f), vec![0, 2, 4]);
    }
}

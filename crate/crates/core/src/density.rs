//! Exact induced densities in graphons of finite graphs, the closed form of
//! the C5 density of balanced blow-ups, and the arithmetic of the two branches
//! of the stability lemma.
//!
//! The graphon of a graph `G` on `n` vertices splits `[0,1]` into `n` equal
//! parts; a uniformly random point lands in each part with probability `1/n`
//! and two points in the same part are never adjacent. Densities are therefore
//! finite sums over maps from the sampled points to parts. Maps are grouped by
//! their image multiset: all maps with the same multiset induce the same
//! pattern (a blow-up of `G` restricted to the multiset's support), and there
//! are `h! / prod(m_i!)` of them.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::canon::{canonical_form, canonical_form_rooted};
use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::graph::Graph;
use crate::rational::{frac, int, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graphon {
    pub source: Graph,
    /// Parts holding the labelled root points, in label order.
    pub roots: Option<Vec<usize>>,
}

impl Graphon {
    pub fn of(source: &Graph) -> Self {
        Graphon { source: *source, roots: None }
    }

    pub fn rooted(source: &Graph, roots: &[usize]) -> Result<Self> {
        for (i, &r) in roots.iter().enumerate() {
            if r >= source.n() {
                return Err(Error::VertexOutOfRange { vertex: r, n: source.n() });
            }
            if roots[..i].contains(&r) {
                return Err(Error::RootMismatch(format!("root part {r} repeated")));
            }
        }
        Ok(Graphon { source: *source, roots: Some(roots.to_vec()) })
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, b| a * b)
}

/// Calls `f(multiset, count)` for every multiset of `h` parts out of `n`,
/// where `count = h! / prod(m_i!)` is the number of maps with that image.
fn for_each_multiset(n: usize, h: usize, f: &mut impl FnMut(&[usize], &BigInt)) {
    fn go(
        part: usize,
        n: usize,
        left: usize,
        chosen: &mut Vec<usize>,
        denom: &BigInt,
        hfact: &BigInt,
        f: &mut impl FnMut(&[usize], &BigInt),
    ) {
        if left == 0 {
            f(chosen, &(hfact / denom));
            return;
        }
        if part == n {
            return;
        }
        let mut d = denom.clone();
        for mult in 0..=left {
            if mult > 0 {
                chosen.push(part);
                d *= BigInt::from(mult);
            }
            go(part + 1, n, left - mult, chosen, &d, hfact, f);
        }
        for _ in 0..left {
            if chosen.last() == Some(&part) {
                chosen.pop();
            }
        }
    }
    let hfact = factorial(h);
    go(0, n, h, &mut Vec::with_capacity(h), &BigInt::one(), &hfact, f);
}

/// Graph induced by points sitting in the given parts (repeats allowed).
pub(crate) fn pattern(source: &Graph, parts: &[usize]) -> Graph {
    let mut g = Graph::empty(parts.len());
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            if source.has_edge(parts[i], parts[j]) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Sums labelled-pattern counts per canonical key, so each distinct pattern
/// is labelled once.
fn merge_by_key(counts: HashMap<Graph, BigInt>, key: impl Fn(&Graph) -> Vec<u8>) -> HashMap<Vec<u8>, BigInt> {
    let mut merged: HashMap<Vec<u8>, BigInt> = HashMap::new();
    for (g, c) in counts {
        *merged.entry(key(&g)).or_insert_with(BigInt::zero) += c;
    }
    merged
}

/// Distribution of the graph induced by `h` random points of the graphon of
/// `source`, keyed by canonical bytes.
pub fn density_profile(source: &Graph, h: usize) -> HashMap<Vec<u8>, Rational> {
    let mut counts: HashMap<Graph, BigInt> = HashMap::new();
    for_each_multiset(source.n(), h, &mut |parts, c| {
        *counts.entry(pattern(source, parts)).or_insert_with(BigInt::zero) += c;
    });
    let counts = merge_by_key(counts, |g| canonical_form(g).bytes);
    let total = num_traits::pow(BigInt::from(source.n()), h);
    counts.into_iter().map(|(k, c)| (k, Rational::new(c, total.clone()))).collect()
}

/// Distribution of the flag induced by fixed root points in parts
/// `root_parts` (repeats allowed) plus `m - k` random points, keyed by rooted
/// canonical bytes.
pub fn rooted_profile(source: &Graph, root_parts: &[usize], m: usize) -> HashMap<Vec<u8>, Rational> {
    let k = root_parts.len();
    let roots: Vec<usize> = (0..k).collect();
    let mut counts: HashMap<Graph, BigInt> = HashMap::new();
    let mut parts = root_parts.to_vec();
    for_each_multiset(source.n(), m - k, &mut |free, c| {
        parts.truncate(k);
        parts.extend_from_slice(free);
        *counts.entry(pattern(source, &parts)).or_insert_with(BigInt::zero) += c;
    });
    let counts = merge_by_key(counts, |g| canonical_form_rooted(g, &roots).bytes);
    let total = num_traits::pow(BigInt::from(source.n()), m - k);
    counts.into_iter().map(|(k, c)| (k, Rational::new(c, total.clone()))).collect()
}

/// Induced density of `h` in the (unrooted) graphon `b`.
pub fn graphon_density(b: &Graphon, h: &Graph) -> Result<Rational> {
    if b.roots.is_some() {
        return Err(Error::Precondition("graphon_density needs an unrooted graphon".into()));
    }
    if h.n() > 7 {
        return Err(Error::Precondition(format!("density of a {}-vertex graph", h.n())));
    }
    if b.source.n() == 0 {
        return Ok(if h.n() == 0 { int(1) } else { int(0) });
    }
    let key = canonical_form(h).bytes;
    Ok(density_profile(&b.source, h.n()).remove(&key).unwrap_or_else(Rational::zero))
}

/// Density of flag `f` in the rooted graphon `b`: the probability that the
/// roots together with `|f| - k` random points induce `f` as a flag.
pub fn flag_density(b: &Graphon, f: &Flag) -> Result<Rational> {
    let roots = b.roots.as_deref().ok_or_else(|| Error::RootMismatch("graphon has no roots".into()))?;
    if roots.len() != f.k() {
        return Err(Error::RootMismatch(format!("{} roots for a type of size {}", roots.len(), f.k())));
    }
    let sigma = pattern(&b.source, roots);
    if sigma != *f.flag_type().sigma() {
        return Err(Error::RootMismatch("root parts induce a different labelled graph".into()));
    }
    let key = f.canonical().bytes;
    Ok(rooted_profile(&b.source, roots, f.size()).remove(&key).unwrap_or_else(Rational::zero))
}

/// Induced C5 density in the graphon of the balanced blow-up of C5 on `n`
/// vertices, from the closed form `5! a^i b^(5-i) / n^5` with `i = n mod 5`,
/// `a = (n + 5 - i)/5`, `b = (n - i)/5`.
pub fn d_n(n: u64) -> Rational {
    assert!(n >= 5, "d_n needs n >= 5");
    let i = (n % 5) as u32;
    let a = BigInt::from((n + 5 - u64::from(i)) / 5);
    let b = BigInt::from((n - u64::from(i)) / 5);
    let num = BigInt::from(120) * num_traits::pow(a, i as usize) * num_traits::pow(b, 5 - i as usize);
    Rational::new(num, num_traits::pow(BigInt::from(n), 5))
}

/// The constants of the two linear lower bounds on `d(C5+)`, read exactly.
pub mod constants {
    use crate::rational::{frac, Rational};

    /// Upper bound on `d(C5)`: 0.0384.
    pub fn c5_max() -> Rational {
        frac(24, 625)
    }
    /// `d(C5+)` of the C5 graphon: 0.1152.
    pub fn c5_plus_at_max() -> Rational {
        frac(72, 625)
    }
    /// Threshold of the lower-bound claim: 0.034.
    pub fn low_lb() -> Rational {
        frac(17, 500)
    }
    /// Slope of the lower-bound claim: 4.57771.
    pub fn low_slope() -> Rational {
        frac(457771, 100000)
    }
    /// Value of the lower-bound claim at the threshold: 0.095058.
    pub fn low_value() -> Rational {
        frac(47529, 500000)
    }
    /// Slope of the tight claim: 6.
    pub fn tight_slope() -> Rational {
        Rational::from_integer(6.into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaCheck {
    pub n: u64,
    pub d_n: Rational,
    /// `(A (d_n - LB) + B) / (3 d_n)`.
    pub ratio: Rational,
    /// `1 - 1/n`.
    pub target: Rational,
    pub margin: Rational,
    pub holds: bool,
}

/// Ratio `(A (d - lb) + B) / (3 d)` of a lower line for `d(C5+)` at `d`.
pub fn line_ratio(slope: &Rational, lb: &Rational, value: &Rational, d: &Rational) -> Rational {
    (slope * (d - lb) + value) / (int(3) * d)
}

/// First branch of the lemma for `10 <= n < 100`: the lower-bound claim
/// evaluated at `d_n` gives a ratio above `1 - 1/n`.
pub fn lemma_ratio_small_n(n: u64) -> Result<LemmaCheck> {
    if !(10..100).contains(&n) {
        return Err(Error::Precondition(format!("small-n branch covers 10 <= n < 100, got {n}")));
    }
    let d = d_n(n);
    if d < constants::low_lb() {
        return Err(Error::Precondition(format!("d_{n} is below the claim threshold 0.034")));
    }
    let ratio = line_ratio(&constants::low_slope(), &constants::low_lb(), &constants::low_value(), &d);
    let target = int(1) - frac(1, n as i64);
    let margin = &ratio - &target;
    Ok(LemmaCheck { n, d_n: d, holds: margin.is_positive(), ratio, target, margin })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsymptoticCheck {
    pub residue: u64,
    pub m0: u64,
    /// Coefficients in `t` (constant first) of the shifted polynomial.
    pub coefficients: Vec<BigInt>,
    pub holds: bool,
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(a: &[BigInt], e: usize) -> Vec<BigInt> {
    (0..e).fold(vec![BigInt::one()], |acc, _| poly_mul(&acc, a))
}

fn poly_sub(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    out
}

fn poly_scale(a: &[BigInt], s: i64) -> Vec<BigInt> {
    a.iter().map(|x| x * BigInt::from(s)).collect()
}

/// `p(t + s)` by Horner's scheme on polynomials.
fn poly_shift(p: &[BigInt], s: u64) -> Vec<BigInt> {
    let step = [BigInt::from(s), BigInt::one()];
    let mut out = vec![BigInt::zero()];
    for c in p.iter().rev() {
        out = poly_mul(&out, &step);
        out[0] += c;
    }
    while out.len() > 1 && out.last().is_some_and(Zero::is_zero) {
        out.pop();
    }
    out
}

/// Polynomial in `m` whose positivity at `n = 5m + i` is equivalent to
/// `d_n > 0.0384 (1 - 50/n^2)`: `75000 (m+1)^i m^(5-i) n^2 - 24 (n^2 - 50) n^5`.
pub fn asymptotic_polynomial(i: u64) -> Vec<BigInt> {
    assert!(i < 5);
    let m = [BigInt::zero(), BigInt::one()];
    let m1 = [BigInt::one(), BigInt::one()];
    let nn = [BigInt::from(i), BigInt::from(5)];
    let n2 = poly_pow(&nn, 2);
    let left = poly_scale(&poly_mul(&poly_mul(&poly_pow(&m1, i as usize), &poly_pow(&m, 5 - i as usize)), &n2), 75000);
    let n2_minus_50 = poly_sub(&n2, &[BigInt::from(50)]);
    let right = poly_scale(&poly_mul(&n2_minus_50, &poly_pow(&nn, 5)), 24);
    let mut p = poly_sub(&left, &right);
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

/// Sufficient test that `d_n > 0.0384 (1 - 50/n^2)` for every `n = 5m + i`
/// with `m >= m0`: after substituting `m = t + m0`, all coefficients are
/// non-negative and the constant term is positive. `false` only means the
/// test is inconclusive.
pub fn asymptotic_check(i: u64, m0: u64) -> Result<AsymptoticCheck> {
    if i >= 5 {
        return Err(Error::Precondition(format!("residue {i} is not in 0..5")));
    }
    if m0 < 20 {
        return Err(Error::Precondition(format!("m0 = {m0} < 20")));
    }
    let coefficients = poly_shift(&asymptotic_polynomial(i), m0);
    let holds = coefficients[0].is_positive() && coefficients.iter().all(|c| !c.is_negative());
    Ok(AsymptoticCheck { residue: i, m0, coefficients, holds })
}

/// Direct exact evaluation of `d_n > 0.0384 (1 - 50/n^2)`.
pub fn asymptotic_inequality(n: u64) -> bool {
    let n2 = frac((n * n) as i64, 1);
    d_n(n) > constants::c5_max() * (int(1) - int(50) / n2)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainCheck {
    pub n: u64,
    /// `(6 (d_n - 0.0384) + 0.1152) / 0.1152`.
    pub tight_ratio: Rational,
    /// `(-6 * 0.0384 * 50/n^2 + 0.1152) / 0.1152`, which must equal `1 - 100/n^2`.
    pub bound: Rational,
    pub target: Rational,
    /// `bound - target`; zero exactly at `n = 100`.
    pub margin: Rational,
    pub holds: bool,
}

/// The closing chain of the large-n branch: the tight claim at `d_n`
/// strictly exceeds its value at `0.0384 (1 - 50/n^2)`, that value simplifies
/// to `1 - 100/n^2`, and `1 - 100/n^2 >= 1 - 1/n`.
pub fn final_chain_check(n: u64) -> Result<ChainCheck> {
    if n < 100 {
        return Err(Error::Precondition(format!("large-n branch needs n >= 100, got {n}")));
    }
    let c = constants::c5_max();
    let v = constants::c5_plus_at_max();
    let six = constants::tight_slope();
    let n2 = Rational::from_integer(BigInt::from(n) * BigInt::from(n));
    let tight_ratio = (&six * (d_n(n) - &c) + &v) / &v;
    let bound = (-(&six * &c * int(50) / &n2) + &v) / &v;
    let simplified = int(1) - int(100) / &n2;
    let target = int(1) - frac(1, n as i64);
    let margin = &bound - &target;
    let holds = tight_ratio > bound && bound == simplified && !margin.is_negative();
    Ok(ChainCheck { n, tight_ratio, bound, target, margin, holds })
}

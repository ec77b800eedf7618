#![allow(dead_code)]

use std::path::PathBuf;

use num_traits::{Signed, Zero};
use pentacheck::certificate::{parse_certificate, verify_certificate, Certificate, Objective, Verdict};
use pentacheck::density::constants;
use pentacheck::enumerate::enumerate_triangle_free;
use pentacheck::flags::enumerate_flags;
use pentacheck::graph::Graph;
use pentacheck::rational::{frac, int, Rational};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn certificate(name: &str) -> Certificate {
    parse_certificate(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every triangle-free class on `n` vertices, one representative each.
pub fn triangle_free(n: usize) -> Vec<Graph> {
    let mut out = Vec::new();
    enumerate_triangle_free(n, |g| out.push(*g)).expect("n within range");
    out
}

/// Random triangle-free graph: random edge order, edges kept while no
/// triangle appears.
pub fn random_triangle_free(n: usize, rng: &mut impl Rng) -> Graph {
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    pairs.shuffle(rng);
    let mut edges = Vec::new();
    for (u, v) in pairs {
        if rng.gen_bool(0.6) {
            edges.push((u, v));
            if !Graph::new(n, &edges).expect("valid edges").is_triangle_free() {
                edges.pop();
            }
        }
    }
    Graph::new(n, &edges).expect("valid edges")
}

pub fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect()
}

pub fn labelled(n: usize, mask: u32) -> Graph {
    let edges: Vec<_> = pairs(n).into_iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, e)| e).collect();
    Graph::new(n, &edges).unwrap()
}

pub fn code(g: &Graph, perm: &[usize]) -> u32 {
    pairs(g.n()).iter().enumerate().fold(0, |acc, (b, &(i, j))| if g.has_edge(perm[i], perm[j]) { acc | 1 << b } else { acc })
}

/// Canonical key by brute force: the degree sequence, then the smallest edge
/// code over the orderings that list vertices by nondecreasing degree.
pub fn brute_key(g: &Graph) -> (Vec<usize>, u32) {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| g.degree(v));
    let degrees: Vec<usize> = order.iter().map(|&v| g.degree(v)).collect();
    let mut best = u32::MAX;
    let mut perm = order.clone();
    fn go(pos: usize, perm: &mut Vec<usize>, degrees: &[usize], g: &Graph, best: &mut u32) {
        if pos == perm.len() {
            *best = (*best).min(code(g, perm));
            return;
        }
        for i in pos..perm.len() {
            if degrees[i] != degrees[pos] {
                break;
            }
            perm.swap(pos, i);
            go(pos + 1, perm, degrees, g, best);
            perm.swap(pos, i);
        }
    }
    go(0, &mut perm, &degrees, g, &mut best);
    (degrees, best)
}

pub fn brute_aut(g: &Graph) -> u64 {
    let n = g.n();
    let target = code(g, &(0..n).collect::<Vec<_>>());
    let mut count = 0;
    let mut perm: Vec<usize> = (0..n).collect();
    for_each_permutation(&mut perm, 0, &mut |p| {
        if code(g, p) == target {
            count += 1;
        }
    });
    count
}

pub fn for_each_permutation(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        for_each_permutation(p, k + 1, f);
        p.swap(k, i);
    }
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

#[derive(Debug)]
pub enum Outcome {
    Rejected,
    Changed,
    FalseAccept,
}

pub fn judge(original: &Verdict, tampered: &Certificate) -> Outcome {
    match verify_certificate(tampered) {
        Err(_) => Outcome::Rejected,
        Ok(v) if !v.valid => Outcome::Rejected,
        Ok(v) if v != *original => Outcome::Changed,
        Ok(_) => Outcome::FalseAccept,
    }
}

pub fn nudge(rng: &mut impl Rng) -> Rational {
    let den = 10i64.pow(rng.gen_range(2..=9));
    let num = rng.gen_range(1..=9) * if rng.gen_bool(0.5) { 1 } else { -1 };
    frac(num, den)
}

/// One random single-entry change of the proof content.
pub fn tamper(c: &Certificate, rng: &mut impl Rng) -> (Certificate, &'static str) {
    let mut t = c.clone();
    let kind = rng.gen_range(0..10);
    let what = match kind {
        0..=4 => {
            let b = rng.gen_range(0..t.blocks.len());
            let dim = t.blocks[b].matrix.len();
            let (i, j) = (rng.gen_range(0..dim), rng.gen_range(0..dim));
            let e = nudge(rng);
            t.blocks[b].matrix[i][j] += &e;
            if i != j {
                t.blocks[b].matrix[j][i] += &e;
            }
            "symmetric matrix entry"
        }
        5 => {
            let b = rng.gen_range(0..t.blocks.len());
            let dim = t.blocks[b].matrix.len();
            if dim < 2 {
                t.blocks[b].matrix[0][0] += nudge(rng);
                return (t, "matrix entry");
            }
            let i = rng.gen_range(0..dim);
            let j = (i + rng.gen_range(1..dim)) % dim;
            t.blocks[b].matrix[i][j] += nudge(rng);
            "one-sided matrix entry"
        }
        6 => {
            t.y += nudge(rng);
            "y"
        }
        7 => {
            t.lb += nudge(rng) / int(10);
            "lb"
        }
        8 => {
            let b = rng.gen_range(0..t.blocks.len());
            let k = t.blocks[b].flag_type.k();
            let all = enumerate_flags(&t.blocks[b].flag_type, (t.level + k) / 2).unwrap();
            // A flag with a zero row never enters the sum, so swapping it
            // changes nothing.
            let live: Vec<usize> =
                (0..t.blocks[b].flags.len()).filter(|&i| t.blocks[b].matrix[i].iter().any(|x| !x.is_zero())).collect();
            let Some(&i) = live.choose(rng) else {
                t.blocks[b].matrix[0][0] += nudge(rng);
                return (t, "matrix entry");
            };
            let current = t.blocks[b].flags[i].canonical();
            let others: Vec<_> = all.into_iter().filter(|f| f.canonical() != current).collect();
            if let Some(f) = others.choose(rng) {
                t.blocks[b].flags[i] = f.clone();
            } else {
                t.blocks[b].matrix[i][i] += nudge(rng);
            }
            "flag"
        }
        _ => {
            // Only a stronger claim is a tamper: a lower ceiling for the upper
            // bound, a higher line for the lower bound. The slope only matters
            // above lb, which is empty when lb is already the C5 maximum.
            match c.objective {
                Objective::C5Upper => t.claimed_b -= nudge(rng).abs(),
                Objective::C5PlusLower if t.lb < constants::c5_max() && rng.gen_bool(0.5) => {
                    t.claimed_a += nudge(rng).abs() * int(100)
                }
                Objective::C5PlusLower => t.claimed_b += nudge(rng).abs(),
            }
            "claimed constant strengthened"
        }
    };
    (t, what)
}

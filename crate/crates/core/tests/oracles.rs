//! Independent oracles and exact identities for enumeration, densities and
//! the flag algebra.

mod common;

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use pentacheck::canon::{canonical, canonical_form, canonical_form_rooted};
use pentacheck::density::{flag_density, graphon_density, Graphon};
use pentacheck::enumerate::{enumerate_triangle_free, triangle_free_classes};
use pentacheck::flags::{
    enumerate_flags, enumerate_types, expansion_coefficients, level_densities, pair_density, sos_coefficients, Type,
};
use pentacheck::graph::Graph;
use pentacheck::rational::Rational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_aut, brute_key, factorial, labelled, pairs, random_permutation, random_triangle_free, triangle_free};

#[test]
fn census_matches_labelled_brute_force() {
    for n in 0..=7 {
        let mut classes = HashSet::new();
        let mut labelled_count = 0u64;
        for mask in 0..1u32 << pairs(n).len() {
            let g = labelled(n, mask);
            if g.is_triangle_free() {
                labelled_count += 1;
                classes.insert(brute_key(&g));
            }
        }
        let reps = triangle_free(n);
        assert_eq!(reps.len(), classes.len(), "class count at n={n}");
        let keys: HashSet<_> = reps.iter().map(brute_key).collect();
        assert_eq!(keys, classes, "representatives at n={n}");
        // Orbit-stabiliser: the classes partition the labelled graphs.
        let orbit_sum: u64 = reps.iter().map(|g| factorial(n) / brute_aut(g)).sum();
        assert_eq!(orbit_sum, labelled_count, "labelled count at n={n}");
    }
}

#[test]
fn automorphism_counts_match_brute_force() {
    for n in 1..=7 {
        for g in triangle_free(n) {
            assert_eq!(canonical_form(&g).aut_count, brute_aut(&g), "{g:?}");
        }
    }
}

#[test]
fn census_classes_are_distinct_and_canonical() {
    let mut total = 0;
    for n in 0..=9 {
        let classes = triangle_free_classes(n).unwrap();
        let labels: BTreeSet<_> = classes.iter().map(|(l, _)| l.bytes.clone()).collect();
        assert_eq!(labels.len(), classes.len());
        for (l, g) in &classes {
            assert!(g.is_triangle_free());
            assert_eq!(&canonical_form(g), l);
        }
        total += classes.len();
    }
    assert_eq!(total, 2480);
}

proptest! {
    #[test]
    fn canonical_form_is_invariant(n in 1usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<_> = pairs(n).into_iter().filter(|_| rng.gen_bool(0.4)).collect();
        let g = Graph::new(n, &edges).unwrap();
        let p = random_permutation(n, &mut rng);
        let h = g.permuted(&p);
        prop_assert_eq!(canonical_form(&g), canonical_form(&h));
        let c = canonical(&g, &[]);
        prop_assert_eq!(c.graph(&g), canonical(&h, &[]).graph(&h));
        // Rooted: moving roots along with the relabelling keeps the class.
        let k = rng.gen_range(0..=n.min(3));
        let roots: Vec<usize> = (0..k).collect();
        let moved: Vec<usize> = roots.iter().map(|&r| p[r]).collect();
        prop_assert_eq!(canonical_form_rooted(&g, &roots), canonical_form_rooted(&h, &moved));
    }

    #[test]
    fn canonical_form_separates_non_isomorphic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=7);
        let a = labelled(n, rng.gen_range(0..1u32 << pairs(n).len()));
        let b = labelled(n, rng.gen_range(0..1u32 << pairs(n).len()));
        prop_assert_eq!(canonical_form(&a) == canonical_form(&b), brute_key(&a) == brute_key(&b));
    }
}

#[test]
fn enumeration_visits_each_class_once() {
    for n in 0..=8 {
        let mut seen = HashSet::new();
        let count = enumerate_triangle_free(n, |g| {
            assert!(g.is_triangle_free());
            assert!(seen.insert(canonical_form(g).bytes), "duplicate class at n={n}");
        })
        .unwrap();
        assert_eq!(count as usize, seen.len());
    }
}

/// `d(F1) d(F2) = sum_F p(F1, F2; F) d(F)` in a rooted graphon.
#[test]
fn rooted_product_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut checked = 0;
    while checked < 60 {
        let n = rng.gen_range(3..=7);
        let g = random_triangle_free(n, &mut rng);
        let k = rng.gen_range(0..=3.min(n));
        let roots: Vec<usize> = random_permutation(n, &mut rng).into_iter().take(k).collect();
        let t = Type::new(g.induced(&roots)).unwrap();
        let b = Graphon::rooted(&g, &roots).unwrap();
        let m1 = rng.gen_range(k..=k + 3);
        let m2 = rng.gen_range(k..=6 + k - m1);
        let f1s = enumerate_flags(&t, m1).unwrap();
        let f2s = enumerate_flags(&t, m2).unwrap();
        let f1 = &f1s[rng.gen_range(0..f1s.len())];
        let f2 = &f2s[rng.gen_range(0..f2s.len())];
        let lhs = flag_density(&b, f1).unwrap() * flag_density(&b, f2).unwrap();
        let mut rhs = Rational::zero();
        for f in enumerate_flags(&t, m1 + m2 - k).unwrap() {
            let p = pair_density(f1, f2, f.graph(), f.roots()).unwrap();
            if !p.is_zero() {
                rhs += p * flag_density(&b, &f).unwrap();
            }
        }
        assert_eq!(lhs, rhs, "G={g:?} roots={roots:?} F1={f1:?} F2={f2:?}");
        checked += 1;
    }
}

#[test]
fn pair_density_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..30 {
        let f = random_triangle_free(5, &mut rng);
        for theta in [vec![], vec![0], vec![2], vec![1, 3]] {
            let t = Type::new(f.induced(&theta)).unwrap();
            let k = theta.len();
            let m1 = (5 + k) / 2;
            let m2 = 5 + k - m1;
            let rest: Vec<usize> = (0..5).filter(|v| !theta.contains(v)).collect();
            let roots: Vec<usize> = (0..k).collect();
            let mut total = 0u64;
            let mut hits = std::collections::HashMap::new();
            for mask in 0..1u32 << rest.len() {
                let s1: Vec<usize> = rest.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect();
                if s1.len() != m1 - k {
                    continue;
                }
                let s2: Vec<usize> = rest.iter().filter(|v| !s1.contains(v)).copied().collect();
                total += 1;
                let a: Vec<usize> = theta.iter().chain(&s1).copied().collect();
                let b: Vec<usize> = theta.iter().chain(&s2).copied().collect();
                let key =
                    (canonical_form_rooted(&f.induced(&a), &roots).bytes, canonical_form_rooted(&f.induced(&b), &roots).bytes);
                *hits.entry(key).or_insert(0u64) += 1;
            }
            for f1 in enumerate_flags(&t, m1).unwrap() {
                for f2 in enumerate_flags(&t, m2).unwrap() {
                    let key = (f1.canonical().bytes, f2.canonical().bytes);
                    let want = Rational::new(BigInt::from(*hits.get(&key).unwrap_or(&0)), BigInt::from(total));
                    assert_eq!(pair_density(&f1, &f2, &f, &theta).unwrap(), want);
                }
            }
        }
    }
}

/// `d(H) = sum_F c_F(H) d(F)` at level 6 in the graphon of every
/// triangle-free graph on at most 6 vertices.
#[test]
fn chain_rule_at_level_six() {
    let hs: Vec<Graph> = (1..=5).flat_map(triangle_free).collect();
    let coefficients: Vec<_> = hs.iter().map(|h| expansion_coefficients(h, 6).unwrap()).collect();
    for n in 1..=6 {
        for g in triangle_free(n) {
            let d = level_densities(&g, 6).unwrap();
            for (h, c) in hs.iter().zip(&coefficients) {
                assert_eq!(c.dot(&d), graphon_density(&Graphon::of(&g), h).unwrap(), "H={h:?} G={g:?}");
            }
        }
    }
}

#[test]
fn square_terms_are_nonnegative_on_graphons() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let small: Vec<Graph> = (1..=6).flat_map(triangle_free).collect();
    let small_d: Vec<_> = small.iter().map(|g| level_densities(g, 6).unwrap()).collect();
    for k in [0, 2, 4] {
        for t in enumerate_types(k) {
            let flags = enumerate_flags(&t, (6 + k) / 2).unwrap();
            let dim = flags.len();
            let rows = rng.gen_range(1..=dim);
            let a: Vec<Vec<i64>> = (0..rows).map(|_| (0..dim).map(|_| rng.gen_range(-3..=3)).collect()).collect();
            let m: Vec<Vec<Rational>> = (0..dim)
                .map(|i| {
                    (0..dim).map(|j| Rational::from_integer((0..rows).map(|r| a[r][i] * a[r][j]).sum::<i64>().into())).collect()
                })
                .collect();
            let v = sos_coefficients(&t, &flags, &m, 6).unwrap();
            for d in &small_d {
                assert!(!v.dot(d).is_negative(), "type {t:?}");
            }
            for _ in 0..5 {
                let g = random_triangle_free(rng.gen_range(7..=9), &mut rng);
                assert!(!v.dot(&level_densities(&g, 6).unwrap()).is_negative(), "type {t:?} on {g:?}");
            }
        }
    }
}

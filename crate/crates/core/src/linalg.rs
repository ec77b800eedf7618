//! Exact rational linear algebra on small dense matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

pub type Matrix = Vec<Vec<Rational>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsdReport {
    pub psd: bool,
    /// Pivots in elimination order.
    pub pivots: Vec<Rational>,
    /// Original row index and value of the pivot that failed, when not PSD.
    pub failure: Option<(usize, Rational)>,
}

pub fn is_symmetric(m: &Matrix) -> bool {
    let n = m.len();
    m.iter().all(|r| r.len() == n) && (0..n).all(|i| (0..i).all(|j| m[i][j] == m[j][i]))
}

/// `(L, A)` with `m = A / L`, `L` the least common denominator.
pub fn integer_form(m: &Matrix) -> (BigInt, Vec<Vec<BigInt>>) {
    let scale = m.iter().flatten().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let a = m.iter().map(|r| r.iter().map(|x| x.numer() * (&scale / x.denom())).collect()).collect();
    (scale, a)
}

/// Exact positive-semidefiniteness by LDL^T with diagonal pivoting: at each
/// step the largest remaining diagonal entry is eliminated. A negative
/// maximum fails; a zero maximum passes only if the whole remaining block is
/// zero.
///
/// Runs fraction-free (Bareiss) on the matrix scaled to integers. Each
/// integer entry is the matching Schur complement entry times the previous
/// pivot minor, which is positive, so signs and pivot order are unchanged.
pub fn ldlt_psd(m: &Matrix) -> PsdReport {
    assert!(is_symmetric(m), "ldlt_psd needs a symmetric matrix");
    let (scale, mut a) = integer_form(m);
    // Schur entry = a / (prev * scale).
    let mut prev = BigInt::one();
    let value = |x: &BigInt, prev: &BigInt| Rational::new(x.clone(), prev * &scale);
    let mut active: Vec<usize> = (0..a.len()).collect();
    let mut pivots = Vec::with_capacity(a.len());
    while !active.is_empty() {
        let (pos, &p) = active.iter().enumerate().max_by(|x, y| a[*x.1][*x.1].cmp(&a[*y.1][*y.1])).expect("nonempty");
        let d = a[p][p].clone();
        if d.is_negative() {
            return PsdReport { psd: false, pivots, failure: Some((p, value(&d, &prev))) };
        }
        if d.is_zero() {
            for &i in &active {
                for &j in &active {
                    if !a[i][j].is_zero() {
                        return PsdReport { psd: false, pivots, failure: Some((i, Rational::zero())) };
                    }
                }
            }
            pivots.extend(active.iter().map(|_| Rational::zero()));
            return PsdReport { psd: true, pivots, failure: None };
        }
        active.swap_remove(pos);
        for &i in &active {
            for &j in &active {
                let t = &d * &a[i][j] - &a[i][p] * &a[p][j];
                a[i][j] = t / &prev;
            }
        }
        pivots.push(value(&d, &prev));
        prev = d;
    }
    PsdReport { psd: true, pivots, failure: None }
}

pub fn verify_psd(m: &Matrix) -> bool {
    ldlt_psd(m).psd
}

pub fn transpose(a: &Matrix) -> Matrix {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|r| (0..cols).map(|j| (0..inner).filter(|&k| !r[k].is_zero()).map(|k| &r[k] * &b[k][j]).sum()).collect())
        .collect()
}

/// `<A, B> = sum_ij A_ij B_ij`.
pub fn frobenius_dense(a: &Matrix, b: &Matrix) -> Rational {
    a.iter().zip(b).flat_map(|(r, s)| r.iter().zip(s)).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum()
}

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { Rational::from_integer(1.into()) } else { Rational::zero() }).collect()).collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(a: &mut Matrix) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of `{x : A x = 0}` where `A` has `cols` columns.
pub fn nullspace(a: &Matrix, cols: usize) -> Matrix {
    let mut r = a.clone();
    let pivots = rref(&mut r);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::from_integer(1.into());
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -r[row][f].clone();
            }
            v
        })
        .collect()
}

/// A solution of `A x = b` supported on pivot columns chosen in the order
/// `columns` (every other coordinate is zero). Returns `None` when the
/// system is inconsistent.
pub fn basic_solution(a: &Matrix, b: &[Rational], columns: &[usize]) -> Option<Vec<Rational>> {
    let cols = a.first().map_or(0, Vec::len);
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| columns.iter().map(|&c| row[c].clone()).chain(std::iter::once(bi.clone())).collect())
        .collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&columns.len()) {
        return None;
    }
    let mut x = vec![Rational::zero(); cols];
    for (row, &p) in pivots.iter().enumerate() {
        x[columns[p]] = aug[row][columns.len()].clone();
    }
    Some(x)
}

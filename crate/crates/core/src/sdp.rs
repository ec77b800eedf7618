//! Semidefinite programs whose optimal solutions are certificates, their
//! SDPA problem files, CSDP-style solution files, and rounding of floating
//! solutions to exact certificates.
//!
//! Primal variable `X = diag(M_1, ..., M_B, D)` with `D` diagonal holding
//! `alpha_F` for every level graph `F`, then `y` (unless fixed), then
//! `K' = K + 1`. For every `F`:
//!
//! ```text
//! sum_sigma <M_sigma, Q_sigma,F> + alpha_F + c_F(C5) y + K' = obj_F + 1
//! ```
//!
//! and the solver maximizes `K' + lb y`. The shift keeps `K'` non-negative
//! for every bound of interest (`K >= -1`), so no free variable is needed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::certificate::{verify_certificate, Block, Certificate, Objective, Verdict};
use crate::density::{constants, pattern, rooted_profile};
use crate::error::{Error, Result};
use crate::flags::{
    enumerate_flags, enumerate_types, expansion_coefficients, level_densities, square_tables, type_id, Flag, SparseSym, Type,
    MAX_LEVEL,
};
use crate::graph::{c5, c5_plus};
use crate::linalg::{basic_solution, frobenius_dense, ldlt_psd, mul, nullspace, transpose, Matrix};
use crate::rational::{self, int, Rational};

pub const SDPA_HEADER: &str = "pentacheck-sdpa 1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemSpec {
    pub objective: Objective,
    pub level: usize,
    pub lb: Rational,
    /// Fixes the multiplier of `d(C5)` instead of optimizing it.
    pub fixed_y: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdpBlock {
    pub type_id: usize,
    pub flag_type: Type,
    pub flags: Vec<Flag>,
    /// `Q_sigma,F` for every level graph `F`.
    pub tables: Vec<SparseSym>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdpProblem {
    pub spec: ProblemSpec,
    pub blocks: Vec<SdpBlock>,
    /// `c_F(C5)` in basis order.
    pub c5: Vec<Rational>,
    /// `c_F(C5+)` in basis order; empty for the upper-bound objective.
    pub c5_plus: Vec<Rational>,
}

/// One labelled representative per isomorphism class of types with size of
/// the same parity as `level` and below it, with its id in
/// [`enumerate_types`].
pub fn problem_types(level: usize) -> Vec<(usize, Type)> {
    let mut out = Vec::new();
    let mut k = level % 2;
    while k + 2 <= level {
        let mut seen = BTreeMap::new();
        for t in enumerate_types(k) {
            let rep = t.canonical_representative();
            seen.entry(type_id(&rep)).or_insert(rep);
        }
        out.extend(seen);
        k += 2;
    }
    out
}

/// The lower-bound problem for `d(C5+) >= y (d(C5) - lb) + B` with `y` free.
pub fn generate_sdp(level: usize, lb: Rational) -> Result<SdpProblem> {
    generate(&ProblemSpec { objective: Objective::C5PlusLower, level, lb, fixed_y: None })
}

pub fn generate(spec: &ProblemSpec) -> Result<SdpProblem> {
    if !(5..=MAX_LEVEL).contains(&spec.level) || spec.level < spec.objective.min_level() {
        return Err(Error::Precondition(format!("objective {} is not available at level {}", spec.objective, spec.level)));
    }
    if spec.objective == Objective::C5Upper && (spec.fixed_y.is_some() || !spec.lb.is_zero()) {
        return Err(Error::Precondition("the c5-upper objective has no y and no lb".into()));
    }
    if spec.fixed_y.as_ref().is_some_and(Signed::is_negative) {
        return Err(Error::Precondition("fixed y is negative".into()));
    }
    let blocks = problem_types(spec.level)
        .into_par_iter()
        .map(|(id, t)| {
            let flags = enumerate_flags(&t, (spec.level + t.k()) / 2)?;
            let tables = square_tables(&t, &flags, spec.level)?;
            Ok(SdpBlock { type_id: id, flag_type: t, flags, tables })
        })
        .collect::<Result<Vec<_>>>()?;
    let c5 = expansion_coefficients(&c5(), spec.level)?.entries;
    let c5_plus = match spec.objective {
        Objective::C5PlusLower => expansion_coefficients(&c5_plus(), spec.level)?.entries,
        Objective::C5Upper => Vec::new(),
    };
    Ok(SdpProblem { spec: spec.clone(), blocks, c5, c5_plus })
}

impl SdpProblem {
    pub fn constraint_count(&self) -> usize {
        self.c5.len()
    }

    pub fn free_y(&self) -> bool {
        self.spec.objective == Objective::C5PlusLower && self.spec.fixed_y.is_none()
    }

    /// Size of the trailing diagonal block.
    pub fn diag_size(&self) -> usize {
        self.constraint_count() + usize::from(self.free_y()) + 1
    }

    /// `obj_F` for a given multiplier `y`.
    pub fn objective_coefficients(&self, y: &Rational) -> Vec<Rational> {
        match self.spec.objective {
            Objective::C5PlusLower => self.c5_plus.iter().zip(&self.c5).map(|(p, q)| p - y * q).collect(),
            Objective::C5Upper => self.c5.iter().map(|q| -q).collect(),
        }
    }

    fn rhs(&self) -> Vec<Rational> {
        let y = self.spec.fixed_y.clone().unwrap_or_else(Rational::zero);
        self.objective_coefficients(&y).into_iter().map(|v| v + int(1)).collect()
    }

    /// Sparse SDPA text. Identical problems give identical bytes.
    pub fn to_sdpa(&self) -> String {
        let s = &self.spec;
        let n = self.constraint_count();
        let nb = self.blocks.len();
        let mut out = String::new();
        let y_desc = match (&s.fixed_y, s.objective) {
            (_, Objective::C5Upper) => "none".to_string(),
            (Some(y), _) => format!("fixed {}", rational::format(y)),
            (None, _) => "free".to_string(),
        };
        let _ = writeln!(out, "\"{SDPA_HEADER}");
        let _ = writeln!(out, "\"objective {} level {} lb {} y {}", s.objective, s.level, rational::format(&s.lb), y_desc);
        let _ = writeln!(
            out,
            "\"blocks 1..{nb}: M_sigma; block {}: diag(alpha_F, {}K' = K + 1)",
            nb + 1,
            if self.free_y() { "y, " } else { "" }
        );
        let _ = writeln!(
            out,
            "\"constraint F: sum <M_sigma, Q_sigma,F> + alpha_F{} + K' = obj_F + 1",
            if self.free_y() { " + c_F(C5) y" } else { "" }
        );
        let _ = writeln!(out, "\"maximize K'{}; K = K' - 1", if self.free_y() { " + lb y" } else { "" });
        for (i, b) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "\"block {}: type size {} id {} flags {}", i + 1, b.flag_type.k(), b.type_id, b.flags.len());
        }
        let _ = writeln!(out, "{n}");
        let _ = writeln!(out, "{}", nb + 1);
        let sizes: Vec<String> = self
            .blocks
            .iter()
            .map(|b| b.flags.len().to_string())
            .chain(std::iter::once(format!("-{}", self.diag_size())))
            .collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let rhs: Vec<String> = self.rhs().iter().map(float).collect();
        let _ = writeln!(out, "{}", rhs.join(" "));
        let diag = nb + 1;
        let kpos = self.diag_size();
        let _ = writeln!(out, "0 {diag} {kpos} {kpos} 1");
        if self.free_y() && !s.lb.is_zero() {
            let _ = writeln!(out, "0 {diag} {0} {0} {1}", n + 1, float(&s.lb));
        }
        for f in 0..n {
            for (bi, b) in self.blocks.iter().enumerate() {
                for (&(i, j), v) in &b.tables[f] {
                    if i <= j && !v.is_zero() {
                        let _ = writeln!(out, "{} {} {} {} {}", f + 1, bi + 1, i + 1, j + 1, float(v));
                    }
                }
            }
            let _ = writeln!(out, "{} {diag} {} {} 1", f + 1, f + 1, f + 1);
            if self.free_y() && !self.c5[f].is_zero() {
                let _ = writeln!(out, "{} {diag} {} {} {}", f + 1, n + 1, n + 1, float(&self.c5[f]));
            }
            let _ = writeln!(out, "{} {diag} {kpos} {kpos} 1", f + 1);
        }
        out
    }
}

fn float(r: &Rational) -> String {
    format!("{:e}", rational::to_f64(r))
}

/// Primal part of a solver's answer.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatSolution {
    pub blocks: Vec<DMatrix<f64>>,
    pub alpha: Vec<f64>,
    /// The optimized multiplier, or `None` when the problem fixes it.
    pub y: Option<f64>,
    /// `K = K' - 1`.
    pub k: f64,
    /// Constraint multipliers from the first line.
    pub dual: Vec<f64>,
}

impl FloatSolution {
    /// Solver's value of `K + y lb` (or of `K` for the upper objective).
    pub fn objective(&self, problem: &SdpProblem) -> f64 {
        let y = self.y.or_else(|| problem.spec.fixed_y.as_ref().map(rational::to_f64)).unwrap_or(0.0);
        self.k + y * rational::to_f64(&problem.spec.lb)
    }
}

/// Reads a CSDP solution file: one line with the `m` constraint multipliers,
/// then `matno block i j value` lines where `matno` 1 is the dual slack
/// (ignored) and 2 is the primal `X`. Omitted entries are zero. The file must
/// end with a newline.
pub fn parse_solution(text: &str, problem: &SdpProblem) -> Result<FloatSolution> {
    if !text.ends_with('\n') {
        return Err(Error::Solution("file does not end with a newline (truncated?)".into()));
    }
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let first = lines.next().ok_or_else(|| Error::Solution("empty file".into()))?;
    let dual = first
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Solution(format!("bad number {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if dual.len() != problem.constraint_count() {
        return Err(Error::Solution(format!("{} multipliers for {} constraints", dual.len(), problem.constraint_count())));
    }
    let nb = problem.blocks.len();
    let mut blocks: Vec<DMatrix<f64>> = problem.blocks.iter().map(|b| DMatrix::zeros(b.flags.len(), b.flags.len())).collect();
    let mut diag = vec![0.0; problem.diag_size()];
    let mut entries = 0usize;
    for line in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Solution(format!("expected 5 fields in {line:?}")));
        }
        let idx = |t: &str| t.parse::<usize>().map_err(|_| Error::Solution(format!("bad index {t:?}")));
        let (matno, blk, i, j) = (idx(fields[0])?, idx(fields[1])?, idx(fields[2])?, idx(fields[3])?);
        let v: f64 = fields[4].parse().map_err(|_| Error::Solution(format!("bad value {:?}", fields[4])))?;
        if !v.is_finite() {
            return Err(Error::Solution(format!("non-finite value in {line:?}")));
        }
        if matno != 1 && matno != 2 {
            return Err(Error::Solution(format!("matrix number {matno} in {line:?}")));
        }
        let dim = if (1..=nb).contains(&blk) {
            problem.blocks[blk - 1].flags.len()
        } else if blk == nb + 1 {
            problem.diag_size()
        } else {
            return Err(Error::Solution(format!("block {blk} out of range")));
        };
        if i == 0 || j == 0 || i > dim || j > dim || (blk == nb + 1 && i != j) {
            return Err(Error::Solution(format!("entry ({i}, {j}) out of range for block {blk}")));
        }
        if matno == 1 {
            continue;
        }
        entries += 1;
        if blk == nb + 1 {
            diag[i - 1] = v;
        } else {
            blocks[blk - 1][(i - 1, j - 1)] = v;
            blocks[blk - 1][(j - 1, i - 1)] = v;
        }
    }
    if entries == 0 {
        return Err(Error::Solution("no primal entries".into()));
    }
    let n = problem.constraint_count();
    let alpha = diag[..n].to_vec();
    let y = problem.free_y().then(|| diag[n]);
    let k = diag[problem.diag_size() - 1] - 1.0;
    Ok(FloatSolution { blocks, alpha, y, k, dual })
}

/// Best rational approximation of `x` with denominator at most `cap`
/// (the closer of the last convergent and the last admissible semiconvergent).
pub fn best_rational(x: f64, cap: u64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Rounding(format!("cannot round {x}")));
    }
    if cap == 0 {
        return Err(Error::Rounding("denominator cap must be positive".into()));
    }
    let neg = x < 0.0;
    let target = Rational::from_float(x.abs()).expect("finite");
    let cap = BigInt::from(cap);
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::from(1), BigInt::from(1), BigInt::zero());
    let mut rest = target.clone();
    loop {
        let a = rest.floor().to_integer();
        let q2 = &a * &q1 + &q0;
        if q2 > cap {
            // Largest semiconvergent within the cap.
            let t = (&cap - &q0) / &q1;
            let semi = Rational::new(&t * &p1 + &p0, &t * &q1 + &q0);
            let conv = Rational::new(p1.clone(), q1.clone());
            let best = if (&semi - &target).abs() < (&conv - &target).abs() { semi } else { conv };
            return Ok(if neg { -best } else { best });
        }
        let p2 = &a * &p1 + &p0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = &rest - Rational::from_integer(a);
        if frac.is_zero() {
            let r = Rational::new(p1, q1);
            return Ok(if neg { -r } else { r });
        }
        rest = frac.recip();
    }
}

/// Largest multiple of `1/cap` not above `x` (zero for negative `x`).
pub fn round_down(x: f64, cap: u64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Rounding(format!("cannot round {x}")));
    }
    let scaled = (x * cap as f64).floor().max(0.0);
    Ok(Rational::new(BigInt::from(scaled.to_i128().unwrap_or(0)), BigInt::from(cap)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundMode {
    /// Entrywise rounding, then `M + delta I` with the smallest verified
    /// `delta` from a doubling search.
    Shift,
    /// Rounding inside the common kernel forced by the C5 graphon, with an
    /// exact correction that makes every graph of the graphon's support
    /// tight. Needed when the bound is attained by the C5 graphon.
    Sharp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOptions {
    pub den_cap: u64,
    pub shift_budget: Rational,
    pub mode: RoundMode,
    /// Claimed line `(A, B)` for the certificate; defaults to the proven
    /// slope with `B` rounded to `CLAIM_DIGITS` decimals in the weaker
    /// direction (down for a lower line, up for an upper bound).
    pub claim: Option<(Rational, Rational)>,
}

pub const CLAIM_DIGITS: u32 = 12;

fn floor_to(r: &Rational, digits: u32) -> Rational {
    let scale = Rational::from_integer(num_traits::pow(BigInt::from(10), digits as usize));
    (r * &scale).floor() / scale
}

fn ceil_to(r: &Rational, digits: u32) -> Rational {
    -floor_to(&-r, digits)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rounded {
    pub certificate: Certificate,
    pub verdict: Verdict,
    /// Shift added to each block (to `M'` in sharp mode).
    pub deltas: Vec<Rational>,
    pub float_objective: f64,
    /// Exact proven objective minus the solver's objective.
    pub rounding_gain: f64,
}

/// Rounds a floating solution to an exact certificate and verifies it; never
/// returns a certificate that does not verify.
pub fn round_solution(problem: &SdpProblem, s: &FloatSolution, opts: &RoundOptions) -> Result<Rounded> {
    if s.blocks.len() != problem.blocks.len()
        || s.blocks.iter().zip(&problem.blocks).any(|(m, b)| m.nrows() != b.flags.len() || m.ncols() != b.flags.len())
    {
        return Err(Error::Dimension("solution does not match the problem's blocks".into()));
    }
    let y = match (&problem.spec.fixed_y, s.y) {
        (Some(y), _) => y.clone(),
        (None, Some(v)) if problem.free_y() => round_down(v, opts.den_cap)?,
        _ => int(0),
    };
    let (matrices, deltas) = match opts.mode {
        RoundMode::Shift => shift_round(s, opts)?,
        RoundMode::Sharp => sharp_round(problem, s, &y, opts)?,
    };
    let mut cert = Certificate {
        objective: problem.spec.objective,
        level: problem.spec.level,
        lb: problem.spec.lb.clone(),
        y,
        blocks: problem
            .blocks
            .iter()
            .zip(matrices)
            .map(|(b, matrix)| Block { type_id: b.type_id, flag_type: b.flag_type.clone(), flags: b.flags.clone(), matrix })
            .collect(),
        slacks: BTreeMap::new(),
        claimed_a: int(0),
        claimed_b: int(0),
    };
    let probe = verify_certificate(&cert)?;
    if let Some(f) = &probe.failure {
        if matches!(f, crate::certificate::Failure::NotPsd { .. }) {
            return Err(Error::Rounding(f.to_string()));
        }
    }
    (cert.claimed_a, cert.claimed_b) = match &opts.claim {
        Some((a, b)) => (a.clone(), b.clone()),
        None => match problem.spec.objective {
            Objective::C5PlusLower => (probe.proven_a.clone(), floor_to(&probe.proven_b, CLAIM_DIGITS)),
            Objective::C5Upper => (probe.proven_a.clone(), ceil_to(&probe.proven_b, CLAIM_DIGITS)),
        },
    };
    let verdict = verify_certificate(&cert)?;
    if let Some(f) = &verdict.failure {
        return Err(Error::Rounding(format!("rounded certificate does not verify: {f}")));
    }
    let float_objective = s.objective(problem);
    let proven = match problem.spec.objective {
        Objective::C5PlusLower => rational::to_f64(&verdict.proven_b),
        Objective::C5Upper => rational::to_f64(&verdict.k),
    };
    Ok(Rounded { certificate: cert, verdict, deltas, float_objective, rounding_gain: proven - float_objective })
}

fn round_matrix(m: &DMatrix<f64>, cap: u64) -> Result<Matrix> {
    let n = m.nrows();
    let mut out = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = best_rational((m[(i, j)] + m[(j, i)]) / 2.0, cap)?;
            out[i][j] = v.clone();
            out[j][i] = v;
        }
    }
    Ok(out)
}

fn add_identity(m: &Matrix, delta: &Rational) -> Matrix {
    let mut out = m.clone();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] += delta;
    }
    out
}

/// Doubling search from `1/cap^2` for the smallest verified shift, refined
/// by bisection.
///
/// A float estimate of the smallest eigenvalue settles every trial shift
/// that is clearly on one side of it; only trials near the threshold get an
/// exact check. The returned shift is always verified exactly, and a float
/// answer that fails that check falls back to the all-exact search.
fn smallest_shift(m: &Matrix, cap: u64, budget: &Rational) -> Result<Rational> {
    let f = to_dmatrix(m);
    let min_eig = if f.nrows() == 0 { 0.0 } else { f.clone().symmetric_eigenvalues().min() };
    let tol = 1e-9 * (1.0 + f.norm());
    let guided = |d: &Rational| -> Option<bool> {
        let gap = rational::to_f64(d) + min_eig;
        (gap.abs() > tol).then_some(gap > 0.0)
    };
    let shift = search_shift(m, cap, budget, &guided)?;
    if ldlt_psd(&add_identity(m, &shift)).psd {
        return Ok(shift);
    }
    search_shift(m, cap, budget, &|_| None)
}

/// The search itself; `hint` may answer a PSD question without the exact
/// check.
fn search_shift(m: &Matrix, cap: u64, budget: &Rational, hint: &dyn Fn(&Rational) -> Option<bool>) -> Result<Rational> {
    let psd = |d: &Rational| hint(d).unwrap_or_else(|| ldlt_psd(&add_identity(m, d)).psd);
    if psd(&Rational::zero()) {
        return Ok(Rational::zero());
    }
    let mut hi = Rational::new(BigInt::from(1), BigInt::from(cap) * BigInt::from(cap)).min(budget.clone());
    while !psd(&hi) {
        hi *= int(2);
        if &hi > budget {
            return Err(Error::Rounding(format!("PSD repair needs a shift above the budget {}", rational::format(budget))));
        }
    }
    let mut lo = &hi / int(2);
    for _ in 0..8 {
        let mid = (&lo + &hi) / int(2);
        if psd(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn shift_round(s: &FloatSolution, opts: &RoundOptions) -> Result<(Vec<Matrix>, Vec<Rational>)> {
    let repaired: Vec<(Matrix, Rational)> = s
        .blocks
        .par_iter()
        .map(|m| {
            let r = round_matrix(m, opts.den_cap)?;
            let d = smallest_shift(&r, opts.den_cap, &opts.shift_budget)?;
            Ok((add_identity(&r, &d), d))
        })
        .collect::<Result<_>>()?;
    Ok(repaired.into_iter().unzip())
}

/// Rows spanning the orthogonal complement of the rooted flag-density
/// vectors of the C5 graphon; any `M` vanishing on those vectors is
/// `B^T M' B`.
pub fn complement_basis(block: &SdpBlock) -> Matrix {
    let k = block.flag_type.k();
    let m = block.flags.first().map_or(k, Flag::size);
    let base = c5();
    let keys: Vec<Vec<u8>> = block.flags.iter().map(|f| f.canonical().bytes).collect();
    let mut vectors = Vec::new();
    for code in 0..5usize.pow(k as u32) {
        let parts: Vec<usize> = (0..k).map(|i| code / 5usize.pow(i as u32) % 5).collect();
        if pattern(&base, &parts) != *block.flag_type.sigma() {
            continue;
        }
        let profile = rooted_profile(&base, &parts, m);
        vectors.push(keys.iter().map(|key| profile.get(key).cloned().unwrap_or_else(Rational::zero)).collect());
    }
    nullspace(&vectors, block.flags.len())
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, cols, |i, j| rational::to_f64(&m[i][j]))
}

/// `B Q B^T` for a sparse symmetric `Q`.
fn congruence(b: &Matrix, q: &SparseSym) -> Matrix {
    let d = b.len();
    let mut out = vec![vec![Rational::zero(); d]; d];
    for (&(i, j), v) in q {
        for a in 0..d {
            if b[a][i].is_zero() {
                continue;
            }
            let left = &b[a][i] * v;
            for c in 0..d {
                if !b[c][j].is_zero() {
                    out[a][c] += &left * &b[c][j];
                }
            }
        }
    }
    out
}

fn sharp_round(
    problem: &SdpProblem,
    s: &FloatSolution,
    y: &Rational,
    opts: &RoundOptions,
) -> Result<(Vec<Matrix>, Vec<Rational>)> {
    let level = problem.spec.level;
    let obj = problem.objective_coefficients(y);
    let densities = level_densities(&c5(), level)?;
    let target: Rational = obj.iter().zip(&densities).map(|(o, d)| o * d).sum();
    debug_assert_eq!(
        target,
        match problem.spec.objective {
            Objective::C5PlusLower => constants::c5_plus_at_max() - y * constants::c5_max(),
            Objective::C5Upper => -constants::c5_max(),
        }
    );
    let support: Vec<usize> = (0..densities.len()).filter(|&f| densities[f].is_positive()).collect();
    let bases: Vec<Matrix> = problem.blocks.iter().map(complement_basis).collect();

    // Float projection onto the complement: M' = G^-1 B M B^T G^-1, G = B B^T.
    let mut projected = Vec::new();
    for (b, m) in bases.iter().zip(&s.blocks) {
        if b.is_empty() {
            projected.push(DMatrix::zeros(0, 0));
            continue;
        }
        let bf = to_dmatrix(b);
        let g = &bf * bf.transpose();
        let ginv = g.try_inverse().ok_or_else(|| Error::Rounding("singular complement basis".into()))?;
        projected.push(&ginv * &bf * m * bf.transpose() * &ginv);
    }

    // Linear map from the upper-triangular entries of every M' to net(F), F in the support.
    let mut params: Vec<(usize, usize, usize)> = Vec::new();
    for (bi, b) in bases.iter().enumerate() {
        for i in 0..b.len() {
            for j in i..b.len() {
                params.push((bi, i, j));
            }
        }
    }
    let congruences: Vec<Vec<Matrix>> = bases
        .iter()
        .zip(&problem.blocks)
        .map(|(b, blk)| support.iter().map(|&f| congruence(b, &blk.tables[f])).collect())
        .collect();
    let a: Matrix = (0..support.len())
        .map(|row| {
            params
                .iter()
                .map(|&(bi, i, j)| {
                    let v = &congruences[bi][row][i][j];
                    if i == j {
                        v.clone()
                    } else {
                        v * int(2)
                    }
                })
                .collect()
        })
        .collect();

    // Correct diagonal entries first: they move eigenvalues least.
    let mut order: Vec<usize> = (0..params.len()).filter(|&p| params[p].1 == params[p].2).collect();
    order.extend((0..params.len()).filter(|&p| params[p].1 != params[p].2));
    let base_round: Vec<Matrix> = projected.iter().map(|m| round_matrix(m, opts.den_cap)).collect::<Result<_>>()?;
    let mut delta = Rational::zero();
    loop {
        let mut primes: Vec<Matrix> = base_round.iter().map(|m| add_identity(m, &delta)).collect();
        let residual: Vec<Rational> = support
            .iter()
            .enumerate()
            .map(|(row, &f)| {
                let sos: Rational = (0..bases.len()).map(|bi| frobenius_dense(&primes[bi], &congruences[bi][row])).sum();
                &obj[f] - &target - sos
            })
            .collect();
        let correction =
            basic_solution(&a, &residual, &order).ok_or_else(|| Error::Rounding("support equations are inconsistent".into()))?;
        for (&(bi, i, j), c) in params.iter().zip(&correction) {
            primes[bi][i][j] += c;
            if i != j {
                primes[bi][j][i] += c;
            }
        }
        if primes.iter().all(|m| ldlt_psd(m).psd) {
            let matrices = bases
                .iter()
                .zip(&primes)
                .zip(&problem.blocks)
                .map(|((b, mp), blk)| {
                    if b.is_empty() {
                        let n = blk.flags.len();
                        vec![vec![Rational::zero(); n]; n]
                    } else {
                        mul(&mul(&transpose(b), mp), b)
                    }
                })
                .collect();
            return Ok((matrices, vec![delta; problem.blocks.len()]));
        }
        delta = if delta.is_zero() { Rational::new(BigInt::from(1), BigInt::from(opts.den_cap)) } else { delta * int(2) };
        if delta > opts.shift_budget {
            return Err(Error::Rounding("corrected kernel matrices are not PSD within the shift budget".into()));
        }
    }
}

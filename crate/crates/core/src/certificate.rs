//! Flag-algebra certificates for linear bounds between `d(C5+)` and `d(C5)`,
//! their text format, and exact verification.
//!
//! A certificate at level `l` consists of a multiplier `y >= 0` and PSD
//! matrices `M_sigma` over flag bases. For every triangle-free graph `F` on
//! `l` vertices the verifier computes
//!
//! ```text
//! net(F) = obj_F - sum_sigma <M_sigma, Q_sigma,F>
//! ```
//!
//! where `obj_F = c_F(C5+) - y c_F(C5)` for the lower-bound objective. Since
//! the squares are non-negative in every graphon and `d(F)` sums to one,
//! `d(C5+) - y d(C5) >= K = min_F net(F)` holds universally.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{asymptotic_check, constants, d_n, final_chain_check, line_ratio};
use crate::error::{Error, Result};
use crate::flags::{
    enumerate_types, expansion_coefficients, frobenius_integer, square_tables, Flag, LevelBasis, SparseSym, Type, MAX_LEVEL,
};
use crate::graph::{c5, c5_plus};
use crate::graph6;
use crate::linalg::{integer_form, is_symmetric, ldlt_psd, Matrix};
use crate::rational::{self, frac, int, Rational};

pub const FORMAT: &str = "pentacheck-certificate";
pub const FORMAT_VERSION: u32 = 1;

/// The bound a certificate is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    /// `d(C5+) >= y d(C5) + K`, read as a line through `LB`.
    C5PlusLower,
    /// `d(C5) <= -K`; `y` must be zero and `LB` is unused.
    C5Upper,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::C5PlusLower => "c5plus-lower",
            Objective::C5Upper => "c5-upper",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "c5plus-lower" => Ok(Objective::C5PlusLower),
            "c5-upper" => Ok(Objective::C5Upper),
            _ => Err(Error::Schema(format!("unknown objective {s:?}"))),
        }
    }

    /// Smallest level at which the objective's graphs can be expanded.
    pub fn min_level(self) -> usize {
        match self {
            Objective::C5PlusLower => 6,
            Objective::C5Upper => 5,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    /// Index into `enumerate_types(k)`.
    pub type_id: usize,
    pub flag_type: Type,
    pub flags: Vec<Flag>,
    pub matrix: Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub objective: Objective,
    pub level: usize,
    pub lb: Rational,
    pub y: Rational,
    pub blocks: Vec<Block>,
    /// Optional solver slacks keyed by graph6; not used as proof content.
    pub slacks: BTreeMap<String, Rational>,
    pub claimed_a: Rational,
    pub claimed_b: Rational,
}

impl Certificate {
    /// The certificate with no blocks and `y = 0`, claiming `0 (x - lb) + 0`.
    pub fn zero(objective: Objective, level: usize, lb: Rational) -> Result<Self> {
        let c = Certificate {
            objective,
            level,
            lb,
            y: int(0),
            blocks: Vec::new(),
            slacks: BTreeMap::new(),
            claimed_a: int(0),
            claimed_b: int(0),
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        if self.level > MAX_LEVEL {
            return Err(Error::Schema(format!("level {} exceeds {MAX_LEVEL}", self.level)));
        }
        if self.level < self.objective.min_level() {
            return Err(Error::Schema(format!(
                "objective {} needs level >= {}, got {}",
                self.objective,
                self.objective.min_level(),
                self.level
            )));
        }
        if self.y.is_negative() {
            return Err(Error::Schema("y is negative".into()));
        }
        if self.objective == Objective::C5Upper && !(self.y.is_zero() && self.lb.is_zero()) {
            return Err(Error::Schema("y and lb must be zero for the c5-upper objective".into()));
        }
        if self.lb.is_negative() || self.lb > constants::c5_max() {
            return Err(Error::Schema("lb must lie in [0, 24/625]".into()));
        }
        for (key, alpha) in &self.slacks {
            if alpha.is_negative() {
                return Err(Error::Schema(format!("slack for {key} is negative")));
            }
            let g = graph6::decode(key)?;
            if g.n() != self.level || !g.is_triangle_free() {
                return Err(Error::Schema(format!("slack key {key} is not a triangle-free graph on {} vertices", self.level)));
            }
        }
        for (b, block) in self.blocks.iter().enumerate() {
            let k = block.flag_type.k();
            if !(self.level + k).is_multiple_of(2) {
                return Err(Error::Parity { level: self.level, k });
            }
            let types = enumerate_types(k);
            if types.get(block.type_id) != Some(&block.flag_type) {
                return Err(Error::Schema(format!("block {b}: type id {} does not match its type", block.type_id)));
            }
            let m = (self.level + k) / 2;
            for (i, f) in block.flags.iter().enumerate() {
                if f.size() != m || f.k() != k || f.flag_type() != block.flag_type {
                    return Err(Error::Schema(format!("block {b}: flag {i} is not a {m}-vertex flag of the block type")));
                }
            }
            let dim = block.flags.len();
            if block.matrix.len() != dim || block.matrix.iter().any(|r| r.len() != dim) {
                return Err(Error::Schema(format!("block {b}: matrix is not {dim}x{dim}")));
            }
            if !is_symmetric(&block.matrix) {
                return Err(Error::Schema(format!("block {b}: matrix is not symmetric")));
            }
        }
        Ok(())
    }

    /// Canonical text form.
    pub fn emit(&self) -> String {
        let doc = Document {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            objective: self.objective.as_str().into(),
            level: self.level,
            lb: rational::format(&self.lb),
            y: rational::format(&self.y),
            claimed_a: rational::format(&self.claimed_a),
            claimed_b: rational::format(&self.claimed_b),
            slacks: self.slacks.iter().map(|(k, v)| (k.clone(), rational::format(v))).collect(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockDoc {
                    type_id: b.type_id,
                    type_size: b.flag_type.k(),
                    matrix: b.matrix.iter().map(|r| r.iter().map(rational::format).collect()).collect(),
                    flags: b
                        .flags
                        .iter()
                        .map(|f| FlagDoc { graph6: graph6::encode(f.graph()), roots: f.roots().to_vec() })
                        .collect(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("certificate documents always serialize")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    objective: String,
    level: usize,
    lb: String,
    y: String,
    claimed_a: String,
    claimed_b: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    slacks: BTreeMap<String, String>,
    #[serde(default, rename = "block", skip_serializing_if = "Vec::is_empty")]
    blocks: Vec<BlockDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    type_id: usize,
    type_size: usize,
    matrix: Vec<Vec<String>>,
    flags: Vec<FlagDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlagDoc {
    graph6: String,
    roots: Vec<usize>,
}

/// Parses and validates a certificate document.
pub fn parse_certificate(text: &str) -> Result<Certificate> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
    if doc.format != FORMAT {
        return Err(Error::Schema(format!("format is {:?}, expected {FORMAT:?}", doc.format)));
    }
    if doc.version != FORMAT_VERSION {
        return Err(Error::Schema(format!("unsupported version {}", doc.version)));
    }
    let mut blocks = Vec::with_capacity(doc.blocks.len());
    for (b, bd) in doc.blocks.into_iter().enumerate() {
        if bd.type_size > MAX_LEVEL {
            return Err(Error::Schema(format!("block {b}: type size {} too large", bd.type_size)));
        }
        let flag_type = enumerate_types(bd.type_size)
            .into_iter()
            .nth(bd.type_id)
            .ok_or_else(|| Error::Schema(format!("block {b}: no type {} of size {}", bd.type_id, bd.type_size)))?;
        let flags = bd.flags.into_iter().map(|f| Flag::new(graph6::decode(&f.graph6)?, f.roots)).collect::<Result<Vec<_>>>()?;
        let matrix = bd
            .matrix
            .iter()
            .map(|r| r.iter().map(|s| rational::parse(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        blocks.push(Block { type_id: bd.type_id, flag_type, flags, matrix });
    }
    let slacks = doc.slacks.into_iter().map(|(k, v)| Ok((k, rational::parse(&v)?))).collect::<Result<BTreeMap<_, _>>>()?;
    let c = Certificate {
        objective: Objective::parse(&doc.objective)?,
        level: doc.level,
        lb: rational::parse(&doc.lb)?,
        y: rational::parse(&doc.y)?,
        blocks,
        slacks,
        claimed_a: rational::parse(&doc.claimed_a)?,
        claimed_b: rational::parse(&doc.claimed_b)?,
    };
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    /// LDL^T found a negative pivot, or a zero pivot with a nonzero remainder.
    NotPsd { block: usize, row: usize, pivot: Rational },
    /// The proven line lies below the claimed one at `endpoint`.
    Dominance { endpoint: Rational, gap: Rational },
    /// The proven upper bound on `d(C5)` exceeds the claimed one.
    UpperBound { proven: Rational, claimed: Rational },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::NotPsd { block, row, pivot } => {
                write!(f, "block {block} is not PSD: pivot at row {row} is {}", rational::format(pivot))
            }
            Failure::Dominance { endpoint, gap } => write!(
                f,
                "proven line is below the claimed line at x = {} by {}",
                rational::format(endpoint),
                rational::format(gap)
            ),
            Failure::UpperBound { proven, claimed } => {
                write!(f, "proven bound d(C5) <= {} exceeds the claimed {}", rational::format(proven), rational::format(claimed))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub valid: bool,
    pub k: Rational,
    /// `net(F) - K` for each level graph, keyed by graph6, in basis order.
    pub per_f_slack: Vec<(String, Rational)>,
    /// For `C5PlusLower`: `y` and `K + y lb`. For `C5Upper`: `0` and `-K`.
    pub proven_a: Rational,
    pub proven_b: Rational,
    /// The right endpoint of the dominance check relies on `d(C5) <= 24/625`.
    pub depends_on_c5_bound: bool,
    pub failure: Option<Failure>,
}

impl Verdict {
    /// Value of the universal proven line `y x + K` (lower objective only).
    pub fn universal_at(&self, x: &Rational) -> Rational {
        &self.proven_a * x + &self.k
    }
}

type TableKey = (usize, Vec<u16>, Vec<Vec<u8>>);

/// Square tables are pure functions of the type, the flag classes and the
/// level; tampering experiments re-verify the same bases many times.
fn cached_tables(t: &Type, flags: &[Flag], level: usize) -> Result<Arc<Vec<SparseSym>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<Vec<SparseSym>>>>> = OnceLock::new();
    let key = (level, t.sigma().masks().to_vec(), flags.iter().map(|f| f.canonical().bytes).collect());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("table cache").get(&key) {
        return Ok(hit.clone());
    }
    let tables = Arc::new(square_tables(t, flags, level)?);
    cache.lock().expect("table cache").insert(key, tables.clone());
    Ok(tables)
}

/// `obj_F` for every level graph.
pub fn objective_coefficients(objective: Objective, level: usize, y: &Rational) -> Result<Vec<Rational>> {
    let c5c = expansion_coefficients(&c5(), level)?;
    Ok(match objective {
        Objective::C5PlusLower => {
            let plus = expansion_coefficients(&c5_plus(), level)?;
            plus.entries.iter().zip(&c5c.entries).map(|(p, q)| p - y * q).collect()
        }
        Objective::C5Upper => c5c.entries.iter().map(|q| -q).collect(),
    })
}

/// `net(F)` for every level graph, in basis order.
pub fn net_coefficients(c: &Certificate) -> Result<Vec<Rational>> {
    let mut net = objective_coefficients(c.objective, c.level, &c.y)?;
    let sos: Vec<Vec<Rational>> = c
        .blocks
        .par_iter()
        .map(|b| {
            let tables = cached_tables(&b.flag_type, &b.flags, c.level)?;
            let (scale, a) = integer_form(&b.matrix);
            Ok(tables.iter().map(|q| frobenius_integer(&a, &scale, q)).collect())
        })
        .collect::<Result<_>>()?;
    for s in &sos {
        for (n, v) in net.iter_mut().zip(s) {
            *n -= v;
        }
    }
    Ok(net)
}

/// `a d(C5) + k` with the sign of `k` folded in.
fn line_text(a: &Rational, k: &Rational) -> String {
    let sign = if k.is_negative() { '-' } else { '+' };
    format!("{} d(C5) {sign} {}", rational::format(a), rational::format(&k.abs()))
}

/// Exact verification. Structural problems are errors; mathematical failures
/// produce an invalid verdict that names the failure.
pub fn verify_certificate(c: &Certificate) -> Result<Verdict> {
    c.validate()?;
    let basis = LevelBasis::get(c.level)?;
    let net = net_coefficients(c)?;
    let k = net.iter().min().cloned().expect("level bases are nonempty");
    let per_f_slack = basis.graphs.iter().zip(&net).map(|(g, v)| (graph6::encode(g), v - &k)).collect();
    let mut failure = c.blocks.iter().enumerate().find_map(|(i, b)| {
        let r = ldlt_psd(&b.matrix);
        r.failure.map(|(row, pivot)| Failure::NotPsd { block: i, row, pivot })
    });
    let (proven_a, proven_b, depends) = match c.objective {
        Objective::C5PlusLower => {
            let a = c.y.clone();
            let b = &k + &c.y * &c.lb;
            if failure.is_none() {
                for x in [c.lb.clone(), constants::c5_max()] {
                    let proven = &a * (&x - &c.lb) + &b;
                    let claimed = &c.claimed_a * (&x - &c.lb) + &c.claimed_b;
                    if proven < claimed {
                        failure = Some(Failure::Dominance { endpoint: x, gap: claimed - proven });
                        break;
                    }
                }
            }
            (a, b, true)
        }
        Objective::C5Upper => {
            let u = -k.clone();
            if failure.is_none() && u > c.claimed_b {
                failure = Some(Failure::UpperBound { proven: u.clone(), claimed: c.claimed_b.clone() });
            }
            (int(0), u, false)
        }
    };
    Ok(Verdict { valid: failure.is_none(), k, per_f_slack, proven_a, proven_b, depends_on_c5_bound: depends, failure })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Certificate,
    SmallN,
    Asymptotic,
    Final,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainStep {
    pub kind: StepKind,
    pub name: String,
    pub passed: bool,
    pub margin: Option<Rational>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    pub steps: Vec<ChainStep>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.passed)
    }

    pub fn first_failure(&self) -> Option<&ChainStep> {
        self.steps.iter().find(|s| !s.passed)
    }

    pub fn count(&self, kind: StepKind) -> usize {
        self.steps.iter().filter(|s| s.kind == kind).count()
    }

    /// Whether every step of the given kinds passed.
    pub fn passed_kinds(&self, kinds: &[StepKind]) -> bool {
        self.steps.iter().filter(|s| kinds.contains(&s.kind)).all(|s| s.passed)
    }
}

fn certificate_step(name: &str, c: &Certificate) -> Result<(ChainStep, Option<Verdict>)> {
    if c.objective != Objective::C5PlusLower {
        let step = ChainStep {
            kind: StepKind::Certificate,
            name: name.into(),
            passed: false,
            margin: None,
            detail: format!("objective is {}, expected c5plus-lower", c.objective),
        };
        return Ok((step, None));
    }
    let v = verify_certificate(c)?;
    let detail = match &v.failure {
        None => format!("valid: d(C5+) >= {}", line_text(&v.proven_a, &v.k)),
        Some(f) => f.to_string(),
    };
    let step = ChainStep { kind: StepKind::Certificate, name: name.into(), passed: v.valid, margin: None, detail };
    Ok((step, Some(v)))
}

/// Lower end of the `d(C5)` range the large-n branch needs: `0.0384 (1 - 50/100^2)`.
pub fn large_n_floor() -> Rational {
    constants::c5_max() * (int(1) - frac(50, 10_000))
}

/// End-to-end check of both branches of the stability lemma.
///
/// Small `n`: the lower certificate's claimed line (valid on `[LB, 24/625]`)
/// gives `d(C5+)/(3 d(C5)) > 1 - 1/n` for every `d(C5)` in `[d_n, 24/625]`;
/// the ratio is monotone in `d(C5)`, so both endpoints suffice.
///
/// Large `n`: the tight certificate's universal line dominates
/// `6 (x - 0.0384) + 0.1152` on `[0.0384 (1 - 50/100^2), 0.0384]`, the
/// residue-class polynomials show `d_n > 0.0384 (1 - 50/n^2)`, and the chain
/// closes with `1 - 100/n^2 >= 1 - 1/n`.
pub fn verify_claim_chain(low: &Certificate, tight: &Certificate) -> Result<ChainReport> {
    let mut steps = Vec::new();
    let (step, _) = certificate_step("lowbound certificate", low)?;
    let low_ok = step.passed;
    steps.push(step);
    let c = constants::c5_max();
    for n in 10..100u64 {
        let d = d_n(n);
        let target = int(1) - frac(1, n as i64);
        let name = format!("small n={n}");
        if d < low.lb {
            steps.push(ChainStep {
                kind: StepKind::SmallN,
                name,
                passed: false,
                margin: None,
                detail: format!("d_n = {} is below lb", rational::format(&d)),
            });
            continue;
        }
        let margin = [d.clone(), c.clone()]
            .iter()
            .map(|x| line_ratio(&low.claimed_a, &low.lb, &low.claimed_b, x) - &target)
            .min()
            .expect("two endpoints");
        let passed = low_ok && margin.is_positive();
        let detail = if low_ok { "claimed line of a valid certificate".into() } else { "lowbound certificate not valid".into() };
        steps.push(ChainStep { kind: StepKind::SmallN, name, passed, margin: Some(margin), detail });
    }

    let (mut step, tight_verdict) = certificate_step("tightup certificate", tight)?;
    if let Some(v) = &tight_verdict {
        if v.valid {
            let floor = large_n_floor();
            let margin = [floor, c.clone()]
                .iter()
                .map(|x| v.universal_at(x) - (constants::tight_slope() * (x - &c) + constants::c5_plus_at_max()))
                .min()
                .expect("two endpoints");
            step.passed = !margin.is_negative();
            step.detail = format!(
                "d(C5+) >= {} against 6 (x - 0.0384) + 0.1152 on [0.0384 (1 - 50/10^4), 0.0384]",
                line_text(&v.proven_a, &v.k)
            );
            step.margin = Some(margin);
        }
    }
    let tight_ok = step.passed;
    steps.push(step);
    for i in 0..5 {
        let a = asymptotic_check(i, 20)?;
        steps.push(ChainStep {
            kind: StepKind::Asymptotic,
            name: format!("residue {i} mod 5"),
            passed: a.holds,
            margin: None,
            detail: format!("d_n > 0.0384 (1 - 50/n^2) for n = 5m + {i}, m >= 20"),
        });
    }
    let fc = final_chain_check(100)?;
    steps.push(ChainStep {
        kind: StepKind::Final,
        name: "final chain".into(),
        passed: tight_ok && fc.holds,
        margin: Some(fc.margin),
        detail: "1 - 100/n^2 >= 1 - 1/n for n >= 100, equality at n = 100".into(),
    });
    Ok(ChainReport { steps })
}

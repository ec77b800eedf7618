use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pentacheck::certificate::{parse_certificate, verify_certificate, verify_claim_chain, Certificate, Objective};
use pentacheck::density::{asymptotic_check, final_chain_check, lemma_ratio_small_n};
use pentacheck::enumerate::{
    enumerate_triangle_free, enumerate_triangle_free_par, extremal_c5, extremal_c5_par, MAX_ENUMERATION,
};
use pentacheck::graph::c5_product_formula;
use pentacheck::graph6;
use pentacheck::rational::{self, Rational};
use pentacheck::sdp::{generate, parse_solution, round_solution, ProblemSpec, RoundMode, RoundOptions};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "pentacheck", version, about = "Exact checks for 5-cycles in triangle-free graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Worker threads; 1 keeps the sequential schedule.
    #[arg(long, default_value_t = 1, global = true)]
    workers: usize,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Rows,
}

#[derive(Subcommand)]
enum Command {
    /// Count triangle-free graphs up to isomorphism.
    Census(RangeArgs),
    /// Maximum number of 5-cycles and all maximizers.
    Extremal(RangeArgs),
    /// Both branches of the stability lemma.
    LemmaCheck(LemmaArgs),
    /// Verify a certificate exactly.
    Verify { certificate: PathBuf },
    /// Write the SDP problem file.
    SdpGen(ProblemArgs),
    /// Round a solver solution to an exact certificate.
    Round(RoundArgs),
}

#[derive(Args)]
struct RangeArgs {
    /// A single vertex count.
    #[arg(long, conflicts_with = "range")]
    n: Option<usize>,
    /// Inclusive range `a..b`.
    #[arg(long)]
    range: Option<String>,
}

#[derive(Args)]
struct LemmaArgs {
    /// Certificate for the lower-bound line; with `--tight`, runs the full chain.
    #[arg(long, requires = "tight")]
    low: Option<PathBuf>,
    /// Certificate for the tight line.
    #[arg(long, requires = "low")]
    tight: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    C5plusLower,
    C5Upper,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, default_value_t = 6)]
    level: usize,
    #[arg(long, default_value = "0")]
    lb: String,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::C5plusLower)]
    objective: ObjectiveArg,
    /// Fix the multiplier of d(C5).
    #[arg(long)]
    fix_y: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Shift,
    Sharp,
}

#[derive(Args)]
struct RoundArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// CSDP-format solution file.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    den_cap: u64,
    #[arg(long, default_value = "1/1000")]
    shift_budget: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Shift)]
    mode: ModeArg,
    /// Claimed slope; defaults to the proven line.
    #[arg(long, requires = "claim_b")]
    claim_a: Option<String>,
    #[arg(long)]
    claim_b: Option<String>,
}

/// Usage/IO problems (exit 2) versus checks that came out false (exit 1).
enum Failure {
    Usage(String),
    Math(String),
}

impl From<pentacheck::Error> for Failure {
    fn from(e: pentacheck::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

struct Report {
    format: Format,
    text: String,
    ok: bool,
}

impl Report {
    fn new(format: Format, command: &str, columns: &[&str]) -> Self {
        let mut text = String::new();
        if format == Format::Rows {
            let _ = writeln!(text, "# pentacheck {VERSION} {command}");
            let _ = writeln!(text, "# {}", columns.join("\t"));
        }
        Report { format, text, ok: true }
    }

    fn row(&mut self, fields: &[String], line: impl FnOnce() -> String) {
        match self.format {
            Format::Rows => {
                let _ = writeln!(self.text, "{}", fields.join("\t"));
            }
            Format::Text => {
                let _ = writeln!(self.text, "{}", line());
            }
        }
    }

    fn note(&mut self, line: &str) {
        let prefix = if self.format == Format::Rows { "# " } else { "" };
        let _ = writeln!(self.text, "{prefix}{line}");
    }
}

fn parse_range(args: &RangeArgs) -> Result<(usize, usize), Failure> {
    let (a, b) = match (&args.n, &args.range) {
        (Some(n), _) => (*n, *n),
        (None, Some(r)) => {
            let (a, b) = r.split_once("..").ok_or_else(|| Failure::Usage(format!("range {r:?} is not a..b")))?;
            let num = |s: &str| s.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("bad range bound {s:?}")));
            (num(a)?, num(b.trim_start_matches('='))?)
        }
        (None, None) => return Err(Failure::Usage("give --n or --range".into())),
    };
    if a > b {
        return Err(Failure::Usage(format!("empty range {a}..{b}")));
    }
    if b > MAX_ENUMERATION {
        return Err(Failure::Usage(format!("n is limited to {MAX_ENUMERATION}")));
    }
    Ok((a, b))
}

fn parse_rational(s: &str) -> Result<Rational, Failure> {
    rational::parse(s).map_err(|e| Failure::Usage(e.to_string()))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn census(cli: &Cli, args: &RangeArgs) -> Result<Report, Failure> {
    let (a, b) = parse_range(args)?;
    let mut r = Report::new(cli.format, "census", &["n", "classes", "cumulative"]);
    let mut cumulative = 0u64;
    let mut from_zero = 0u64;
    for n in 0..=b {
        let count = if cli.workers > 1 { enumerate_triangle_free_par(n, |_| {})? } else { enumerate_triangle_free(n, |_| {})? };
        from_zero += count;
        if n < a {
            continue;
        }
        cumulative += count;
        r.row(&[n.to_string(), count.to_string(), cumulative.to_string()], || {
            format!("n={n:<3} classes={count:<8} cumulative={cumulative}")
        });
    }
    if a == 0 {
        r.note(&format!("total 0..{b}: {from_zero}"));
    } else {
        r.note(&format!("total {a}..{b}: {cumulative}; total 0..{b}: {from_zero}"));
    }
    Ok(r)
}

fn extremal(cli: &Cli, args: &RangeArgs) -> Result<Report, Failure> {
    let (a, b) = parse_range(args)?;
    let mut r = Report::new(cli.format, "extremal", &["n", "max_c5", "winners", "formula", "matches", "graph6"]);
    for n in a..=b {
        let c = if cli.workers > 1 { extremal_c5_par(n)? } else { extremal_c5(n)? };
        let formula = if n >= 5 { c5_product_formula(n as u64) } else { 0 };
        let matches = formula == c.max_c5;
        r.ok &= matches;
        let g6: Vec<String> = c.winners.iter().map(|w| graph6::encode(&w.graph)).collect();
        r.row(
            &[
                n.to_string(),
                c.max_c5.to_string(),
                c.winners.len().to_string(),
                formula.to_string(),
                matches.to_string(),
                g6.join(","),
            ],
            || {
                format!(
                    "n={n:<3} max={:<6} winners={:<4} formula={formula:<6} {}  {}",
                    c.max_c5,
                    c.winners.len(),
                    if matches { "ok" } else { "MISMATCH" },
                    g6.join(" ")
                )
            },
        );
    }
    Ok(r)
}

fn lemma_check(cli: &Cli, args: &LemmaArgs) -> Result<Report, Failure> {
    let mut r = Report::new(cli.format, "lemma-check", &["kind", "step", "passed", "margin"]);
    if let (Some(low), Some(tight)) = (&args.low, &args.tight) {
        let low = parse_certificate(&read(low)?)?;
        let tight = parse_certificate(&read(tight)?)?;
        let report = verify_claim_chain(&low, &tight)?;
        for s in &report.steps {
            let margin = s.margin.as_ref().map(rational::format).unwrap_or_else(|| "-".into());
            r.row(&[format!("{:?}", s.kind), s.name.clone(), s.passed.to_string(), margin.clone()], || {
                format!("{:<5} {:<22} margin={margin}  {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail)
            });
        }
        r.ok = report.passed();
        if let Some(f) = report.first_failure() {
            r.note(&format!("first failing step: {}", f.name));
        }
        return Ok(r);
    }
    // Without certificates, the claimed lines are taken as given.
    for n in 10..100 {
        let c = lemma_ratio_small_n(n)?;
        r.ok &= c.holds;
        let m = rational::format(&c.margin);
        r.row(&["SmallN".into(), format!("n={n}"), c.holds.to_string(), m.clone()], || {
            format!("{:<5} small n={n:<3} margin={}", pass(c.holds), rational::to_decimal(&c.margin, 12))
        });
    }
    for i in 0..5 {
        let c = asymptotic_check(i, 20)?;
        r.ok &= c.holds;
        r.row(&["Asymptotic".into(), format!("residue {i}"), c.holds.to_string(), "-".into()], || {
            format!("{:<5} residue {i} mod 5, m >= 20", pass(c.holds))
        });
    }
    let c = final_chain_check(100)?;
    r.ok &= c.holds;
    let m = rational::format(&c.margin);
    r.row(&["Final".into(), "final chain".into(), c.holds.to_string(), m.clone()], || {
        format!("{:<5} final chain at n=100, margin={m}", pass(c.holds))
    });
    Ok(r)
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verify(cli: &Cli, path: &Path) -> Result<Report, Failure> {
    let c = parse_certificate(&read(path)?)?;
    let v = verify_certificate(&c)?;
    let mut r = Report::new(cli.format, "verify", &["field", "value"]);
    let fields = [
        ("valid", v.valid.to_string()),
        ("objective", c.objective.to_string()),
        ("level", c.level.to_string()),
        ("k", rational::format(&v.k)),
        ("proven_a", rational::format(&v.proven_a)),
        ("proven_b", rational::format(&v.proven_b)),
        ("claimed_a", rational::format(&c.claimed_a)),
        ("claimed_b", rational::format(&c.claimed_b)),
        ("failure", v.failure.as_ref().map(|f| f.to_string()).unwrap_or_else(|| "-".into())),
    ];
    for (k, val) in fields {
        r.row(&[k.into(), val.clone()], || format!("{k:<10} {val}"));
    }
    match c.objective {
        Objective::C5PlusLower => r.note(&format!(
            "proves d(C5+) >= {} (d(C5) - {}) + {} for d(C5) >= {}",
            rational::format(&v.proven_a),
            rational::format(&c.lb),
            rational::format(&v.proven_b),
            rational::format(&c.lb)
        )),
        Objective::C5Upper => r.note(&format!("proves d(C5) <= {}", rational::format(&v.proven_b))),
    }
    r.ok = v.valid;
    Ok(r)
}

fn spec(args: &ProblemArgs) -> Result<ProblemSpec, Failure> {
    Ok(ProblemSpec {
        objective: match args.objective {
            ObjectiveArg::C5plusLower => Objective::C5PlusLower,
            ObjectiveArg::C5Upper => Objective::C5Upper,
        },
        level: args.level,
        lb: parse_rational(&args.lb)?,
        fixed_y: args.fix_y.as_deref().map(parse_rational).transpose()?,
    })
}

fn sdp_gen(args: &ProblemArgs) -> Result<String, Failure> {
    Ok(generate(&spec(args)?)?.to_sdpa())
}

fn round(cli: &Cli, args: &RoundArgs) -> Result<(Report, Certificate), Failure> {
    let problem = generate(&spec(&args.problem)?)?;
    let solution = parse_solution(&read(&args.solution)?, &problem)?;
    let claim = match (&args.claim_a, &args.claim_b) {
        (Some(a), Some(b)) => Some((parse_rational(a)?, parse_rational(b)?)),
        (None, Some(b)) => Some((Rational::from_integer(0.into()), parse_rational(b)?)),
        _ => None,
    };
    let opts = RoundOptions {
        den_cap: args.den_cap,
        shift_budget: parse_rational(&args.shift_budget)?,
        mode: match args.mode {
            ModeArg::Shift => RoundMode::Shift,
            ModeArg::Sharp => RoundMode::Sharp,
        },
        claim,
    };
    let rounded = round_solution(&problem, &solution, &opts).map_err(|e| Failure::Math(e.to_string()))?;
    let mut r = Report::new(cli.format, "round", &["field", "value"]);
    let v = &rounded.verdict;
    let fields = [
        ("y", rational::format(&rounded.certificate.y)),
        ("k", rational::format(&v.k)),
        ("proven_a", rational::format(&v.proven_a)),
        ("proven_b", rational::format(&v.proven_b)),
        ("claimed_a", rational::format(&rounded.certificate.claimed_a)),
        ("claimed_b", rational::format(&rounded.certificate.claimed_b)),
        ("float_objective", format!("{:.12}", rounded.float_objective)),
        ("rounding_gain", format!("{:.3e}", rounded.rounding_gain)),
    ];
    for (k, val) in fields {
        r.row(&[k.into(), val.clone()], || format!("{k:<16} {val}"));
    }
    Ok((r, rounded.certificate))
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    if cli.workers == 0 {
        return Err(Failure::Usage("--workers must be positive".into()));
    }
    if cli.workers > 1 {
        // A second initialisation only happens in tests; the pool size is then already set.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    let report = match &cli.command {
        Command::Census(a) => census(cli, a)?,
        Command::Extremal(a) => extremal(cli, a)?,
        Command::LemmaCheck(a) => lemma_check(cli, a)?,
        Command::Verify { certificate } => verify(cli, certificate)?,
        Command::SdpGen(a) => {
            write_out(&cli.out, &sdp_gen(a)?)?;
            return Ok(true);
        }
        Command::Round(a) => {
            let (report, cert) = round(cli, a)?;
            write_out(&cli.out, &cert.emit())?;
            if cli.out.is_some() {
                print!("{}", report.text);
            }
            return Ok(true);
        }
    };
    write_out(&cli.out, &report.text)?;
    Ok(report.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Math(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

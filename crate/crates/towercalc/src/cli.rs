//! Command-line surface. Commands write to caller-supplied streams and
//! return an exit code: 0 ok, 1 check failure, 2 usage or invalid input,
//! 3 internal error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use towercalc_core::atlas::Atlas;
use towercalc_core::error::{check_dimension, Error};
use towercalc_core::expansion::{expand, classify_harmonic, membership_filter, IntegrabilityFlags};
use towercalc_core::harmonic_spaces::{mu, SeedProvider};
use towercalc_core::index_algebra::{
    is_exceptional_weight, validate_hypotheses, ExceptionalWeights, HypothesisInput, TheoremId, WeightedIndexQuery,
};
use towercalc_core::scalar::{self, Rational};
use towercalc_core::static_operator::apply_l_power;
use towercalc_core::towers::{
    build_tower_pair, verify_family, verify_independence, verify_low_floor_harmonicity, verify_odd_floor_structure,
    Role, Sign, TowerFamily,
};

use crate::cache::SharedSeedCache;
use crate::json;

pub const EXCEPTIONAL_WARNING: &str = "warning: exceptional weight, theorems inapplicable";

#[derive(Parser, Debug)]
#[command(name = "towercalc", version, about = "Exact tower forms for Maxwell systems on R^N")]
pub struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build tower families and write them as JSON.
    Build(BuildArgs),
    /// Re-check every relation of a towers file.
    Verify(VerifyArgs),
    /// Expand a solution pair in tower forms.
    Expand(ExpandArgs),
    /// Classify the non-integrable part of a harmonic form.
    Classify(ClassifyArgs),
    /// Table of tower indices excluded from a weighted L^2 space.
    Indices(IndicesArgs),
    /// List exceptional weights.
    Weights(WeightsArgs),
    /// Apply powers of the static operator to a tower profile.
    Iterate(IterateArgs),
    /// Seed-space dimensions.
    Dims(DimsArgs),
    /// Check the hypotheses of a named theorem.
    Hypotheses(HypothesesArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    D,
    R,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Role {
        match r {
            RoleArg::D => Role::D,
            RoleArg::R => Role::R,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub n: usize,
    /// Rank; all ranks 0..=N when omitted.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub sign: SignArg,
    /// A single sigma; overrides --sigma-max.
    #[arg(long)]
    pub sigma: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub sigma_max: u32,
    #[arg(long, default_value_t = 3)]
    pub floors: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub path: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExpandArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub floors: u32,
    /// Weights for the membership report; repeatable.
    #[arg(long = "weight", value_parser = parse_rational, allow_hyphen_values = true)]
    pub weights: Vec<Rational>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// A file of kind "form" holding a harmonic form.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub weight: Rational,
    /// Override the degree test for rot E.
    #[arg(long)]
    pub rot_ok: Option<bool>,
    #[arg(long)]
    pub div_ok: Option<bool>,
}

#[derive(Args, Debug)]
pub struct IndicesArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: usize,
    #[arg(long)]
    pub max_floor: u32,
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub weight: Rational,
    #[arg(long, value_enum, default_value = "d")]
    pub role: RoleArg,
    /// Include positive-sign indices with sigma up to this bound.
    #[arg(long)]
    pub sigma_max: Option<u32>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct WeightsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub list: usize,
}

#[derive(Args, Debug)]
pub struct IterateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: usize,
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub weight: Rational,
    #[arg(long)]
    pub power: u32,
    /// A file of kind "profile".
    #[arg(long)]
    pub seed: PathBuf,
    /// Decay rate of the data, for the hypothesis check.
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub tau: Option<Rational>,
}

#[derive(Args, Debug)]
pub struct DimsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub sigma_max: u32,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct HypothesesArgs {
    /// maxwell-isomorphism, generalized-problem or iterated-operator.
    #[arg(long)]
    pub theorem: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub weight: Rational,
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub tau: Option<Rational>,
    #[arg(long)]
    pub j: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub h_max: Option<i32>,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    scalar::parse(s).map_err(|e| e.to_string())
}

/// Failure of a command, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Read(PathBuf, String),
    Write(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Write(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::NotInSpan(_)) => 1,
            CliError::Core(Error::ConstructionFailure(_) | Error::ConsistencyFailure(_)) => 3,
            CliError::Core(_) | CliError::Read(..) => 2,
            CliError::Write(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::InvalidInput(m) if m.starts_with("parse error") => "parse-error",
                Error::InvalidInput(_) => "invalid-input",
                Error::DimensionMismatch(_) => "dimension-mismatch",
                Error::GradeOverflow { .. } => "grade-overflow",
                Error::GradeUnderflow => "grade-underflow",
                Error::UnsupportedDimension(_) => "unsupported-dimension",
                Error::ConstructionFailure(_) => "construction-failure",
                Error::ConsistencyFailure(_) => "consistency-failure",
                Error::NotInSpan(_) => "not-in-span",
                Error::HypothesisViolation(_) => "hypothesis-violation",
                Error::NegativeHeight => "negative-height",
                Error::UnknownTheorem(_) => "unknown-theorem",
            },
            CliError::Read(..) => "io-read",
            CliError::Write(_) => "io-write",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Read(p, m) => format!("cannot read {}: {m}", p.display()),
            CliError::Write(m) => format!("cannot write output: {m}"),
        }
    }

    /// Machine-readable record printed on stderr.
    pub fn record(&self) -> Value {
        json!({"schema": json::SCHEMA, "kind": "error", "error": self.kind(), "message": self.message()})
    }
}

type CmdResult = Result<i32, CliError>;

/// Output streams for a command.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub verbose: bool,
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli, cache: &SharedSeedCache, io: &mut Io) -> i32 {
    io.verbose |= cli.verbose;
    let res = match cli.command {
        Command::Build(a) => cmd_build(&a, cache, io),
        Command::Verify(a) => cmd_verify(&a.path, cache, io),
        Command::Expand(a) => cmd_expand(&a, cache, io),
        Command::Classify(a) => cmd_classify(&a, cache, io),
        Command::Indices(a) => cmd_indices(&a, cache, io),
        Command::Weights(a) => cmd_weights(&a, io),
        Command::Iterate(a) => cmd_iterate(&a, cache, io),
        Command::Dims(a) => cmd_dims(&a, cache, io),
        Command::Hypotheses(a) => cmd_hypotheses(&a, io),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "{}", e.record());
            e.exit_code()
        }
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Read(path.to_path_buf(), e.to_string()))?;
    Ok(json::parse_text(&text, &path.display().to_string())?)
}

fn emit(v: &Value, out_path: Option<&Path>, io: &mut Io) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Write(e.to_string()))? + "\n";
    match out_path {
        Some(p) => {
            fs::write(p, text).map_err(|e| CliError::Write(format!("{}: {e}", p.display())))?;
            if io.verbose {
                writeln!(io.err, "wrote {}", p.display())?;
            }
        }
        None => io.out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn signs(s: SignArg) -> Vec<Sign> {
    match s {
        SignArg::Plus => vec![Sign::Plus],
        SignArg::Minus => vec![Sign::Minus],
        SignArg::Both => Sign::BOTH.to_vec(),
    }
}

/// Builds every requested nonempty family, in `(q, sign, sigma)` order
/// with `+` first.
pub fn build_families(cache: &SharedSeedCache, a: &BuildArgs) -> Result<Vec<TowerFamily>, Error> {
    check_dimension(a.n)?;
    if let Some(q) = a.q {
        if q > a.n {
            return Err(Error::GradeOverflow { q, n: a.n });
        }
    }
    let qs: Vec<usize> = match a.q {
        Some(q) => vec![q],
        None => (0..=a.n).collect(),
    };
    let sigmas: Vec<u32> = match a.sigma {
        Some(s) => vec![s],
        None => (0..=a.sigma_max).collect(),
    };
    let mut keys = Vec::new();
    for &q in &qs {
        for sign in signs(a.sign) {
            for &sigma in &sigmas {
                let p: &dyn SeedProvider = cache;
                let mu_r = if q < a.n { mu(p, a.n, q + 1, sigma)? } else { 0 };
                if mu(p, a.n, q, sigma)? + mu_r > 0 {
                    keys.push((q, sign, sigma));
                }
            }
        }
    }
    let built: Vec<Result<TowerFamily, Error>> =
        keys.par_iter().map(|&(q, sign, sigma)| build_tower_pair(cache, a.n, q, sign, sigma, a.floors)).collect();
    built.into_iter().collect()
}

pub fn cmd_build(a: &BuildArgs, cache: &SharedSeedCache, io: &mut Io) -> CmdResult {
    let fams = build_families(cache, a)?;
    if io.verbose {
        writeln!(io.err, "built {} families", fams.len())?;
    }
    emit(&json::towers_to_json(a.n, &fams), a.out.as_deref(), io)?;
    Ok(0)
}

/// Every exact check on a set of families, as printable lines.
pub struct VerifyReport {
    pub passed: usize,
    pub failures: Vec<String>,
}

pub fn verify_families(cache: &SharedSeedCache, fams: &[TowerFamily]) -> Result<VerifyReport, Error> {
    let per_family: Vec<Result<(usize, Vec<String>), Error>> = fams
        .par_iter()
        .map(|fam| {
            let mut passed = 0;
            let mut failures = Vec::new();
            for c in verify_family(cache, fam)? {
                if c.passed {
                    passed += 1;
                } else {
                    failures.push(c.to_string());
                }
            }
            let h = verify_low_floor_harmonicity(fam);
            passed += 1;
            failures.extend(h.low_floor_failures.iter().map(|l| format!("FAIL harmonicity of low floors at {l}")));
            let o = verify_odd_floor_structure(fam)?;
            passed += 1;
            failures.extend(o.failures.iter().map(|(l, m)| format!("FAIL odd floor structure at {l}: {m}")));
            Ok((passed, failures))
        })
        .collect();
    let mut rep = VerifyReport { passed: 0, failures: Vec::new() };
    for r in per_family {
        let (p, f) = r?;
        rep.passed += p;
        rep.failures.extend(f);
    }
    for (rank, h, ok) in verify_independence(fams) {
        if ok {
            rep.passed += 1;
        } else {
            rep.failures.push(format!("FAIL combined independence at rank {rank}, degree {h}"));
        }
    }
    Ok(rep)
}

pub fn cmd_verify(path: &Path, cache: &SharedSeedCache, io: &mut Io) -> CmdResult {
    let v = read_json(path)?;
    let (n, fams) = json::towers_from_json(&v)?;
    let rep = verify_families(cache, &fams)?;
    for f in &rep.failures {
        writeln!(io.out, "{f}")?;
    }
    writeln!(
        io.out,
        "N={n}: {} families, {} checks passed, {} failed",
        fams.len(),
        rep.passed,
        rep.failures.len()
    )?;
    Ok(if rep.failures.is_empty() { 0 } else { 1 })
}

fn offending_table(rep: &towercalc_core::expansion::MembershipReport) -> String {
    let mut s = format!("weight {}: ", scalar::fmt(&rep.s));
    if rep.offending.is_empty() {
        s.push_str(if rep.complete { "in L^2\n" } else { "no offending terms, residual nonzero\n" });
        return s;
    }
    s.push_str("offending terms\n  role  index\n");
    for (role, i) in &rep.offending {
        s.push_str(&format!("  {role:<4}  {i}\n"));
    }
    s
}

pub fn cmd_expand(a: &ExpandArgs, cache: &SharedSeedCache, io: &mut Io) -> CmdResult {
    let pair = json::pair_from_json(&read_json(&a.input)?)?;
    let atlas = Atlas::new(cache, pair.dim())?;
    let res = expand(&atlas, &pair, a.floors)?;
    let mut v = json::expansion_to_json(&res);
    let mut reports = Vec::new();
    for s in &a.weights {
        if is_exceptional_weight(s, res.n) {
            writeln!(io.err, "{EXCEPTIONAL_WARNING}")?;
        }
        let m = membership_filter(&res, s, a.floors);
        io.err.write_all(offending_table(&m).as_bytes())?;
        reports.push(json!({
            "weight": scalar::fmt(s),
            "in_space": m.in_space(),
            "complete": m.complete,
            "offending": m.offending.iter().map(|(r, i)| json!({"role": r.to_string(), "index": i.to_string()})).collect::<Vec<_>>(),
        }));
    }
    v["membership"] = Value::Array(reports);
    if !res.in_span() {
        writeln!(io.err, "not in span: residual is nonzero")?;
    }
    emit(&v, a.out.as_deref(), io)?;
    Ok(0)
}

pub fn cmd_classify(a: &ClassifyArgs, cache: &SharedSeedCache, io: &mut Io) -> CmdResult {
    let v = read_json(&a.input)?;
    json::check_schema(&v, "form")?;
    let f = json::form_from_json(v.get("form").unwrap_or(&Value::Null), "$.form")?;
    let atlas = Atlas::new(cache, f.dim())?;
    let c = classify_harmonic(&atlas, &f, &a.weight, IntegrabilityFlags { rot_ok: a.rot_ok, div_ok: a.div_ok })?;
    let coeffs: serde_json::Map<String, Value> =
        c.coeffs.iter().map(|(k, v)| (k.to_string(), json::rational_to_json(v))).collect();
    let out = json!({
        "schema": json::SCHEMA,
        "kind": "classification",
        "branch": format!("{:?}", c.branch),
        "rot_ok": c.rot_ok,
        "div_ok": c.div_ok,
        "coeffs": coeffs,
        "exceptional_form": c.exceptional_form.as_ref().map(json::tower_ref_to_json),
        "exceptional": c.exceptional.as_ref().map(json::rational_to_json),
        "represented": c.residual.is_zero(),
        "positive_terms": c.positive_terms.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
        "residual": json::form_to_json(&c.residual),
    });
    emit(&out, None, io)?;
    Ok(if c.residual.is_zero() { 0 } else { 1 })
}

pub fn cmd_indices(a: &IndicesArgs, cache: &SharedSeedCache, io: &mut Io) -> CmdResult {
    check_dimension(a.n)?;
    if is_exceptional_weight(&a.weight, a.n) {
        writeln!(io.err, "{EXCEPTIONAL_WARNING}")?;
    }
    let role: Role = a.role.into();
    let mut q = WeightedIndexQuery::negative(a.n, a.q, a.max_floor, a.weight.clone(), role);
    if a.sigma_max.is_some() {
        q.sign_filter = None;
        q.sigma_max = a.sigma_max;
    }
    let ix = q.excluded(cache)?;
    match a.format {
        Format::Csv => {
            writeln!(io.out, "sign,k,sigma,m,degree")?;
            for i in &ix {
                writeln!(io.out, "{},{},{},{},{}", json::sign_str(i.sign), i.k, i.sigma, i.m, i.degree(a.n))?;
            }
        }
        Format::Json => {
            let rows: Vec<Value> = ix
                .iter()
                .map(|i| json!({"sign": json::sign_str(i.sign), "k": i.k, "sigma": i.sigma, "m": i.m, "degree": i.degree(a.n)}))
                .collect();
            let v = json!({"schema": json::SCHEMA, "kind": "indices", "n": a.n, "q": a.q, "role": role.to_string(),
                "weight": scalar::fmt(&a.weight), "excluded": rows});
            emit(&v, None, io)?;
        }
    }
    Ok(0)
}

pub fn cmd_weights(a: &WeightsArgs, io: &mut Io) -> CmdResult {
    check_dimension(a.n)?;
    for w in (ExceptionalWeights { n: a.n }).first(a.list) {
        writeln!(io.out, "{}", scalar::fmt(&w))?;
    }
    Ok(0)
}

pub fn cmd_iterate(a: &IterateArgs, cache: &SharedSeedCache, io: &mut Io) -> CmdResult {
    check_dimension(a.n)?;
    let prof = json::profile_from_json(&read_json(&a.seed)?, Some(&a.weight))?;
    if prof.n != a.n || prof.q != a.q {
        return Err(Error::DimensionMismatch(format!(
            "seed profile has N={}, q={}, arguments give N={}, q={}",
            prof.n, prof.q, a.n, a.q
        ))
        .into());
    }
    prof.check_counts(cache)?;
    let hyp = validate_hypotheses(
        TheoremId::IteratedOperator,
        &HypothesisInput { n: a.n, s: a.weight.clone(), tau: a.tau.clone(), j: Some(a.power), h_max: prof.h_max() },
    )?;
    let hyp = hyp.into_result()?;
    let mut chain = vec![json::profile_to_json(&prof)];
    let mut ranges = Vec::new();
    for j in 1..=a.power {
        let (p, d) = apply_l_power(cache, &prof, j, a.tau.as_ref())?;
        chain.push(json::profile_to_json(&p));
        let mut r = json::range_to_json(&d);
        r["retained_consistent"] = Value::Bool(d.retained_consistent(a.n));
        if let Some(t) = &a.tau {
            r["admits_tau"] = Value::Bool(d.admits(t));
        }
        ranges.push(r);
    }
    let consistent = ranges.iter().all(|r| r["retained_consistent"] == Value::Bool(true));
    let v = json!({
        "schema": json::SCHEMA,
        "kind": "iteration",
        "n": a.n,
        "q": a.q,
        "weight": scalar::fmt(&a.weight),
        "hypotheses": hyp.conditions.iter().map(|c| c.statement.clone()).collect::<Vec<_>>(),
        "profiles": chain,
        "ranges": ranges,
    });
    emit(&v, None, io)?;
    Ok(if consistent { 0 } else { 1 })
}

pub fn cmd_dims(a: &DimsArgs, cache: &SharedSeedCache, io: &mut Io) -> CmdResult {
    check_dimension(a.n)?;
    let mut table: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    for q in 0..=a.n {
        for sigma in 0..=a.sigma_max {
            table.insert((q, sigma), mu(cache, a.n, q, sigma)?);
        }
    }
    match a.format {
        Format::Csv => {
            writeln!(io.out, "q,sigma,mu")?;
            for ((q, s), m) in &table {
                writeln!(io.out, "{q},{s},{m}")?;
            }
        }
        Format::Json => {
            let rows: Vec<Value> = table.iter().map(|((q, s), m)| json!({"q": q, "sigma": s, "mu": m})).collect();
            emit(&json!({"schema": json::SCHEMA, "kind": "dims", "n": a.n, "mu": rows}), None, io)?;
        }
    }
    Ok(0)
}

pub fn cmd_hypotheses(a: &HypothesesArgs, io: &mut Io) -> CmdResult {
    let th = TheoremId::parse(&a.theorem)?;
    let rep = validate_hypotheses(
        th,
        &HypothesisInput { n: a.n, s: a.weight.clone(), tau: a.tau.clone(), j: a.j, h_max: a.h_max },
    )?;
    write!(io.out, "{rep}")?;
    Ok(if rep.passed() { 0 } else { 1 })
}

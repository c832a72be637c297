use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use spreadsmith::equivalence::{classify, group_order_formula, lower_bound, CollineationGroup, LowerBound};
use spreadsmith::field_tower::{prime_power, Fe, Field, LambdaSystem};
use spreadsmith::formats::{read_json_lines, read_parallelism, write_parallelism, FieldRecord, GoodSetRecord};
use spreadsmith::goodsets::{
    beutelspacher, check_good, count_by_permanent, count_closed_form, count_formula, dual, rational_to_string,
    CandidateFilter, CountFormula, GoodSet, GoodSetSearch,
};
use spreadsmith::parallelisms::{build_line_family, build_parallelism, characterize, verify_parallelism, GroupE};
use spreadsmith::spreads::Geometry;
use spreadsmith::suites::{all_suites, find_suite, run_suites, Status, SuiteConfig};

/// Largest q at which `goodsets count` runs the exhaustive enumeration.
const ENUMERATE_MAX_Q: usize = 7;
const CLASSIFY_MAX_Q: usize = 5;

#[derive(Parser, Debug)]
#[command(name = "spreadsmith", version, about = "Parallelisms of PG(3,q) from one Desarguesian and q²+q Hall spreads")]
struct Cli {
    #[command(flatten)]
    field: FieldArgs,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct FieldArgs {
    /// Subfield order q = p^m, 3 ≤ q ≤ 16.
    #[arg(long, global = true)]
    q: Option<u32>,
    /// Characteristic p, given together with --m.
    #[arg(long, global = true, requires = "m")]
    p: Option<u32>,
    /// Degree m of GF(q) over GF(p), given together with --p.
    #[arg(long, global = true, requires = "p")]
    m: Option<u32>,
    /// Monic degree-m modulus of GF(q) over GF(p), constant term first (e.g. 1,1,1).
    #[arg(long, global = true, value_delimiter = ',')]
    modulus_q: Option<Vec<u32>>,
    /// Monic quadratic modulus of GF(q²) over GF(q), constant term first, as GF(q) codes.
    #[arg(long, global = true, value_delimiter = ',')]
    modulus_q2: Option<Vec<u32>>,
    /// JSON array of generator exponents to use as Λ.
    #[arg(long, global = true)]
    lambda: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FilterArg {
    All,
    NoNormMinusOne,
}

impl From<FilterArg> for CandidateFilter {
    fn from(f: FilterArg) -> CandidateFilter {
        match f {
            FilterArg::All => CandidateFilter::All,
            FilterArg::NoNormMinusOne => CandidateFilter::ExcludeNormMinusOne,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GroupArg {
    /// Stabilizer of r_U1 in the collineation group of Σ_η preserving 𝒟_η.
    Stabilizer,
    /// The full group preserving 𝒟_η.
    Gamma,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Field model, unit circle, Λ, norms and the index sets 𝓘, 𝓘₁, 𝓘₂.
    FieldInfo,
    /// Count, enumerate and verify good sets.
    #[command(subcommand)]
    Goodsets(GoodsetsCmd),
    /// Build, verify and characterize parallelism files.
    #[command(subcommand)]
    Parallelism(ParallelismCmd),
    /// Orbits of the parallelisms built from all good sets.
    Classify {
        #[arg(long, value_enum, default_value_t = FilterArg::All)]
        filter: FilterArg,
        #[arg(long, value_enum, default_value_t = GroupArg::Stabilizer)]
        group: GroupArg,
        /// Classify only the first N good sets in search order.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Runs the invariant suites and prints a pass/fail matrix.
    Selftest {
        /// Run only these suites (repeatable).
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Seed for the sampled suites.
        #[arg(long, default_value_t = 1)]
        sample_seed: u64,
        /// Random subsets for the sampled predicate comparison.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Good sets sampled for the parallelism suites when the family is large.
        #[arg(long, default_value_t = 100)]
        build_samples: usize,
        /// Mutated non-good sets for the negative cover suite.
        #[arg(long, default_value_t = 20)]
        mutations: usize,
        /// List suite names and exit.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Subcommand, Debug)]
enum GoodsetsCmd {
    /// Enumerated count, permanent, closed form and the printed formulas.
    Count,
    /// Streams good sets as JSON lines.
    Enumerate {
        /// Candidate triples to search over.
        #[arg(long, value_enum, default_value_t = FilterArg::All)]
        filter: FilterArg,
        /// Stop after this many good sets.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Re-checks every record of a JSON-lines good-set file.
    Verify {
        /// JSON-lines good-set file.
        file: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum ParallelismCmd {
    /// Builds a parallelism file with its certificate.
    Build {
        /// JSON-lines good-set file.
        #[arg(long, conflicts_with = "beutelspacher", required_unless_present = "beutelspacher")]
        goodset: Option<PathBuf>,
        /// Record to use from the good-set file (0-based, blank lines skipped).
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Use the set {(α, ω^u, ω^v) : u} instead of a file.
        #[arg(long)]
        beutelspacher: bool,
        /// Position of α in 𝓘 for the Beutelspacher set.
        #[arg(long, default_value_t = 0)]
        alpha: usize,
        /// Exponent v for the Beutelspacher set.
        #[arg(long, default_value_t = 0)]
        v: usize,
        /// Use the dual of the set.
        #[arg(long)]
        dual: bool,
    },
    /// Recomputes the certificate of a parallelism file.
    Verify {
        /// Parallelism file.
        file: PathBuf,
    },
    /// Recovers the good set behind a parallelism file.
    Characterize {
        /// Parallelism file.
        file: PathBuf,
    },
}

/// A finished command: rendered output and whether its checks passed.
struct Report {
    ok: bool,
    json: Value,
    text: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };
    let ok = match &cli.command {
        Command::Goodsets(GoodsetsCmd::Enumerate { filter, limit }) => {
            enumerate(cli, (*filter).into(), *limit, &mut out)?;
            true
        }
        Command::Parallelism(ParallelismCmd::Build { goodset, index, beutelspacher, alpha, v, dual }) => {
            build(cli, goodset.as_deref(), *index, *beutelspacher, *alpha, *v, *dual, &mut out)?
        }
        cmd => {
            let report = match cmd {
                Command::FieldInfo => field_info(cli)?,
                Command::Goodsets(GoodsetsCmd::Count) => count(cli)?,
                Command::Goodsets(GoodsetsCmd::Verify { file }) => verify_goodsets(cli, file)?,
                Command::Parallelism(ParallelismCmd::Verify { file }) => verify_file(file)?,
                Command::Parallelism(ParallelismCmd::Characterize { file }) => characterize_file(file)?,
                Command::Classify { filter, group, limit } => classify_cmd(cli, (*filter).into(), *group, *limit)?,
                Command::Selftest { suites, sample_seed, samples, build_samples, mutations, list } => {
                    let cfg = SuiteConfig {
                        jobs: cli.jobs,
                        seed: *sample_seed,
                        predicate_samples: *samples,
                        build_samples: *build_samples,
                        mutations: *mutations,
                    };
                    selftest(cli, &cfg, suites, *list)?
                }
                _ => unreachable!(),
            };
            match cli.format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report.json)?)?,
                Format::Text => write!(out, "{}", report.text)?,
            }
            report.ok
        }
    };
    out.flush()?;
    Ok(ok)
}

impl FieldArgs {
    fn field(&self) -> Result<Arc<Field>> {
        let (p, m) = match (self.q, self.p, self.m) {
            (Some(q), None, None) => prime_power(q).ok_or_else(|| anyhow!("{q} is not a prime power"))?,
            (Some(q), Some(p), Some(m)) => {
                if p.checked_pow(m) != Some(q) {
                    bail!("--q {q} disagrees with --p {p} --m {m}");
                }
                (p, m)
            }
            (None, Some(p), Some(m)) => (p, m),
            _ => bail!("give --q or --p and --m"),
        };
        let modulus_q2 = match &self.modulus_q2 {
            None => None,
            Some(c) => {
                Some(<[u32; 3]>::try_from(c.as_slice()).map_err(|_| anyhow!("--modulus-q2 takes 3 coefficients"))?)
            }
        };
        Ok(Field::with_moduli(p, m, self.modulus_q.clone(), modulus_q2)?)
    }

    fn lambda(&self, f: Arc<Field>) -> Result<LambdaSystem> {
        match &self.lambda {
            None => Ok(LambdaSystem::canonical(f)),
            Some(path) => {
                let exps: Vec<usize> = serde_json::from_str(&read(path)?)
                    .with_context(|| format!("{}: expected a JSON array of exponents", path.display()))?;
                Ok(LambdaSystem::from_exponents(f, &exps)?)
            }
        }
    }

    fn given(&self) -> bool {
        self.q.is_some() || self.p.is_some()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// `0` or `g^k` for the field generator g.
fn show(f: &Field, x: Fe) -> String {
    match f.log(x) {
        None => "0".into(),
        Some(k) => format!("g^{k}"),
    }
}

fn show_all(f: &Field, xs: &[Fe]) -> Vec<String> {
    xs.iter().map(|&x| show(f, x)).collect()
}

fn field_info(cli: &Cli) -> Result<Report> {
    let f = cli.field.field()?;
    let lambda = cli.field.lambda(f.clone())?;
    let part = lambda.partition();
    let units = f.unit_circle();
    let norms: Vec<Fe> = (0..lambda.len()).map(|i| lambda.norm(i)).collect();
    let record = FieldRecord::of(&f);
    let json = json!({
        "field": record,
        "unit_circle": { "size": units.len(), "elements": show_all(&f, &units) },
        "lambda": { "exponents": lambda.exponents(), "norms": show_all(&f, &norms), "eta_index": lambda.eta_index() },
        "partition": {
            "t": part.t,
            "units": show_all(&f, &part.units_part),
            "a": show_all(&f, &part.a),
            "a_inv": show_all(&f, &part.a_inv),
        },
        "i": { "size": lambda.i_set().len(), "indices": lambda.i_set() },
        "i1": { "size": lambda.i1().len(), "indices": lambda.i1() },
        "i2": { "size": lambda.i2().len(), "indices": lambda.i2() },
    });
    let mut t = String::new();
    writeln!(t, "q = {} = {}^{}", f.q(), f.p(), f.m())?;
    writeln!(t, "modulus of GF(q) over GF(p): {:?}", record.modulus_q)?;
    writeln!(t, "modulus of GF(q²) over GF(q): {:?}", record.modulus_q2)?;
    writeln!(t, "generator g: {:?}", record.generator)?;
    writeln!(t, "|𝒰| = {}: {}", units.len(), show_all(&f, &units).join(" "))?;
    writeln!(t, "Λ exponents: {:?}", lambda.exponents())?;
    writeln!(t, "Λ norms: {}", show_all(&f, &norms).join(" "))?;
    writeln!(t, "η = α{}", lambda.eta_index())?;
    writeln!(
        t,
        "partition t = {}: units {} | A {} | A⁻¹ {}",
        part.t,
        show_all(&f, &part.units_part).join(" "),
        show_all(&f, &part.a).join(" "),
        show_all(&f, &part.a_inv).join(" ")
    )?;
    writeln!(t, "|𝓘| = {}: {:?}", lambda.i_set().len(), lambda.i_set())?;
    writeln!(t, "|𝓘₁| = {}: {:?}", lambda.i1().len(), lambda.i1())?;
    writeln!(t, "|𝓘₂| = {}: {:?}", lambda.i2().len(), lambda.i2())?;
    Ok(Report { ok: true, json, text: t })
}

fn filter_name(f: CandidateFilter) -> &'static str {
    match f {
        CandidateFilter::All => "all",
        CandidateFilter::ExcludeNormMinusOne => "no-norm-minus-one",
    }
}

fn count(cli: &Cli) -> Result<Report> {
    let f = cli.field.field()?;
    let lambda = cli.field.lambda(f.clone())?;
    let q = lambda.q();
    let mut counts = Vec::new();
    let mut t = String::new();
    writeln!(t, "good sets at q = {q}")?;
    let mut oracle: HashMap<&str, String> = HashMap::new();
    for filter in [CandidateFilter::All, CandidateFilter::ExcludeNormMinusOne] {
        let enumerated = (q <= ENUMERATE_MAX_Q).then(|| GoodSetSearch::new(&lambda, filter).count(cli.jobs));
        let permanent = count_by_permanent(&lambda, filter);
        let closed = count_closed_form(&lambda, filter);
        let agree = enumerated.is_none_or(|e| permanent == e.into()) && permanent == closed;
        oracle.insert(filter_name(filter), permanent.to_string());
        counts.push(json!({
            "filter": filter_name(filter),
            "enumerated": enumerated.map(|e| e.to_string()),
            "permanent": permanent.to_string(),
            "closed_form": closed.to_string(),
            "agree": agree,
        }));
        let e = enumerated.map_or_else(|| format!("not run above q = {ENUMERATE_MAX_Q}"), |e| e.to_string());
        writeln!(
            t,
            "  {:<18} enumerated {e}, permanent {permanent}, closed form {closed}{}",
            filter_name(filter),
            if agree { "" } else { "  DISAGREE" }
        )?;
    }
    let mut formulas = Vec::new();
    writeln!(t, "printed formulas:")?;
    for formula in CountFormula::all().into_iter().filter(|c| c.applies_to(q)) {
        let value = rational_to_string(&count_formula(q, formula).expect("formula applies"));
        let against = filter_name(formula.filter());
        let matches = oracle[against] == value;
        let other = filter_name(match formula.filter() {
            CandidateFilter::All => CandidateFilter::ExcludeNormMinusOne,
            CandidateFilter::ExcludeNormMinusOne => CandidateFilter::All,
        });
        let also = oracle[other] == value;
        writeln!(
            t,
            "  {:<40} = {value}  vs {against} count: {}{}",
            formula.name(),
            if matches { "match" } else { "MISMATCH" },
            if also && !matches { format!(" (equals the {other} count)") } else { String::new() }
        )?;
        formulas.push(json!({
            "formula": formula.name(),
            "value": value,
            "compared_with": against,
            "matches": matches,
            "equals_other_count": also,
        }));
    }
    let ok = counts.iter().all(|c| c["agree"] == true);
    Ok(Report { ok, json: json!({ "q": q, "counts": counts, "formulas": formulas }), text: t })
}

fn enumerate(cli: &Cli, filter: CandidateFilter, limit: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let f = cli.field.field()?;
    let lambda = cli.field.lambda(f)?;
    let mut err = Ok(());
    GoodSetSearch::new(&lambda, filter).for_each(cli.jobs, limit, |gs| {
        if err.is_ok() {
            err = serde_json::to_writer(&mut *out, &GoodSetRecord::of(&lambda, gs))
                .map_err(anyhow::Error::from)
                .and_then(|_| writeln!(out).map_err(anyhow::Error::from));
        }
    });
    err
}

/// Geometry-free Λ for a good-set record, honouring explicit field flags.
fn record_lambda(cli: &Cli, rec: &GoodSetRecord) -> Result<LambdaSystem> {
    let f = if cli.field.given() {
        let f = cli.field.field()?;
        if f.q() != rec.q {
            bail!("record has q = {} but --q gives {}", rec.q, f.q());
        }
        f
    } else {
        let (p, m) = prime_power(rec.q as u32).ok_or_else(|| anyhow!("{} is not a prime power", rec.q))?;
        Field::with_moduli(p, m, cli.field.modulus_q.clone(), None)?
    };
    Ok(LambdaSystem::from_exponents(f, &rec.lambda_idx)?)
}

fn verify_goodsets(cli: &Cli, file: &Path) -> Result<Report> {
    let records: Vec<(usize, GoodSetRecord)> = read_json_lines(&read(file)?)?;
    let mut systems: HashMap<(usize, Vec<usize>), LambdaSystem> = HashMap::new();
    let mut results = Vec::new();
    let mut t = String::new();
    let mut bad = 0usize;
    for (line, rec) in &records {
        let key = (rec.q, rec.lambda_idx.clone());
        if !systems.contains_key(&key) {
            let lambda = record_lambda(cli, rec).with_context(|| format!("line {line}"))?;
            systems.insert(key.clone(), lambda);
        }
        let verdict = match check_good(&systems[&key], &rec.entries) {
            Ok(None) => None,
            Ok(Some(v)) => Some(v.to_string()),
            Err(e) => Some(e.to_string()),
        };
        if let Some(reason) = &verdict {
            bad += 1;
            writeln!(t, "line {line}: FAIL {reason}")?;
        }
        results.push(json!({ "line": line, "good": verdict.is_none(), "reason": verdict }));
    }
    writeln!(t, "{} records, {} good, {} not good", records.len(), records.len() - bad, bad)?;
    let ok = bad == 0;
    Ok(Report { ok, json: json!({ "records": results.len(), "failures": bad, "results": results }), text: t })
}

fn load_goodset(cli: &Cli, path: &Path, index: usize) -> Result<(GoodSetRecord, LambdaSystem)> {
    let records: Vec<(usize, GoodSetRecord)> = read_json_lines(&read(path)?)?;
    let count = records.len();
    let (_, rec) = records
        .into_iter()
        .nth(index)
        .ok_or_else(|| anyhow!("{} has {count} records, no index {index}", path.display()))?;
    let lambda = record_lambda(cli, &rec)?;
    Ok((rec, lambda))
}

#[allow(clippy::too_many_arguments)]
fn build(
    cli: &Cli,
    goodset: Option<&Path>,
    index: usize,
    use_beutelspacher: bool,
    alpha: usize,
    v: usize,
    take_dual: bool,
    out: &mut dyn Write,
) -> Result<bool> {
    let (lambda, entries) = if use_beutelspacher {
        let lambda = cli.field.lambda(cli.field.field()?)?;
        let alpha_idx = *lambda.i_set().get(alpha).ok_or_else(|| anyhow!("𝓘 has {} elements", lambda.i_set().len()))?;
        if v > lambda.q() {
            bail!("--v must be at most q");
        }
        let gs = beutelspacher(&lambda, alpha_idx, v)?;
        (lambda, gs.entries().to_vec())
    } else {
        let (rec, lambda) = load_goodset(cli, goodset.expect("clap requires one source"), index)?;
        (lambda, rec.entries)
    };
    let entries =
        if take_dual { dual(&lambda, &GoodSet::from_unchecked(entries))?.entries().to_vec() } else { entries };
    let geo = Geometry::new(lambda);
    let p = match GoodSet::new(geo.lambda(), entries.clone()) {
        Ok(gs) => build_parallelism(&geo, &gs)?,
        Err(e) => {
            eprintln!("warning: {e}; building the line family anyway");
            build_line_family(&geo, &entries)?
        }
    };
    let cert = verify_parallelism(&geo, &p);
    out.write_all(write_parallelism(&geo, &p, &cert).as_bytes())?;
    eprintln!("certificate: {}", if cert.pass() { "pass" } else { "FAIL" });
    Ok(cert.pass())
}

fn verify_file(file: &Path) -> Result<Report> {
    let pf = read_parallelism(&read(file)?)?;
    let geo = &pf.geometry;
    let f: &Field = geo.field();
    let cert = verify_parallelism(geo, &pf.parallelism);
    let stored_ok = pf.certificate.as_ref().map(|c| c.checksum == cert.checksum && c.pass == cert.pass());
    let ok = cert.pass() && stored_ok != Some(false);
    let lines = |ls: &mut dyn Iterator<Item = String>| ls.collect::<Vec<_>>();
    let uncovered = lines(&mut cert.uncovered.iter().map(|l| l.to_string()));
    let multiply = lines(&mut cert.multiply_covered.iter().map(|(l, n)| format!("{l} ×{n}")));
    let foreign = lines(&mut cert.foreign.iter().map(|l| l.to_string()));
    let bad: Vec<Value> = cert
        .bad_spreads
        .iter()
        .map(|b| json!({ "index": b.index, "kind": b.kind.tag(), "report": format!("{:?}", b.report) }))
        .collect();
    let json = json!({
        "q": f.q(),
        "pass": ok,
        "spread_count": cert.spread_count,
        "expected_spreads": cert.expected_spreads,
        "line_total": cert.line_total,
        "expected_lines": cert.expected_lines,
        "bad_spreads": bad,
        "uncovered": uncovered,
        "multiply_covered": multiply,
        "foreign": foreign,
        "checksum": cert.checksum,
        "stored_certificate_matches": stored_ok,
    });
    let mut t = String::new();
    writeln!(
        t,
        "q = {}: {} spreads (expected {}), {} lines (expected {})",
        f.q(),
        cert.spread_count,
        cert.expected_spreads,
        cert.line_total,
        cert.expected_lines
    )?;
    for b in &cert.bad_spreads {
        writeln!(t, "spread {} ({}) is not a spread", b.index, b.kind.tag())?;
    }
    for l in &uncovered {
        writeln!(t, "uncovered line {l}")?;
    }
    for l in &multiply {
        writeln!(t, "multiply covered line {l}")?;
    }
    for l in &foreign {
        writeln!(t, "line outside Σ_η {l}")?;
    }
    match stored_ok {
        Some(true) => writeln!(t, "stored certificate matches")?,
        Some(false) => writeln!(t, "stored certificate does NOT match")?,
        None => writeln!(t, "no stored certificate")?,
    }
    writeln!(t, "checksum {}", cert.checksum)?;
    writeln!(t, "{}", if ok { "PASS" } else { "FAIL" })?;
    Ok(Report { ok, json, text: t })
}

fn characterize_file(file: &Path) -> Result<Report> {
    let pf = read_parallelism(&read(file)?)?;
    let geo = &pf.geometry;
    let e = GroupE::new(geo.field());
    Ok(match characterize(geo, &e, &pf.parallelism) {
        Ok(gs) => {
            let rec = GoodSetRecord::of(geo.lambda(), &gs);
            let text = format!("{}\n", serde_json::to_string(&rec)?);
            Report { ok: true, json: serde_json::to_value(&rec)?, text }
        }
        Err(err) => Report { ok: false, json: json!({ "error": err.to_string() }), text: format!("FAIL {err}\n") },
    })
}

fn classify_cmd(cli: &Cli, filter: CandidateFilter, which: GroupArg, limit: Option<usize>) -> Result<Report> {
    let f = cli.field.field()?;
    let (q, m) = (f.q(), f.m());
    if q > CLASSIFY_MAX_Q {
        bail!("classify supports q ≤ {CLASSIFY_MAX_Q}");
    }
    let geo = Geometry::new(cli.field.lambda(f)?);
    let lambda = geo.lambda();
    let family = GoodSetSearch::new(lambda, filter).collect(cli.jobs, limit);
    let built = family.par_iter().map(|gs| build_parallelism(&geo, gs)).collect::<Result<Vec<_>, _>>()?;
    let (group, stabilizer) = match which {
        GroupArg::Stabilizer => (CollineationGroup::stabilizer(&geo), true),
        GroupArg::Gamma => (CollineationGroup::gamma(&geo), false),
    };
    let report = classify(&geo, &group, &built)?;
    let formula = group_order_formula(q, m, stabilizer);
    let orbit_count = report.orbits.len();

    let mut t = String::new();
    writeln!(
        t,
        "q = {q}, filter {}, {} good sets, {} distinct parallelisms",
        filter_name(filter),
        report.family_size,
        report.distinct
    )?;
    writeln!(t, "group order {} (formula {formula})", report.group_order)?;
    writeln!(t, "{orbit_count} orbits")?;
    let mut orbits = Vec::new();
    for (i, o) in report.orbits.iter().enumerate() {
        let rep = &family[o.representative()];
        writeln!(
            t,
            "  orbit {i}: size {}, stabilizer {}, {} good sets, representative {}",
            o.orbit_size,
            o.stabilizer_order,
            o.members.len(),
            entries_text(rep)
        )?;
        orbits.push(json!({
            "size": o.orbit_size,
            "stabilizer_order": o.stabilizer_order,
            "good_sets": o.members.len(),
            "representative": GoodSetRecord::of(lambda, rep),
        }));
    }
    let mut bounds = Vec::new();
    for b in LowerBound::for_q(q) {
        let value = lower_bound(q, m, b).expect("bound matches parity");
        let holds = num_bigint::BigInt::from(orbit_count) * value.denom() >= *value.numer();
        writeln!(
            t,
            "lower bound {}: {} ({})",
            b.name(),
            rational_to_string(&value),
            if holds { "≤ orbit count" } else { "EXCEEDS orbit count" }
        )?;
        bounds.push(json!({ "bound": b.name(), "value": rational_to_string(&value), "holds": holds }));
    }
    let example = beutelspacher_orbits(lambda, &family, &report);
    if let Some((a, b)) = example {
        writeln!(t, "Beutelspacher set in orbit {a}, its dual in orbit {b}")?;
    }
    let ok = report.orbit_stabilizer_holds();
    let json = json!({
        "q": q,
        "filter": filter_name(filter),
        "family_size": report.family_size,
        "distinct": report.distinct,
        "group": if stabilizer { "stabilizer" } else { "gamma" },
        "group_order": report.group_order,
        "group_order_formula": formula.to_string(),
        "orbit_count": orbit_count,
        "orbits": orbits,
        "lower_bounds": bounds,
        "beutelspacher_orbits": example.map(|(a, b)| json!({ "set": a, "dual": b })),
        "orbit_stabilizer_holds": ok,
    });
    Ok(Report { ok, json, text: t })
}

fn entries_text(gs: &GoodSet) -> String {
    gs.entries().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

/// Orbits of the first Beutelspacher set and of its dual, when both are in
/// the family.
fn beutelspacher_orbits(
    lambda: &LambdaSystem,
    family: &[GoodSet],
    report: &spreadsmith::equivalence::OrbitReport,
) -> Option<(usize, usize)> {
    let b = beutelspacher(lambda, *lambda.i_set().first()?, 0).ok()?;
    let d = dual(lambda, &b).ok()?;
    let orbit = |gs: &GoodSet| family.iter().position(|x| x == gs).and_then(|i| report.orbit_of(i));
    Some((orbit(&b)?, orbit(&d)?))
}

fn selftest(cli: &Cli, cfg: &SuiteConfig, names: &[String], list: bool) -> Result<Report> {
    if list {
        let suites = all_suites();
        let text: String =
            suites.iter().map(|s| format!("{:<24} q ≤ {:<3} {}\n", s.name, s.max_q, s.summary)).collect();
        let json = suites.iter().map(|s| json!({ "name": s.name, "max_q": s.max_q, "summary": s.summary })).collect();
        return Ok(Report { ok: true, json: Value::Array(json), text });
    }
    if let Some(bad) = names.iter().find(|n| find_suite(n).is_none()) {
        bail!("unknown suite {bad}; see selftest --list");
    }
    let f = cli.field.field()?;
    let geo = Geometry::new(cli.field.lambda(f)?);
    let outcomes = run_suites(&geo, cfg, names);
    let ok = outcomes.iter().all(|o| o.status != Status::Fail);
    let mut t = String::new();
    writeln!(t, "{:<24} {:<7} {:>10} {:>8}  scope", "suite", "status", "checked", "failed")?;
    for o in &outcomes {
        let status = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        writeln!(t, "{:<24} {:<7} {:>10} {:>8}  {}", o.name, status, o.checked, o.failure_count, o.scope)?;
        for msg in &o.failures {
            writeln!(t, "    {msg}")?;
        }
    }
    let passed = outcomes.iter().filter(|o| o.status == Status::Pass).count();
    let failed = outcomes.iter().filter(|o| o.status == Status::Fail).count();
    writeln!(t, "q = {}: {passed} passed, {failed} failed, {} skipped", geo.q(), outcomes.len() - passed - failed)?;
    Ok(Report { ok, json: json!({ "q": geo.q(), "suites": outcomes }), text: t })
}

//! Acceptance run: one PASS/FAIL line per criterion. Criteria listed in
//! `KNOWN_RED` fail for mathematical reasons and are expected to keep
//! failing; the run errors if any other criterion fails or if a known red
//! one starts passing.

use std::collections::{HashMap, HashSet};
use std::process::Command;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spreadsmith::equivalence::{classify, lower_bound, CollineationGroup, LowerBound};
use spreadsmith::field_tower::{Fe, Field, LambdaSystem};
use spreadsmith::goodsets::{
    beutelspacher, check_good, count_by_permanent, count_formula, dual, is_good, is_good_geometric, rational_to_string,
    Candidate, CandidateFilter, CountFormula, GoodSet, GoodSetSearch,
};
use spreadsmith::parallelisms::{
    build_line_family, build_parallelism, is_e_invariant, point_action, verify_parallelism, GroupE,
};
use spreadsmith::proj_geometry::{all_planes, Collineation, Line};
use spreadsmith::spreads::Geometry;
use spreadsmith::suites::{line_level_mismatches, overlap_exceptions, run_suites, Status, SuiteConfig};

/// Criteria whose stated values are contradicted by exhaustive computation.
const KNOWN_RED: &[usize] = &[1, 6];

type Criterion = (usize, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Verdict {
        Verdict { pass: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        self.pass &= ok;
        self.notes.push(format!("[{}] {}", if ok { "ok" } else { "FAIL" }, note.into()));
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(format!("[info] {}", note.into()));
    }
}

fn labels(lambda: &LambdaSystem) -> Vec<Candidate> {
    let q = lambda.q();
    let mut out = Vec::new();
    for &alpha_idx in lambda.i_set() {
        for u_pow in 0..=q {
            for v_pow in 0..=q {
                out.push(Candidate { alpha_idx, u_pow, v_pow });
            }
        }
    }
    out
}

fn geometry(q: u32) -> std::sync::Arc<Geometry> {
    Geometry::for_q(q).unwrap()
}

/// Exact cover of the Σ_η lines, counted independently of the verifier.
fn covers_exactly_once(geo: &Geometry, spreads: &[Vec<Line>]) -> Result<(), String> {
    let mut count: HashMap<Line, usize> = HashMap::new();
    for s in spreads {
        for l in s {
            *count.entry(*l).or_default() += 1;
        }
    }
    let q = geo.q();
    let total = (q * q + 1) * (q * q + q + 1);
    if geo.sigma_lines().len() != total {
        return Err(format!("Σ_η has {} lines, expected {total}", geo.sigma_lines().len()));
    }
    if let Some(l) = geo.sigma_lines().iter().find(|l| count.get(l).copied().unwrap_or(0) != 1) {
        return Err(format!("line {l} covered {} times", count.get(l).copied().unwrap_or(0)));
    }
    if count.len() != total {
        return Err(format!("{} lines outside Σ_η", count.len() - total));
    }
    Ok(())
}

fn spread_lines(p: &spreadsmith::parallelisms::Parallelism) -> Vec<Vec<Line>> {
    p.spreads().iter().map(|s| s.lines().to_vec()).collect()
}

fn suites_pass(v: &mut Verdict, q: u32, names: &[&str]) {
    let geo = geometry(q);
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    for o in run_suites(&geo, &SuiteConfig::default(), &names) {
        let mut note = format!("q={q} {}: {} checks, {} failed ({})", o.name, o.checked, o.failure_count, o.scope);
        if let Some(first) = o.failures.first() {
            note.push_str(&format!("; first failure: {first}"));
        }
        v.check(o.status == Status::Pass, note);
    }
}

fn c1_counts() -> Verdict {
    let mut v = Verdict::new();
    for q in [4u32, 5, 7] {
        let start = Instant::now();
        let lambda = LambdaSystem::canonical(Field::new(q).unwrap());
        let all = GoodSetSearch::new(&lambda, CandidateFilter::All).count(1);
        let filtered = GoodSetSearch::new(&lambda, CandidateFilter::ExcludeNormMinusOne).count(1);
        let secs = start.elapsed().as_secs_f64();
        let perm = count_by_permanent(&lambda, CandidateFilter::All);
        v.check(perm == all.into(), format!("q={q}: enumeration {all} agrees with the permanent {perm}"));
        v.check(secs < 300.0, format!("q={q}: enumeration took {secs:.1} s (limit 300 s)"));
        let target = if q % 2 == 0 { CountFormula::AllEven } else { CountFormula::AllOdd };
        let value = rational_to_string(&count_formula(q as usize, target).unwrap());
        v.check(value == all.to_string(), format!("q={q}: enumerated {all} vs printed formula {value} (tolerance 0)"));
        if q % 2 == 1 {
            v.note(format!("q={q}: enumeration without norm −1 labels gives {filtered}"));
        }
        if q == 4 {
            let simplified = rational_to_string(&count_formula(4, CountFormula::AllEvenSimplified).unwrap());
            v.check(
                simplified != value,
                format!("q=4: printed simplification evaluates to {simplified}, flagged as conflicting"),
            );
        }
    }
    v
}

fn c2_cover() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    for q in [3u32, 4] {
        let geo = geometry(q);
        let family = GoodSetSearch::new(geo.lambda(), CandidateFilter::All).collect(1, None);
        let bad = family
            .iter()
            .filter(|gs| {
                let p = build_parallelism(&geo, gs).unwrap();
                covers_exactly_once(&geo, &spread_lines(&p)).is_err() || !verify_parallelism(&geo, &p).pass()
            })
            .count();
        v.check(bad == 0, format!("q={q}: {} good sets, {bad} fail exact cover", family.len()));
    }
    let geo = geometry(5);
    let family = GoodSetSearch::new(geo.lambda(), CandidateFilter::All).collect(1, None);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let picks = sample(&mut rng, family.len(), 100).into_vec();
    let bad = picks
        .iter()
        .filter(|&&i| {
            let p = build_parallelism(&geo, &family[i]).unwrap();
            covers_exactly_once(&geo, &spread_lines(&p)).is_err()
        })
        .count();
    v.check(bad == 0, format!("q=5: 100 of {} good sets sampled (seed 2), {bad} fail exact cover", family.len()));
    let secs = start.elapsed().as_secs_f64();
    v.check(secs < 600.0, format!("{secs:.1} s (limit 600 s)"));
    v
}

fn c3_negative() -> Verdict {
    let mut v = Verdict::new();
    for q in [3u32, 4] {
        let geo = geometry(q);
        let lambda = geo.lambda();
        let pool = labels(lambda);
        let family = GoodSetSearch::new(lambda, CandidateFilter::All).collect(1, None);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut tried, mut detected, mut example) = (0, 0, None);
        while tried < 20 {
            let mut entries = family[rng.gen_range(0..family.len())].entries().to_vec();
            let slot = rng.gen_range(0..entries.len());
            let replacement = pool[rng.gen_range(0..pool.len())];
            if entries.contains(&replacement) {
                continue;
            }
            entries[slot] = replacement;
            if is_good(lambda, &entries).unwrap() {
                continue;
            }
            tried += 1;
            let p = build_line_family(&geo, &entries).unwrap();
            let cert = verify_parallelism(&geo, &p);
            let witness = cert
                .multiply_covered
                .first()
                .map(|(l, n)| format!("{l} covered {n} times"))
                .or_else(|| cert.uncovered.first().map(|l| format!("{l} uncovered")));
            if let (false, Some(w)) = (cert.pass(), witness) {
                detected += 1;
                example.get_or_insert(w);
            }
        }
        v.check(detected == tried, format!("q={q}: {detected} of {tried} mutated non-good sets fail exact cover"));
        if let Some(e) = example {
            v.note(format!("q={q}: e.g. {e}"));
        }
    }
    v
}

fn c4_predicates() -> Verdict {
    let mut v = Verdict::new();
    let lambda = LambdaSystem::canonical(Field::new(3).unwrap());
    let pool = labels(&lambda);
    let (mut n, mut disagree) = (0u64, 0u64);
    let k = lambda.q() + 1;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let subset: Vec<Candidate> = idx.iter().map(|&i| pool[i]).collect();
        n += 1;
        if is_good(&lambda, &subset).unwrap() != is_good_geometric(&lambda, &subset).unwrap() {
            disagree += 1;
        }
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < pool.len() - k + i) else { break };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    v.check(disagree == 0 && n == 1820, format!("q=3: all {n} subsets, {disagree} disagreements"));

    let lambda = LambdaSystem::canonical(Field::new(5).unwrap());
    let pool = labels(&lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut disagree = 0;
    let mut goods = 0;
    for _ in 0..100_000 {
        let subset: Vec<Candidate> = sample(&mut rng, pool.len(), 6).into_iter().map(|i| pool[i]).collect();
        let a = is_good(&lambda, &subset).unwrap();
        goods += a as usize;
        if a != is_good_geometric(&lambda, &subset).unwrap() {
            disagree += 1;
        }
    }
    v.check(disagree == 0, format!("q=5: 100000 uniform subsets (seed 4), {disagree} disagreements"));
    // Uniform subsets are almost never good, so also compare on good sets.
    let family = GoodSetSearch::new(&lambda, CandidateFilter::All).collect(1, None);
    let geometric = family.iter().filter(|gs| is_good_geometric(&lambda, gs.entries()).unwrap()).count();
    v.check(
        geometric == family.len(),
        format!("q=5: {goods} sampled good; geometric predicate accepts {geometric} of {} good sets", family.len()),
    );
    v
}

fn c5_tables() -> Verdict {
    let mut v = Verdict::new();
    for q in [3u32, 4, 5, 7] {
        let f = Field::new(q).unwrap();
        let lambda = LambdaSystem::canonical(f.clone());
        let qq = q as u64;
        let units = f.unit_circle();
        let (mut checked, mut wrong) = (0usize, 0usize);
        for &c in &units {
            for &b in &units {
                let sign = f.pow(f.mul(c, b), (qq + 1) / 2);
                let mut total = 0;
                for &a in lambda.i_set() {
                    for &beta in lambda.i_set() {
                        // Points (1, βu, βv) with βu = c βv and N(α) b = β² u v.
                        let bt = lambda.alpha(beta);
                        let mut n = 0;
                        for &u in &units {
                            for &w in &units {
                                let (x2, x3) = (f.mul(bt, u), f.mul(bt, w));
                                if x2 == f.mul(c, x3) && f.mul(lambda.norm(a), b) == f.mul(x2, x3) {
                                    n += 1;
                                }
                            }
                        }
                        let expected = if a != beta {
                            0
                        } else if q % 2 == 0 {
                            1
                        } else {
                            let square = f.is_subfield_square(lambda.norm(a));
                            if (square && sign == Fe::ONE) || (!square && sign == f.minus_one()) {
                                2
                            } else {
                                0
                            }
                        };
                        checked += 1;
                        wrong += (n != expected) as usize;
                        total += n;
                    }
                }
                let expected_total = if q % 2 == 0 {
                    lambda.i_set().len()
                } else if sign == Fe::ONE {
                    2 * lambda.i1().len()
                } else {
                    2 * lambda.i2().len()
                };
                checked += 1;
                wrong += (total != expected_total) as usize;
            }
        }
        v.check(wrong == 0, format!("q={q}: {checked} table entries and sums, {wrong} mismatches"));
    }
    v
}

fn c6_structure() -> Verdict {
    let mut v = Verdict::new();
    for q in [3u32, 4, 5] {
        let geo = geometry(q);
        let f = geo.field();
        let pts: HashSet<_> = geo.desarguesian().lines().iter().flat_map(|l| l.points(f)).collect();
        let expected = (q as usize * q as usize + 1).pow(2);
        v.check(pts.len() == expected, format!("q={q}: |𝒟̄_η| = {} (expected {expected})", pts.len()));
    }
    let geo = geometry(3);
    let f = geo.field();
    let ext: HashSet<_> = geo.desarguesian().lines().iter().flat_map(|l| l.points(f)).collect();
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for plane in all_planes(f) {
        *sizes.entry(ext.iter().filter(|p| plane.contains_point(f, p)).count()).or_default() += 1;
    }
    let mut sizes: Vec<_> = sizes.into_iter().collect();
    sizes.sort();
    v.check(
        sizes.iter().all(|(s, _)| *s == 10 || *s == 19),
        format!("q=3: plane-section sizes {sizes:?} ⊆ {{10, 19}}"),
    );
    suites_pass(&mut v, 3, &["regulus-transversals"]);
    for q in [3, 5] {
        suites_pass(&mut v, q, &["special-line-sections", "subplane-overlap", "pencil-meeting-point"]);
    }
    let ex = overlap_exceptions(&geometry(5));
    v.note(format!(
        "q=5: {} overlap exceptions, all at β = α, v = −1 with N(α) ≠ −1, where the shared points are only the q+1 points of a Baer subline through P",
        ex.len()
    ));
    v
}

fn c7_reguli() -> Verdict {
    let mut v = Verdict::new();
    for q in [3, 4, 5] {
        suites_pass(&mut v, q, &["regulus-equality", "extension-disjointness"]);
    }
    let (pairs, reg, dis) = line_level_mismatches(&geometry(3));
    v.note(format!("q=3: exhaustive over pencil-label pairs at every q; the line-level reading disagrees on {reg} and {dis} of {pairs} line pairs"));
    v
}

fn perm_of(geo: &Geometry, c: &Collineation) -> Vec<u32> {
    point_action(geo, c).unwrap()
}

fn c8_groups() -> Verdict {
    let mut v = Verdict::new();
    for q in [3u32, 4] {
        let geo = geometry(q);
        let f = geo.field();
        let e = GroupE::new(f);
        let perms: Vec<Vec<u32>> = e.elements().iter().map(|(_, c)| perm_of(&geo, c)).collect();
        let distinct: HashSet<&Vec<u32>> = perms.iter().collect();
        let id: Vec<u32> = (0..geo.sigma_points().len() as u32).collect();
        let compose = |a: &[u32], b: &[u32]| a.iter().map(|&x| b[x as usize]).collect::<Vec<u32>>();
        let abelian = perms.iter().all(|a| perms.iter().all(|b| compose(a, b) == compose(b, a)));
        let exponent_p = perms.iter().all(|a| {
            let mut x = id.clone();
            for _ in 0..f.p() {
                x = compose(&x, a);
            }
            x == id
        });
        let qs = q as usize;
        v.check(
            distinct.len() == qs * qs && abelian && exponent_p,
            format!("q={q}: |E| = {}, abelian {abelian}, exponent p {exponent_p}", distinct.len()),
        );
        let family = GoodSetSearch::new(geo.lambda(), CandidateFilter::All).collect(1, None);
        let invariant =
            family.iter().filter(|gs| is_e_invariant(&geo, &e, &build_parallelism(&geo, gs).unwrap(), true)).count();
        v.check(
            invariant == family.len(),
            format!("q={q}: {invariant} of {} Π_P invariant under all of E", family.len()),
        );
    }
    for (q, expected) in [(3u32, 576usize), (4, 4800), (5, 7200)] {
        let order = CollineationGroup::stabilizer(&geometry(q)).order();
        v.check(order == expected, format!("q={q}: |Γ_r_U1| = {order} (expected {expected})"));
    }
    v
}

fn c9_classification() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    for q in [3u32, 4] {
        let geo = geometry(q);
        let lambda = geo.lambda();
        let family = GoodSetSearch::new(lambda, CandidateFilter::All).collect(1, None);
        let built: Vec<_> = family.iter().map(|gs| build_parallelism(&geo, gs).unwrap()).collect();
        let group = CollineationGroup::stabilizer(&geo);
        let report = classify(&geo, &group, &built).unwrap();
        let orbits = report.orbits.len();
        v.check(report.orbit_stabilizer_holds(), format!("q={q}: {orbits} orbits on {} distinct Π_P", report.distinct));
        for b in LowerBound::for_q(q as usize) {
            let bound = lower_bound(q as usize, geo.field().m(), b).unwrap();
            let holds = num_bigint::BigInt::from(orbits) * bound.denom() >= *bound.numer();
            v.check(holds, format!("q={q}: {orbits} ≥ {} ({})", rational_to_string(&bound), b.name()));
        }
        if q == 3 {
            let bs = beutelspacher(lambda, lambda.i_set()[0], 0).unwrap();
            let d = dual(lambda, &bs).unwrap();
            let orbit = |gs: &GoodSet| report.orbit_of(family.iter().position(|x| x == gs).unwrap()).unwrap();
            let (a, b) = (orbit(&bs), orbit(&d));
            v.check(a != b, format!("q=3: Beutelspacher set in orbit {a}, its dual in orbit {b}"));
            v.check(check_good(lambda, d.entries()).unwrap().is_none(), "q=3: the dual is good");
        }
    }
    let secs = start.elapsed().as_secs_f64();
    v.check(secs < 1800.0, format!("{secs:.1} s (limit 1800 s)"));
    v
}

fn cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_spreadsmith")).args(args).output().expect("run spreadsmith");
    assert!(out.status.success(), "spreadsmith {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn c10_determinism() -> Verdict {
    let mut v = Verdict::new();
    let runs: &[&[&str]] = &[
        &["goodsets", "enumerate", "--q", "5"],
        &["goodsets", "enumerate", "--q", "7", "--limit", "50000"],
        &["classify", "--q", "3", "--format", "json"],
        &["classify", "--q", "4"],
        &["selftest", "--q", "4"],
    ];
    for args in runs {
        let base = cli(&[*args, &["--jobs", "1"][..]].concat());
        let again = cli(&[*args, &["--jobs", "1"][..]].concat());
        let wide = cli(&[*args, &["--jobs", "4"][..]].concat());
        v.check(
            !base.is_empty() && base == again && base == wide,
            format!("{}: {} bytes, identical across repeats and --jobs 1/4", args.join(" "), base.len()),
        );
    }
    v
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "good-set counts match the printed formulas (exact)", c1_counts),
        (2, "parallelisms cover every line exactly once", c2_cover),
        (3, "mutated non-good sets fail exact cover", c3_negative),
        (4, "algebraic and geometric predicates agree", c4_predicates),
        (5, "intersection tables match the case split (exact)", c5_tables),
        (6, "structure of 𝒟̄_η, plane sections and special-line sections", c6_structure),
        (7, "regulus-equality and disjointness conditions over pencil-label pairs", c7_reguli),
        (8, "group E and the stabilizer of r_U1", c8_groups),
        (9, "orbit classification and lower bounds", c9_classification),
        (10, "determinism across runs and --jobs", c10_determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        let red = KNOWN_RED.contains(&id);
        let label = if verdict.pass { "PASS" } else { "FAIL" };
        println!("{label} {id:>2} {title} ({secs:.1} s){}", if red && !verdict.pass { " [known red]" } else { "" });
        for n in &verdict.notes {
            println!("        {n}");
        }
        if verdict.pass == red {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}

//! Named invariant suites over one geometry. Each suite recomputes a
//! structural property by direct incidence or enumeration and compares it
//! with the predicted value; the self-test command and the acceptance
//! tests both run them.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equivalence::{
    classify_keys, diagonal_witness, group_order_formula, lower_bound, CollineationGroup, LowerBound,
};
use crate::field_tower::Fe;
use crate::goodsets::{
    apply_g1, beutelspacher, check_good, count_by_permanent, count_closed_form, dual, epsilon_inverse, epsilon_point,
    is_good, is_good_geometric, Candidate, CandidateFilter, G1Element, GoodSet, GoodSetSearch, PlaneModel,
};
use crate::parallelisms::{
    apply_to_key, build_line_family, build_parallelism, characterize, family_key, is_e_invariant, line_action,
    point_action, verify_parallelism, GroupE, ParallelismKey,
};
use crate::proj_geometry::{all_lines, all_planes, null_space, tau_line, Line, Plane, Point};
use crate::spreads::{special_line, Geometry, Regulus, ResidueShape, SpreadKind};

/// Sampling and parallelism knobs. Results depend on `seed` and the
/// sample sizes only, never on `jobs`.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub jobs: usize,
    pub seed: u64,
    /// Random candidate subsets for the predicate comparison when
    /// exhaustive search is too large.
    pub predicate_samples: usize,
    /// Good sets sampled for the parallelism suites when the full family
    /// is too large.
    pub build_samples: usize,
    /// Mutated non-good sets per run of the negative cover suite.
    pub mutations: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { jobs: 1, seed: 1, predicate_samples: 100_000, build_samples: 100, mutations: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub q: usize,
    pub scope: String,
    pub checked: u64,
    pub failure_count: u64,
    /// The first few failures, in check order.
    pub failures: Vec<String>,
    pub status: Status,
}

const KEPT_FAILURES: usize = 5;

#[derive(Debug, Default)]
struct Tally {
    checked: u64,
    failure_count: u64,
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < KEPT_FAILURES {
                self.failures.push(msg());
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.failure_count += other.failure_count;
        let room = KEPT_FAILURES.saturating_sub(self.failures.len());
        self.failures.extend(other.failures.into_iter().take(room));
        self
    }
}

/// Merges per-item tallies in item order.
fn merge_all(parts: Vec<Tally>) -> Tally {
    parts.into_iter().fold(Tally::default(), Tally::merge)
}

type Runner = fn(&Geometry, &SuiteConfig) -> (String, Tally);

pub struct Suite {
    pub name: &'static str,
    pub summary: &'static str,
    /// Largest q the suite runs at; above it the suite is skipped.
    pub max_q: usize,
    run: Runner,
}

impl Suite {
    pub fn run(&self, geo: &Geometry, cfg: &SuiteConfig) -> SuiteOutcome {
        let q = geo.q();
        if q > self.max_q {
            return SuiteOutcome {
                name: self.name.to_string(),
                q,
                scope: format!("skipped above q = {}", self.max_q),
                checked: 0,
                failure_count: 0,
                failures: Vec::new(),
                status: Status::Skipped,
            };
        }
        let (scope, t) = (self.run)(geo, cfg);
        let status = if t.failure_count == 0 && t.checked > 0 { Status::Pass } else { Status::Fail };
        let mut failures = t.failures;
        if t.checked == 0 {
            failures.push("no checks were made".to_string());
        }
        SuiteOutcome {
            name: self.name.to_string(),
            q,
            scope,
            checked: t.checked,
            failure_count: t.failure_count,
            failures,
            status,
        }
    }
}

pub fn all_suites() -> Vec<Suite> {
    vec![
        Suite {
            name: "norm-partition", summary: "Λ, η and the index sets 𝓘, 𝓘₁, 𝓘₂", max_q: 16, run: norm_partition
        },
        Suite {
            name: "sigma-structure",
            summary: "Σ_η counts and the Desarguesian spread 𝒟_η",
            max_q: 7,
            run: sigma_structure,
        },
        Suite {
            name: "plane-sections", summary: "plane sections of the extended 𝒟_η", max_q: 5, run: plane_sections
        },
        Suite {
            name: "regulus-transversals",
            summary: "lines meeting an extended regulus through r_U1",
            max_q: 5,
            run: regulus_transversals,
        },
        Suite {
            name: "special-line-sections",
            summary: "plane sections of the extended S_{l_λ}",
            max_q: 5,
            run: special_line_sections,
        },
        Suite {
            name: "subplane-overlap",
            summary: "σ_{βv,λ} ∩ Σ_β is a point plus a Baer subline",
            max_q: 5,
            run: subplane_overlap,
        },
        Suite {
            name: "pencil-meeting-point",
            summary: "lines of 𝓛 meeting S̄_{l_λ} \\ R̄_{l_λ} pass through one point",
            max_q: 5,
            run: pencil_meeting_point,
        },
        Suite { name: "line-set", summary: "the line set 𝓛 and the reguli R_ℓ", max_q: 5, run: line_set },
        Suite {
            name: "regulus-equality",
            summary: "R_ℓ = R_ℓ' against the ratio condition",
            max_q: 5,
            run: regulus_equality,
        },
        Suite {
            name: "extension-disjointness",
            summary: "ℓ' ∩ (S̄_ℓ \\ R̄_ℓ) = ∅ against the conic condition",
            max_q: 5,
            run: extension_disjointness,
        },
        Suite {
            name: "hall-spreads",
            summary: "Hall spreads of 𝓛 are spreads disjoint from 𝒟_η",
            max_q: 5,
            run: hall_spreads,
        },
        Suite {
            name: "plane-model", summary: "𝒵_α and its partitions by s_c and C_{αb}", max_q: 9, run: plane_model
        },
        Suite {
            name: "predicate-agreement",
            summary: "algebraic and geometric good-set predicates agree",
            max_q: 7,
            run: predicate_agreement,
        },
        Suite {
            name: "intersection-tables",
            summary: "|s_c ∩ C_{αb} ∩ 𝒵_β| and its sums over 𝓘",
            max_q: 9,
            run: intersection_tables,
        },
        Suite {
            name: "good-set-count",
            summary: "enumeration, permanent and closed-form counts agree",
            max_q: 16,
            run: good_set_count,
        },
        Suite {
            name: "parallelism-cover",
            summary: "Π_P covers every line of Σ_η once",
            max_q: 5,
            run: parallelism_cover,
        },
        Suite {
            name: "non-good-fails-cover",
            summary: "families from non-good sets are not parallelisms",
            max_q: 5,
            run: non_good_fails_cover,
        },
        Suite {
            name: "group-e",
            summary: "E is elementary abelian of order q² and fixes every Π_P",
            max_q: 5,
            run: group_e,
        },
        Suite {
            name: "pencil-orbits", summary: "E-orbits of 𝓛 are punctured pencils", max_q: 5, run: pencil_orbits
        },
        Suite {
            name: "characterize-roundtrip",
            summary: "the good set is recovered from Π_P",
            max_q: 5,
            run: characterize_roundtrip,
        },
        Suite {
            name: "distinct-parallelisms",
            summary: "distinct good sets give distinct Π_P up to the norm −1 flip",
            max_q: 5,
            run: distinct_parallelisms,
        },
        Suite {
            name: "g1-action",
            summary: "G₁ images are good and H images are equivalent",
            max_q: 5,
            run: g1_action,
        },
        Suite {
            name: "stabilizer-order",
            summary: "order of Γ_{r_U1} and its action",
            max_q: 5,
            run: stabilizer_order,
        },
        Suite {
            name: "orbit-classification",
            summary: "orbits of Π_P under Γ_{r_U1}",
            max_q: 4,
            run: orbit_classification,
        },
    ]
}

pub fn find_suite(name: &str) -> Option<Suite> {
    all_suites().into_iter().find(|s| s.name == name)
}

/// Runs the named suites (all when `names` is empty) in registry order.
pub fn run_suites(geo: &Geometry, cfg: &SuiteConfig, names: &[String]) -> Vec<SuiteOutcome> {
    all_suites()
        .iter()
        .filter(|s| names.is_empty() || names.iter().any(|n| n == s.name))
        .map(|s| s.run(geo, cfg))
        .collect()
}

fn rng(cfg: &SuiteConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn unit(geo: &Geometry, pow: usize) -> Fe {
    geo.field().exp(pow * (geo.q() - 1))
}

/// All good sets for q ≤ 4, otherwise a seeded sample of `build_samples`.
fn good_set_family(geo: &Geometry, cfg: &SuiteConfig, salt: u64) -> (String, Vec<GoodSet>) {
    let all = GoodSetSearch::new(geo.lambda(), CandidateFilter::All).collect(cfg.jobs, None);
    if geo.q() <= 4 || all.len() <= cfg.build_samples {
        return (format!("all {} good sets", all.len()), all);
    }
    let mut sample: Vec<GoodSet> = all.choose_multiple(&mut rng(cfg, salt), cfg.build_samples).cloned().collect();
    sample.sort();
    (format!("{} of {} good sets, seed {}", sample.len(), all.len(), cfg.seed), sample)
}

fn norm_partition(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let (f, l, q) = (geo.field(), geo.lambda(), geo.q());
    let mut t = Tally::default();
    let mut norms: Vec<Fe> = (0..l.len()).map(|i| f.norm(l.alpha(i))).collect();
    norms.sort();
    let mut nonzero: Vec<Fe> = f.subfield().filter(|x| !x.is_zero()).collect();
    nonzero.sort();
    t.check(norms == nonzero, || "norms of Λ are not GF(q)* exactly once".into());
    t.check(f.norm(l.eta()) == Fe::ONE, || "N(η) ≠ 1".into());
    let expected_i = if q % 2 == 0 { (q - 2) / 2 } else { (q - 1) / 2 };
    t.check(l.i_set().len() == expected_i, || format!("|𝓘| = {}, expected {expected_i}", l.i_set().len()));
    if q % 2 == 1 {
        let (e1, e2) = if q % 4 == 1 { ((q - 1) / 4, (q - 1) / 4) } else { ((q - 3) / 4, (q + 1) / 4) };
        t.check(l.i1().len() == e1, || format!("|𝓘₁| = {}, expected {e1}", l.i1().len()));
        t.check(l.i2().len() == e2, || format!("|𝓘₂| = {}, expected {e2}", l.i2().len()));
        for &a in l.i_set() {
            let square = f.is_subfield_square(l.norm(a));
            t.check(l.i1().contains(&a) == square && l.i2().contains(&a) != square, || {
                format!("α index {a} misfiled between 𝓘₁ and 𝓘₂")
            });
        }
        let m1 = l.i_set().iter().filter(|&&a| l.has_norm_minus_one(a)).count();
        t.check(m1 == 1, || format!("{m1} members of 𝓘 have norm −1"));
    }
    // 𝓘 takes one of each pair {a, a⁻¹} of norms other than ±1.
    let in_i: HashSet<Fe> = l.i_set().iter().map(|&a| l.norm(a)).collect();
    for &n in &nonzero {
        let inv = f.inv(n).unwrap();
        if n == Fe::ONE || n == f.minus_one() {
            t.check(!in_i.contains(&n) || n == f.minus_one(), || "norm 1 in 𝓘".into());
            continue;
        }
        t.check(in_i.contains(&n) != in_i.contains(&inv), || format!("norm pair {n:?}, {inv:?} not split by 𝓘"));
    }
    ("exhaustive".into(), t)
}

fn sigma_structure(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let q = geo.q();
    let mut t = Tally::default();
    let np = (q + 1) * (q * q + 1);
    let nl = (q * q + 1) * (q * q + q + 1);
    t.check(geo.sigma_points().len() == np, || format!("|Σ_η| = {}, expected {np}", geo.sigma_points().len()));
    t.check(geo.sigma_lines().len() == nl, || format!("{} lines of Σ_η, expected {nl}", geo.sigma_lines().len()));
    let d = geo.desarguesian();
    t.check(geo.check_spread(d.lines()).is_spread(), || "𝒟_η is not a spread".into());
    let ext = geo.extended_points(d.lines()).len();
    t.check(ext == (q * q + 1) * (q * q + 1), || format!("|𝒟̄_η| = {ext}"));
    let f = geo.field();
    for l in d.lines() {
        t.check(l.meets(f, geo.t1()) && l.meets(f, geo.t2()), || format!("{l:?} misses t₁ or t₂"));
    }
    ("exhaustive".into(), t)
}

/// Planes through a line.
fn planes_through(geo: &Geometry, l: &Line) -> Vec<Plane> {
    let f = geo.field();
    let [n1, n2] = <[_; 2]>::try_from(null_space(f, &l.rows())).unwrap();
    let mut out: Vec<Plane> = f
        .elements()
        .map(|c| {
            let v = std::array::from_fn(|i| f.add(n1[i], f.mul(c, n2[i])));
            Plane::new(f, v).unwrap()
        })
        .collect();
    out.push(Plane::new(f, n2).unwrap());
    out
}

fn plane_sections(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let (f, q) = (geo.field(), geo.q());
    let d = geo.desarguesian().lines();
    let (scope, planes) = if q == 3 {
        ("all planes".to_string(), all_planes(f))
    } else {
        let mut r = rng(cfg, 3);
        let n = f.order() as u8;
        let mut planes: Vec<Plane> = d.iter().flat_map(|l| planes_through(geo, l)).collect();
        let extra = 500;
        while planes.len() < (q * q + 1) * (q * q + 1) + extra {
            let v = std::array::from_fn(|_| Fe(r.gen_range(0..n)));
            if let Ok(p) = Plane::new(f, v) {
                planes.push(p);
            }
        }
        (format!("all planes through 𝒟̄_η lines plus {extra} random, seed {}", cfg.seed), planes)
    };
    let subs: Vec<HashSet<Point>> =
        (0..geo.lambda().len()).map(|a| geo.subgeometry_points(a).iter().copied().collect()).collect();
    let parts: Vec<(Tally, bool)> = planes
        .par_iter()
        .map(|pi| {
            let mut t = Tally::default();
            let sec = geo.plane_section(pi, d);
            let n = sec.points.len();
            t.check(n == q * q + 1 || n == 2 * q * q + 1, || format!("{pi:?}: {n} points"));
            let large = n == 2 * q * q + 1;
            if large {
                t.check(sec.contained.len() == 1, || format!("{pi:?}: {} spread lines inside", sec.contained.len()));
                let ok = match &sec.shape {
                    ResidueShape::Line(l) => l == geo.t1() || l == geo.t2(),
                    ResidueShape::BaerSubplane(sub) => {
                        let owners: Vec<usize> =
                            (0..subs.len()).filter(|&a| sub.iter().all(|p| subs[a].contains(p))).collect();
                        owners.len() == 1
                            && subs[owners[0]].iter().filter(|p| pi.contains_point(f, p)).count() == sub.len()
                    }
                    ResidueShape::Other => false,
                };
                t.check(ok, || format!("{pi:?}: residue is neither t₁, t₂ nor π ∩ Σ_α"));
            }
            (t, large)
        })
        .collect();
    let large = parts.iter().filter(|(_, l)| *l).count();
    let mut t = merge_all(parts.into_iter().map(|(t, _)| t).collect());
    if q == 3 {
        let e = (q * q + 1) * (q * q + 1);
        t.check(large == e, || format!("{large} planes meet 𝒟̄_η in 2q²+1 points, expected {e}"));
    }
    (scope, t)
}

/// Lines of PG(3,q²) meeting every given line, from point pairs on the
/// first two (which must be skew).
fn ambient_transversals(geo: &Geometry, lines: &[Line]) -> Vec<Line> {
    let f = geo.field();
    let (a, b) = (lines[0].points(f), lines[1].points(f));
    let mut out: Vec<Line> = a
        .par_iter()
        .flat_map_iter(|x| {
            b.iter().filter_map(move |y| {
                let l = Line::through(f, x, y).ok()?;
                lines[2..].iter().all(|r| l.meets(f, r)).then_some(l)
            })
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn regulus_transversals(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let (f, q) = (geo.field(), geo.q());
    let mut t = Tally::default();
    let spreads: Vec<_> = (0..geo.lambda().len()).map(|a| geo.desarguesian_spread(a)).collect();
    let every_line = (q == 3).then(|| all_lines(f));
    let reguli = geo.reguli_through_r_u1();
    t.check(reguli.len() == q * q + q, || format!("{} reguli through r_U1", reguli.len()));
    for r in reguli {
        let ts = ambient_transversals(geo, r.lines());
        if let Some(all) = &every_line {
            let direct: Vec<Line> =
                all.par_iter().filter(|l| r.lines().iter().all(|x| l.meets(f, x))).copied().collect();
            t.check(direct == ts, || "transversal search disagrees with the full line scan".into());
        }
        t.check(ts.len() == q * q + 1, || format!("{} transversals", ts.len()));
        for l in &ts {
            t.check(l != geo.r_u1() && l.meets(f, geo.r_u1()), || format!("{l:?} does not meet r_U1 in one point"));
            if l == geo.t1() || l == geo.t2() {
                continue;
            }
            let counts: Vec<usize> = (0..spreads.len())
                .map(|a| l.points(f).iter().filter(|p| geo.subgeometry_of(p) == Some(a)).count())
                .collect();
            let hit: Vec<usize> = (0..counts.len()).filter(|&a| counts[a] > 0).collect();
            let ok = hit.len() == 1 && counts[hit[0]] == q + 1 && !spreads[hit[0]].contains(l);
            t.check(ok, || format!("{l:?}: Σ_α point counts {counts:?}"));
        }
    }
    ("all reguli of 𝒟_η through r_U1, all transversals".into(), t)
}

struct SpecialCase {
    alpha: usize,
    lambda: Fe,
    line: Line,
    conj: Line,
    spread: Vec<Line>,
    regulus: Regulus,
}

fn special_cases(geo: &Geometry) -> Vec<SpecialCase> {
    let f = geo.field();
    let x_tilde = f.generator();
    let mut out = Vec::new();
    for &alpha in geo.lambda().i_set() {
        for lambda in f.subfield() {
            let line = special_line(geo, alpha, lambda, x_tilde);
            let conj = tau_line(f, geo.lambda().eta(), &line).unwrap();
            let spread = geo.spread_from_transversal(&line).unwrap().lines().to_vec();
            let regulus = geo.regulus_of(&line).unwrap();
            out.push(SpecialCase { alpha, lambda, line, conj, spread, regulus });
        }
    }
    out
}

/// The plane π_{βv} whose section is `r_U1 ∪ l_λ^τ` instead of a Baer
/// subplane: N(α) = −1, β = α and v = −1.
fn conjugate_case(geo: &Geometry, case: &SpecialCase, beta: usize, v: usize) -> bool {
    geo.q() % 2 == 1
        && geo.lambda().has_norm_minus_one(case.alpha)
        && beta == case.alpha
        && unit(geo, v) == geo.field().minus_one()
}

fn special_line_sections(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let q = geo.q();
    let cases = special_cases(geo);
    let parts = cases
        .par_iter()
        .map(|case| {
            let mut t = Tally::default();
            for &beta in geo.lambda().i_set() {
                for v in 0..=q {
                    let plane = geo.pi_plane(beta, v).unwrap();
                    let sec = geo.plane_section(&plane, &case.spread);
                    let at = || format!("α={}, λ={:?}, β={beta}, v=ω^{v}", case.alpha, case.lambda);
                    t.check(sec.points.len() == 2 * q * q + 1, || format!("{}: {} points", at(), sec.points.len()));
                    t.check(sec.contained == [*geo.r_u1()], || format!("{}: contained lines ≠ r_U1", at()));
                    let ok = if beta == case.alpha && v == 0 {
                        sec.shape == ResidueShape::Line(case.line)
                    } else if conjugate_case(geo, case, beta, v) {
                        sec.shape == ResidueShape::Line(case.conj)
                    } else {
                        matches!(sec.shape, ResidueShape::BaerSubplane(_))
                    };
                    t.check(ok, || format!("{}: residue shape {:?}", at(), shape_name(&sec.shape)));
                }
            }
            t
        })
        .collect();
    ("all α ∈ 𝓘, λ ∈ GF(q), β ∈ 𝓘, v ∈ 𝒰".into(), merge_all(parts))
}

fn shape_name(s: &ResidueShape) -> &'static str {
    match s {
        ResidueShape::Line(_) => "line",
        ResidueShape::BaerSubplane(_) => "Baer subplane",
        ResidueShape::Other => "other",
    }
}

/// `P_{(β^q α / α^q) v^q} = (1, 0, β^q α v^q / α^q, 0)`.
fn meeting_point(geo: &Geometry, alpha: usize, beta: usize, v: usize) -> Point {
    let f = geo.field();
    let (a, b) = (geo.lambda().alpha(alpha), geo.lambda().alpha(beta));
    let x = f.div(f.mul(f.mul(f.frob(b), a), f.frob(unit(geo, v))), f.frob(a));
    Point::new(f, [Fe::ONE, Fe::ZERO, x, Fe::ZERO]).unwrap()
}

/// How σ_{βv,λ} meets Σ_β ∩ π_{βv}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Overlap {
    NoSubplane,
    /// The predicted q+2 points: P and a Baer subline not through P.
    Predicted,
    /// Any other configuration: the number of common points and whether
    /// they are collinear with P among them.
    Other {
        points: usize,
        collinear_through_p: bool,
    },
}

fn overlap(geo: &Geometry, case: &SpecialCase, beta: usize, v: usize) -> Overlap {
    let (f, q) = (geo.field(), geo.q());
    let plane = geo.pi_plane(beta, v).unwrap();
    let sec = geo.plane_section(&plane, &case.spread);
    let ResidueShape::BaerSubplane(sigma) = &sec.shape else {
        return Overlap::NoSubplane;
    };
    let common: Vec<Point> = geo
        .subgeometry_points(beta)
        .iter()
        .filter(|p| plane.contains_point(f, p) && sigma.binary_search(p).is_ok())
        .copied()
        .collect();
    let p = meeting_point(geo, case.alpha, beta, v);
    let rest: Vec<Point> = common.iter().filter(|x| **x != p).copied().collect();
    let through = |a: &Point, b: &Point| Line::through(f, a, b).ok();
    if common.len() == q + 2 && common.contains(&p) {
        if let Some(l) = through(&rest[0], &rest[1]) {
            if rest.iter().all(|x| l.contains(f, x)) && !l.contains(f, &p) {
                return Overlap::Predicted;
            }
        }
    }
    let collinear_through_p = common.len() >= 2
        && common.contains(&p)
        && through(&p, &rest[0]).is_some_and(|l| common.iter().all(|x| l.contains(f, x)));
    Overlap::Other { points: common.len(), collinear_through_p }
}

fn subplane_overlap(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let q = geo.q();
    let cases = special_cases(geo);
    let parts = cases
        .par_iter()
        .map(|case| {
            let mut t = Tally::default();
            for &beta in geo.lambda().i_set() {
                for v in 1..=q {
                    if conjugate_case(geo, case, beta, v) {
                        continue;
                    }
                    let got = overlap(geo, case, beta, v);
                    t.check(got == Overlap::Predicted, || {
                        format!("α={}, λ={:?}, β={beta}, v=ω^{v}: {got:?}", case.alpha, case.lambda)
                    });
                }
            }
            t
        })
        .collect();
    ("all α ∈ 𝓘, λ ∈ GF(q), β ∈ 𝓘, v ∈ 𝒰 \\ {1}".into(), merge_all(parts))
}

/// The (α, λ, β, v) outside the conjugate case where σ_{βv,λ} and
/// Σ_β ∩ π_{βv} do not share P plus a Baer subline.
pub fn overlap_exceptions(geo: &Geometry) -> Vec<(usize, Fe, usize, usize, Overlap)> {
    let mut out = Vec::new();
    for case in special_cases(geo) {
        for &beta in geo.lambda().i_set() {
            for v in 1..=geo.q() {
                if conjugate_case(geo, &case, beta, v) {
                    continue;
                }
                let got = overlap(geo, &case, beta, v);
                if got != Overlap::Predicted {
                    out.push((case.alpha, case.lambda, beta, v, got));
                }
            }
        }
    }
    out
}

fn pencil_meeting_point(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let f = geo.field();
    let cases = special_cases(geo);
    let parts: Vec<(Tally, usize)> = cases
        .par_iter()
        .map(|case| {
            let mut t = Tally::default();
            let reg = geo.extended_points(case.regulus.lines());
            let outside: Vec<Point> =
                geo.extended_points(&case.spread).into_iter().filter(|p| reg.binary_search(p).is_err()).collect();
            let mut hits = 0;
            for e in geo.line_set() {
                if e.line == case.line {
                    continue;
                }
                if !e.line.points(f).iter().any(|p| outside.binary_search(p).is_ok()) {
                    continue;
                }
                hits += 1;
                let p = meeting_point(geo, case.alpha, e.label.alpha_idx, e.label.v_pow);
                t.check(e.line.contains(f, &p), || {
                    format!(
                        "α={}, λ={:?}: line labelled {} misses the predicted point",
                        case.alpha, case.lambda, e.label
                    )
                });
            }
            (t, hits)
        })
        .collect();
    let hits: usize = parts.iter().map(|(_, h)| h).sum();
    let mut t = merge_all(parts.into_iter().map(|(t, _)| t).collect());
    t.check(hits > 0, || "no line of 𝓛 meets any S̄_{l_λ} \\ R̄_{l_λ}".into());
    ("all α ∈ 𝓘, λ ∈ GF(q), ℓ ∈ 𝓛".into(), t)
}

fn line_set(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let (f, q) = (geo.field(), geo.q());
    let mut t = Tally::default();
    let ls = geo.line_set();
    let expected = geo.lambda().i_set().len() * q * (q + 1) * (q + 1);
    t.check(ls.len() == expected, || format!("|𝓛| = {}, expected {expected}", ls.len()));
    let distinct: HashSet<Line> = ls.iter().map(|e| e.line).collect();
    t.check(distinct.len() == ls.len(), || "repeated line in 𝓛".into());
    for &a in geo.lambda().i_set() {
        for u in 0..=q {
            for v in 0..=q {
                let p = geo.pencil(Candidate { alpha_idx: a, u_pow: u, v_pow: v }).unwrap();
                t.check(p.lines.len() == q + 1 && p.lines.contains(geo.r_u1()), || format!("pencil ({a},{u},{v})"));
            }
        }
    }
    let dkey = geo.desarguesian();
    let parts: Vec<Tally> = ls
        .par_iter()
        .map(|e| {
            let mut t = Tally::default();
            t.check(e.line.points(f).iter().all(|p| geo.point_id(p).is_none()), || format!("{} meets Σ_η", e.label));
            let r = geo.regulus_of(&e.line).unwrap();
            t.check(r.lines().len() == q + 1 && r.contains(geo.r_u1()), || format!("R_ℓ for {}", e.label));
            t.check(r.lines().iter().all(|l| dkey.contains(l)), || format!("R_ℓ for {} leaves 𝒟_η", e.label));
            let s = geo.spread_from_transversal(&e.line).unwrap();
            t.check(geo.check_spread(s.lines()).is_spread(), || format!("S_ℓ for {} is not a spread", e.label));
            t
        })
        .collect();
    ("exhaustive over 𝓛".into(), t.merge(merge_all(parts)))
}

struct LineData {
    label: Candidate,
    points: Vec<Point>,
    regulus: Vec<u32>,
    /// `S̄_ℓ \ R̄_ℓ`, sorted.
    outside: Vec<Point>,
}

fn line_data(geo: &Geometry) -> Vec<LineData> {
    let f = geo.field();
    geo.line_set()
        .par_iter()
        .map(|e| {
            let r = geo.regulus_of(&e.line).unwrap();
            let s = geo.spread_from_transversal(&e.line).unwrap();
            let reg = geo.extended_points(r.lines());
            let outside =
                geo.extended_points(s.lines()).into_iter().filter(|p| reg.binary_search(p).is_err()).collect();
            LineData { label: e.label, points: e.line.points(f), regulus: geo.spread_key(r.lines()).unwrap(), outside }
        })
        .collect()
}

/// For each ordered pair of pencil labels, the number of line pairs
/// (ℓ_i, ℓ_j), ℓ_i ≠ ℓ_j, with equal reguli and with ℓ_j meeting
/// `S̄_ℓi \ R̄_ℓi`.
fn label_pair_counts(data: &[LineData]) -> Vec<((Candidate, Candidate), (usize, usize))> {
    let mut grouped: BTreeMap<Candidate, Vec<usize>> = BTreeMap::new();
    for (k, d) in data.iter().enumerate() {
        grouped.entry(d.label).or_default().push(k);
    }
    let by_label: Vec<(Candidate, Vec<usize>)> = grouped.into_iter().collect();
    let pairs: Vec<(usize, usize)> =
        (0..by_label.len()).flat_map(|i| (0..by_label.len()).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let (mut equal, mut meeting) = (0, 0);
            for &a in &by_label[i].1 {
                for &b in &by_label[j].1 {
                    if a == b {
                        continue;
                    }
                    equal += (data[a].regulus == data[b].regulus) as usize;
                    meeting += data[b].points.iter().any(|p| data[a].outside.binary_search(p).is_ok()) as usize;
                }
            }
            ((by_label[i].0, by_label[j].0), (equal, meeting))
        })
        .collect()
}

fn ratio_condition(geo: &Geometry, x: &Candidate, y: &Candidate) -> bool {
    let f = geo.field();
    let (ui, vi) = (unit(geo, x.u_pow), unit(geo, x.v_pow));
    let (uj, vj) = (unit(geo, y.u_pow), unit(geo, y.v_pow));
    x == y || !f.sub(f.mul(ui, vj), f.mul(uj, vi)).is_zero()
}

fn conic_condition(geo: &Geometry, x: &Candidate, y: &Candidate) -> bool {
    let (f, l) = (geo.field(), geo.lambda());
    let (al, be) = (l.alpha(x.alpha_idx), l.alpha(y.alpha_idx));
    let (ui, vi) = (unit(geo, x.u_pow), unit(geo, x.v_pow));
    let (uj, vj) = (unit(geo, y.u_pow), unit(geo, y.v_pow));
    let lhs = f.mul(f.mul(al, ui), f.frob(f.mul(be, vj)));
    let rhs = f.mul(f.frob(f.mul(al, vi)), f.mul(be, uj));
    x == y || lhs != rhs
}

/// Line pairs of 𝓛 whose regulus-equality or extension-disjointness
/// verdict differs from the condition on their labels read line by line:
/// `(pairs, regulus mismatches, disjointness mismatches)`.
pub fn line_level_mismatches(geo: &Geometry) -> (u64, u64, u64) {
    let data = line_data(geo);
    let counts = label_pair_counts(&data);
    let size = |c: &Candidate| data.iter().filter(|d| d.label == *c).count() as u64;
    let (mut pairs, mut reg, mut dis) = (0u64, 0u64, 0u64);
    for ((x, y), (equal, meeting)) in &counts {
        let n = if x == y { size(x) * (size(x) - 1) } else { size(x) * size(y) };
        pairs += n;
        reg += if ratio_condition(geo, x, y) { *equal as u64 } else { n - *equal as u64 };
        dis += if conic_condition(geo, x, y) { *meeting as u64 } else { n - *meeting as u64 };
    }
    (pairs, reg, dis)
}

/// Per pencil-label pair: the reguli of the two punctured pencils are all
/// distinct iff the labels are equal or `u_i v_j − u_j v_i ≠ 0`; otherwise
/// exactly q line pairs share a regulus.
fn regulus_equality(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let q = geo.q();
    let data = line_data(geo);
    let mut t = Tally::default();
    for ((x, y), (equal, _)) in label_pair_counts(&data) {
        let predicted = ratio_condition(geo, &x, &y);
        t.check(predicted == (equal == 0), || {
            format!("{x} vs {y}: {equal} shared reguli, predicted distinct {predicted}")
        });
        if !predicted {
            t.check(equal == q, || format!("{x} vs {y}: {equal} shared reguli, expected a matching of size {q}"));
        }
    }
    ("all ordered pairs of pencil labels".into(), t)
}

/// Per pencil-label pair: no line of the second pencil meets
/// `S̄_ℓ \ R̄_ℓ` for a line ℓ of the first iff the labels are equal or
/// `αu_i(βv_j)^q − (αv_i)^q βu_j ≠ 0`.
fn extension_disjointness(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let data = line_data(geo);
    let mut t = Tally::default();
    for ((x, y), (_, meeting)) in label_pair_counts(&data) {
        let predicted = conic_condition(geo, &x, &y);
        t.check(predicted == (meeting == 0), || {
            format!("{x} vs {y}: {meeting} meeting line pairs, predicted disjoint {predicted}")
        });
    }
    ("all ordered pairs of pencil labels".into(), t)
}

fn hall_spreads(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let q = geo.q();
    let d = geo.desarguesian();
    let parts = geo
        .line_set()
        .par_iter()
        .map(|e| {
            let mut t = Tally::default();
            let h = geo.hall_spread(&e.line).unwrap();
            let s = geo.spread_from_transversal(&e.line).unwrap();
            t.check(h.kind() == SpreadKind::Hall, || format!("{}: not tagged Hall", e.label));
            t.check(geo.check_spread(h.lines()).is_spread(), || {
                format!("{}: Hall spread fails the spread check", e.label)
            });
            t.check(h.lines().iter().all(|l| !d.contains(l)), || format!("{}: shares a line with 𝒟_η", e.label));
            let only_s = s.lines().iter().filter(|l| !h.contains(l)).count();
            let only_h = h.lines().iter().filter(|l| !s.contains(l)).count();
            t.check(only_s == q + 1 && only_h == q + 1, || {
                format!("{}: differs from S_ℓ in {only_s}+{only_h} lines", e.label)
            });
            t
        })
        .collect();
    ("every line of 𝓛".into(), merge_all(parts))
}

fn plane_model(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let (f, l, q) = (geo.field(), geo.lambda(), geo.q());
    let model = PlaneModel::new(l);
    let units = f.unit_circle();
    let mut t = Tally::default();
    let mut all = HashSet::new();
    for &a in l.i_set() {
        let z = model.z_points(a);
        t.check(z.len() == (q + 1) * (q + 1), || format!("|𝒵_α| = {} for α index {a}", z.len()));
        let mut line_class = vec![0usize; units.len()];
        let mut conic_class = vec![0usize; units.len()];
        for p in &z {
            all.insert(*p);
            let on_lines: Vec<usize> = (0..units.len()).filter(|&i| model.on_line(p, units[i])).collect();
            let on_conics: Vec<usize> = (0..units.len()).filter(|&i| model.on_conic(p, a, units[i])).collect();
            t.check(on_lines.len() == 1 && on_conics.len() == 1, || {
                format!("{p:?} on {} lines, {} conics", on_lines.len(), on_conics.len())
            });
            if let (Some(&i), Some(&j)) = (on_lines.first(), on_conics.first()) {
                line_class[i] += 1;
                conic_class[j] += 1;
            }
        }
        t.check(line_class.iter().chain(&conic_class).all(|&c| c == q + 1), || format!("class sizes for α index {a}"));
        for u in 0..=q {
            for v in 0..=q {
                let c = Candidate { alpha_idx: a, u_pow: u, v_pow: v };
                t.check(epsilon_inverse(l, &epsilon_point(l, &c)) == Some(c), || format!("ε round trip for {c}"));
            }
        }
    }
    let expected = l.i_set().len() * (q + 1) * (q + 1);
    t.check(all.len() == expected, || format!("|𝒵| = {}, expected {expected}", all.len()));
    ("exhaustive".into(), t)
}

/// Visits every k-subset of 0..n in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn predicate_agreement(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let (l, q) = (geo.lambda(), geo.q());
    let cands: Vec<Candidate> = l
        .i_set()
        .iter()
        .flat_map(|&a| (0..=q).flat_map(move |u| (0..=q).map(move |v| Candidate { alpha_idx: a, u_pow: u, v_pow: v })))
        .collect();
    let total = binomial(cands.len(), q + 1);
    let (scope, subsets) = if total <= 200_000 {
        let mut subsets = Vec::new();
        for_each_subset(cands.len(), q + 1, |idx| subsets.push(idx.iter().map(|&i| cands[i]).collect::<Vec<_>>()));
        (format!("all {total} subsets"), subsets)
    } else {
        let mut r = rng(cfg, 11);
        let subsets: Vec<Vec<Candidate>> =
            (0..cfg.predicate_samples).map(|_| cands.choose_multiple(&mut r, q + 1).copied().collect()).collect();
        (format!("{} uniform subsets of {total}, seed {}", subsets.len(), cfg.seed), subsets)
    };
    let verdicts: Vec<(bool, bool)> =
        subsets.par_iter().map(|s| (is_good(l, s).unwrap(), is_good_geometric(l, s).unwrap())).collect();
    let mut t = Tally::default();
    for (s, (alg, geom)) in subsets.iter().zip(&verdicts) {
        t.check(alg == geom, || format!("{s:?}: algebraic {alg}, geometric {geom}"));
    }
    if total <= 200_000 {
        let good = verdicts.iter().filter(|v| v.0).count() as u64;
        let count = GoodSetSearch::new(l, CandidateFilter::All).count(cfg.jobs);
        t.check(good == count, || format!("{good} good subsets, enumeration gives {count}"));
    }
    (scope, t)
}

fn intersection_tables(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let (f, l, q) = (geo.field(), geo.lambda(), geo.q());
    let model = PlaneModel::new(l);
    let units = f.unit_circle();
    let pairs: Vec<(Fe, Fe)> = units.iter().flat_map(|&c| units.iter().map(move |&b| (c, b))).collect();
    let z: Vec<_> = l.i_set().iter().flat_map(|&a| model.z_points(a)).collect();
    let parts = pairs
        .par_iter()
        .map(|&(c, b)| {
            let mut t = Tally::default();
            let prof = model.intersection_profile(c, b);
            let sign = f.pow(f.mul(c, b), (q as u64 + 1) / 2);
            for (i, &a) in l.i_set().iter().enumerate() {
                for (j, _) in l.i_set().iter().enumerate() {
                    let expected = if i != j {
                        0
                    } else if q % 2 == 0 {
                        1
                    } else {
                        let square = f.is_subfield_square(l.norm(a));
                        if (square && sign == Fe::ONE) || (!square && sign == f.minus_one()) {
                            2
                        } else {
                            0
                        }
                    };
                    t.check(prof[i][j] == expected, || {
                        format!("c={c:?}, b={b:?}, α#{i}, β#{j}: {} ≠ {expected}", prof[i][j])
                    });
                }
            }
            let expected_total = if q % 2 == 0 {
                l.i_set().len()
            } else if sign == Fe::ONE {
                2 * l.i1().len()
            } else {
                2 * l.i2().len()
            };
            let total: usize = prof.iter().flatten().sum();
            let direct = z.iter().filter(|p| model.on_line(p, c) && model.on_bundle(p, b)).count();
            t.check(total == expected_total && direct == expected_total, || {
                format!("c={c:?}, b={b:?}: table sum {total}, direct {direct}, expected {expected_total}")
            });
            t
        })
        .collect();
    ("all c, b ∈ 𝒰 and α, β ∈ 𝓘".into(), merge_all(parts))
}

fn good_set_count(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let (l, q) = (geo.lambda(), geo.q());
    let mut t = Tally::default();
    let enumerate = q <= 7;
    for filter in [CandidateFilter::All, CandidateFilter::ExcludeNormMinusOne] {
        let perm = count_by_permanent(l, filter);
        let closed = count_closed_form(l, filter);
        t.check(perm == closed, || format!("{filter:?}: permanent {perm}, closed form {closed}"));
        if enumerate {
            let n = GoodSetSearch::new(l, filter).count(cfg.jobs);
            t.check(perm == n.into(), || format!("{filter:?}: permanent {perm}, enumeration {n}"));
        }
    }
    let scope = if enumerate { "enumeration, permanent, closed form" } else { "permanent, closed form" };
    (scope.into(), t)
}

fn parallelism_cover(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let q = geo.q();
    let (scope, family) = good_set_family(geo, cfg, 21);
    let parts = family
        .par_iter()
        .map(|gs| {
            let mut t = Tally::default();
            let p = build_parallelism(geo, gs).unwrap();
            let cert = verify_parallelism(geo, &p);
            t.check(cert.pass(), || {
                format!(
                    "{:?}: {} uncovered, {} multiply covered",
                    gs.entries(),
                    cert.uncovered.len(),
                    cert.multiply_covered.len()
                )
            });
            let desarguesian = p.spreads().iter().filter(|s| s.kind() == SpreadKind::Desarguesian).count();
            t.check(desarguesian == 1 && p.len() == q * q + q + 1, || format!("{:?}: shape", gs.entries()));
            t.check(cert.line_total == (q * q + 1) * (q * q + q + 1), || "line total".into());
            t
        })
        .collect();
    (scope, merge_all(parts))
}

fn non_good_fails_cover(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let (l, q) = (geo.lambda(), geo.q());
    let all = GoodSetSearch::new(l, CandidateFilter::All).collect(cfg.jobs, None);
    let mut r = rng(cfg, 31);
    let mut mutants: Vec<Vec<Candidate>> = Vec::new();
    let mut seen = HashSet::new();
    let mut attempts = 0;
    while mutants.len() < cfg.mutations && attempts < 100 * cfg.mutations {
        attempts += 1;
        let gs = all.choose(&mut r).unwrap();
        let mut entries = gs.entries().to_vec();
        let i = r.gen_range(0..entries.len());
        let v = r.gen_range(0..=q);
        if v == entries[i].v_pow {
            continue;
        }
        entries[i].v_pow = v;
        entries.sort();
        let distinct = entries.windows(2).all(|w| w[0] != w[1]);
        if distinct && matches!(check_good(l, &entries), Ok(Some(_))) && seen.insert(entries.clone()) {
            mutants.push(entries);
        }
    }
    let mut t = Tally::default();
    t.check(mutants.len() == cfg.mutations, || format!("only {} mutants found", mutants.len()));
    let parts = mutants
        .par_iter()
        .map(|m| {
            let mut t = Tally::default();
            let p = build_line_family(geo, m).unwrap();
            let cert = verify_parallelism(geo, &p);
            let witness = cert.multiply_covered.first().map(|x| x.0).or(cert.uncovered.first().copied());
            t.check(!cert.pass() && witness.is_some(), || format!("{m:?} builds a parallelism"));
            t
        })
        .collect();
    (format!("{} mutated sets, seed {}", mutants.len(), cfg.seed), t.merge(merge_all(parts)))
}

fn group_e(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let (f, q) = (geo.field(), geo.q());
    let e = GroupE::new(f);
    let mut t = Tally::default();
    t.check(e.order() == q * q, || format!("|E| = {}", e.order()));
    let perms: Vec<Option<Vec<u32>>> = e.elements().par_iter().map(|(_, g)| point_action(geo, g)).collect();
    t.check(perms.iter().all(Option::is_some), || "an element of E does not preserve Σ_η".into());
    let perms: Vec<Vec<u32>> = perms.into_iter().flatten().collect();
    let distinct: HashSet<&Vec<u32>> = perms.iter().collect();
    t.check(distinct.len() == q * q, || "E acts unfaithfully on Σ_η".into());
    let compose = |a: &[u32], b: &[u32]| -> Vec<u32> { a.iter().map(|&x| b[x as usize]).collect() };
    let id: Vec<u32> = (0..geo.sigma_points().len() as u32).collect();
    for a in &perms {
        for b in &perms {
            t.check(compose(a, b) == compose(b, a), || "E is not abelian".into());
        }
        let mut x = a.clone();
        for _ in 1..f.p() {
            x = compose(&x, a);
        }
        t.check(x == id, || "element of order other than p".into());
    }
    let r_points = geo.r_u1().points(f);
    let planes = planes_through(geo, geo.r_u1());
    for (b, g) in e.elements() {
        t.check(r_points.iter().all(|p| g.apply_point(f, p) == *p), || format!("E_{b:?} moves a point of r_U1"));
        t.check(g.apply_line(f, geo.t1()) == *geo.t1() && g.apply_line(f, geo.t2()) == *geo.t2(), || {
            format!("E_{b:?} moves t₁ or t₂")
        });
        t.check(planes.iter().all(|pi| g.apply_plane(f, pi) == *pi), || format!("E_{b:?} moves a plane through r_U1"));
        for a in 0..geo.lambda().len() {
            let sub = geo.subgeometry_points(a);
            t.check(sub.iter().step_by(7).all(|p| sub.binary_search(&g.apply_point(f, p)).is_ok()), || {
                format!("E_{b:?} moves Σ_α for α index {a}")
            });
        }
    }
    let (scope, family) = good_set_family(geo, cfg, 41);
    let all_elements = q <= 4;
    let parts = family
        .par_iter()
        .map(|gs| {
            let mut t = Tally::default();
            let p = build_parallelism(geo, gs).unwrap();
            t.check(is_e_invariant(geo, &e, &p, all_elements), || format!("{:?} is not E-invariant", gs.entries()));
            t
        })
        .collect();
    let how = if all_elements { "all elements" } else { "generators" };
    (format!("group structure; invariance of {scope} under {how}"), t.merge(merge_all(parts)))
}

fn pencil_orbits(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let f = geo.field();
    let e = GroupE::new(f);
    let parts = geo
        .line_set()
        .par_iter()
        .map(|entry| {
            let mut t = Tally::default();
            let mut orbit: Vec<Line> = e.elements().iter().map(|(_, g)| g.apply_line(f, &entry.line)).collect();
            orbit.sort();
            orbit.dedup();
            let mut pencil: Vec<Line> =
                geo.pencil(entry.label).unwrap().lines.into_iter().filter(|l| l != geo.r_u1()).collect();
            pencil.sort();
            t.check(orbit == pencil, || {
                format!("orbit of a line labelled {} is not its punctured pencil", entry.label)
            });
            t
        })
        .collect();
    ("every line of 𝓛".into(), merge_all(parts))
}

fn characterize_roundtrip(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let e = GroupE::new(geo.field());
    let (scope, family) = good_set_family(geo, cfg, 51);
    let parts = family
        .par_iter()
        .map(|gs| {
            let mut t = Tally::default();
            let p = build_parallelism(geo, gs).unwrap();
            let got = characterize(geo, &e, &p);
            let want = gs.flip_canonical(geo.lambda());
            t.check(got.as_ref() == Ok(&want), || format!("{:?}: recovered {got:?}", gs.entries()));
            t
        })
        .collect();
    (scope, merge_all(parts))
}

fn distinct_parallelisms(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let (l, q) = (geo.lambda(), geo.q());
    let filter = if q <= 4 { CandidateFilter::All } else { CandidateFilter::ExcludeNormMinusOne };
    let family = GoodSetSearch::new(l, filter).collect(cfg.jobs, None);
    let keys: Vec<ParallelismKey> =
        family.par_iter().map(|gs| build_parallelism(geo, gs).unwrap().key(geo).unwrap()).collect();
    let mut t = Tally::default();
    let mut by_key: HashMap<&ParallelismKey, GoodSet> = HashMap::new();
    let mut canon = HashSet::new();
    for (gs, k) in family.iter().zip(&keys) {
        let c = gs.flip_canonical(l);
        canon.insert(c.clone());
        match by_key.get(k) {
            Some(prev) => {
                t.check(*prev == c, || format!("{:?} and {:?} give the same parallelism", prev.entries(), c.entries()))
            }
            None => {
                by_key.insert(k, c);
            }
        }
    }
    t.check(by_key.len() == canon.len(), || format!("{} parallelisms from {} flip classes", by_key.len(), canon.len()));
    if filter == CandidateFilter::ExcludeNormMinusOne || l.i_set().iter().all(|&a| !l.has_norm_minus_one(a)) {
        t.check(by_key.len() == family.len(), || {
            format!("{} parallelisms from {} good sets", by_key.len(), family.len())
        });
    }
    let name = if filter == CandidateFilter::All { "all" } else { "norm −1 free" };
    (format!("{name} {} good sets", family.len()), t)
}

fn g1_action(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let (f, l, q) = (geo.field(), geo.lambda(), geo.q());
    let (scope, family) = good_set_family(geo, cfg, 61);
    let d_id = geo.spread_key(geo.desarguesian().lines()).unwrap();
    let r_id = geo.line_id(geo.r_u1()).unwrap();
    let mut t = Tally::default();
    let witnesses: Vec<(G1Element, Vec<u32>)> = (0..=q)
        .flat_map(|u| (0..=q).map(move |v| G1Element { u_pow: u, v_pow: v, swap: false }))
        .map(|h| (h, line_action(geo, &diagonal_witness(f, h).unwrap()).unwrap()))
        .collect();
    for (h, perm) in &witnesses {
        let mut img: Vec<u32> = d_id.iter().map(|&i| perm[i as usize]).collect();
        img.sort_unstable();
        t.check(img == d_id && perm[r_id as usize] == r_id, || format!("witness for {h:?} leaves Γ_r_U1"));
    }
    let parts = family
        .par_iter()
        .map(|gs| {
            let mut t = Tally::default();
            let d = dual(l, gs);
            t.check(d.as_ref().map(|d| dual(l, d).ok() == Some(gs.clone())).unwrap_or(false), || {
                format!("dual of {:?}", gs.entries())
            });
            let key = family_key(geo, gs.entries());
            for (h, perm) in &witnesses {
                let img = apply_g1(l, gs, *h).unwrap();
                t.check(apply_to_key(perm, &key) == family_key(geo, img.entries()), || {
                    format!("{h:?} on {:?}", gs.entries())
                });
            }
            t
        })
        .collect();
    (format!("{scope}, all of H"), t.merge(merge_all(parts)))
}

fn stabilizer_order(geo: &Geometry, _: &SuiteConfig) -> (String, Tally) {
    let (f, q) = (geo.field(), geo.q());
    let mut t = Tally::default();
    let group = CollineationGroup::stabilizer(geo);
    let formula = group_order_formula(q, f.m(), true);
    t.check(formula == group.order().into(), || format!("closure order {}, formula {formula}", group.order()));
    let d_id = geo.spread_key(geo.desarguesian().lines()).unwrap();
    let r_id = geo.line_id(geo.r_u1()).unwrap();
    for g in group.elements() {
        let mut img: Vec<u32> = d_id.iter().map(|&i| g.line_perm[i as usize]).collect();
        img.sort_unstable();
        t.check(img == d_id && g.line_perm[r_id as usize] == r_id, || "element leaves the stabiliser".into());
    }
    let mut scope = "closure of Γ_r_U1".to_string();
    if q == 3 {
        let gamma = CollineationGroup::gamma(geo);
        let formula = group_order_formula(q, f.m(), false);
        t.check(formula == gamma.order().into(), || format!("Γ closure order {}, formula {formula}", gamma.order()));
        scope.push_str(" and Γ");
    }
    (scope, t)
}

fn orbit_classification(geo: &Geometry, cfg: &SuiteConfig) -> (String, Tally) {
    let (f, l, q) = (geo.field(), geo.lambda(), geo.q());
    let group = CollineationGroup::stabilizer(geo);
    let family = GoodSetSearch::new(l, CandidateFilter::All).collect(cfg.jobs, None);
    let keys: Vec<ParallelismKey> = family.iter().map(|gs| family_key(geo, gs.entries())).collect();
    let report = classify_keys(&group, &keys);
    let mut t = Tally::default();
    t.check(report.orbit_stabilizer_holds(), || "orbit-stabilizer relation fails".into());
    t.check(report.family_closed(), || "family is not closed under Γ_r_U1".into());
    t.check(report.orbits.iter().all(|o| o.stabilizer_order % (q * q) == 0), || {
        "a stabiliser order is not divisible by |E|".into()
    });
    let count = BigRational::from_integer(report.orbits.len().into());
    for b in LowerBound::for_q(q) {
        let bound = lower_bound(q, f.m(), b).unwrap();
        t.check(count >= bound, || format!("{} orbits below the bound {}", report.orbits.len(), b.name()));
    }
    if q == 3 {
        let a = l.i_set()[0];
        let bs = beutelspacher(l, a, 0).unwrap();
        let bd = dual(l, &bs).unwrap();
        let (i, j) = (family.iter().position(|g| *g == bs).unwrap(), family.iter().position(|g| *g == bd).unwrap());
        t.check(report.orbit_of(i) != report.orbit_of(j), || "Beutelspacher set and its dual are equivalent".into());
    }
    let mut r = rng(cfg, 71);
    for _ in 0..10 {
        let i = r.gen_range(0..keys.len());
        let g = &group.elements()[r.gen_range(0..group.order())];
        let image = apply_to_key(&g.line_perm, &keys[i]);
        let found = crate::equivalence::equivalence_witness(&group, &keys[i], &image);
        t.check(found.is_some_and(|w| apply_to_key(&w.line_perm, &keys[i]) == image), || {
            "no witness for an image pair".into()
        });
    }
    (format!("all {} good sets, {} orbits", family.len(), report.orbits.len()), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_at_q3() {
        let geo = Geometry::for_q(3).unwrap();
        let cfg = SuiteConfig { predicate_samples: 2000, ..SuiteConfig::default() };
        for o in run_suites(&geo, &cfg, &[]) {
            assert_eq!(o.status, Status::Pass, "{o:?}");
        }
    }

    #[test]
    fn line_level_reading_fails_at_q3() {
        let geo = Geometry::for_q(3).unwrap();
        let (pairs, reg, dis) = line_level_mismatches(&geo);
        assert_eq!(pairs, 48 * 47);
        assert!(reg > 0 && dis > 0);
    }

    #[test]
    fn overlap_degenerates_at_beta_alpha_minus_one() {
        assert!(overlap_exceptions(&Geometry::for_q(3).unwrap()).is_empty());
        assert!(overlap_exceptions(&Geometry::for_q(4).unwrap()).is_empty());
        let geo = Geometry::for_q(5).unwrap();
        let f = geo.field();
        let ex = overlap_exceptions(&geo);
        let expected: Vec<usize> =
            geo.lambda().i_set().iter().copied().filter(|&a| !geo.lambda().has_norm_minus_one(a)).collect();
        assert_eq!(ex.len(), expected.len() * 5);
        for (alpha, _, beta, v, got) in ex {
            assert!(expected.contains(&alpha));
            assert_eq!(beta, alpha);
            assert_eq!(unit(&geo, v), f.minus_one());
            assert_eq!(got, Overlap::Other { points: 6, collinear_through_p: true });
        }
    }

    #[test]
    fn subsets_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(binomial(72, 6), 156_238_908);
    }
}

//! Parallelisms of Σ_η made of 𝒟_η and the Hall spreads of the lines in a
//! good set's punctured pencils, their exact-cover verification, the group
//! E of unitriangular collineations, and recovery of the good set.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field_tower::{Fe, Field};
use crate::goodsets::{check_good, Candidate, GoodSet, GoodSetError, Violation};
use crate::proj_geometry::{Collineation, Line};
use crate::spreads::{Geometry, HallProvenance, Regulus, Spread, SpreadKind, SpreadReport};

/// Spreads as sorted Σ_η line ids, the spreads themselves sorted. Two
/// parallelisms are equal iff their keys are.
pub type ParallelismKey = Vec<Vec<u32>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParallelismError {
    #[error("not a good set: {0}")]
    NotGood(Violation),
    #[error(transparent)]
    Malformed(#[from] GoodSetError),
    #[error("no pencil with label {0}")]
    BadLabel(Candidate),
}

#[derive(Debug, Clone)]
pub struct Parallelism {
    spreads: Vec<Spread>,
    source: Option<GoodSet>,
}

impl Parallelism {
    pub fn new(spreads: Vec<Spread>, source: Option<GoodSet>) -> Parallelism {
        Parallelism { spreads, source }
    }

    pub fn spreads(&self) -> &[Spread] {
        &self.spreads
    }

    pub fn into_spreads(self) -> Vec<Spread> {
        self.spreads
    }

    pub fn source(&self) -> Option<&GoodSet> {
        self.source.as_ref()
    }

    pub fn len(&self) -> usize {
        self.spreads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spreads.is_empty()
    }

    /// Position of the first member tagged Desarguesian.
    pub fn desarguesian_index(&self) -> Option<usize> {
        self.spreads.iter().position(|s| s.kind() == SpreadKind::Desarguesian)
    }

    pub fn replace_spread(&mut self, index: usize, s: Spread) {
        self.spreads[index] = s;
    }

    /// `None` if some line is not a line of Σ_η.
    pub fn key(&self, geo: &Geometry) -> Option<ParallelismKey> {
        let mut key: ParallelismKey = self.spreads.iter().map(|s| geo.spread_key(s.lines())).collect::<Option<_>>()?;
        key.sort();
        Some(key)
    }
}

fn hall_spreads_of(geo: &Geometry, label: &Candidate) -> Result<Vec<Spread>, ParallelismError> {
    let lines = geo.sigma_lines();
    let spreads: Vec<Spread> = geo
        .hall_catalog()
        .for_label(label)
        .map(|e| {
            let member = e.key.iter().map(|&i| lines[i as usize]).collect();
            let switched = Regulus::from_lines_unchecked(e.regulus_key.iter().map(|&i| lines[i as usize]).collect());
            Spread::with_provenance(member, HallProvenance { transversal: e.line, switched })
        })
        .collect();
    if spreads.is_empty() {
        return Err(ParallelismError::BadLabel(*label));
    }
    Ok(spreads)
}

/// `{𝒟_η} ∪ {hall_spread(ℓ) : ℓ ∈ 𝓛_P}` for any labels, good or not.
/// Members are ordered 𝒟_η first, then by label order and pencil order.
pub fn build_line_family(geo: &Geometry, labels: &[Candidate]) -> Result<Parallelism, ParallelismError> {
    let mut spreads = vec![geo.desarguesian().clone()];
    for label in labels {
        spreads.extend(hall_spreads_of(geo, label)?);
    }
    Ok(Parallelism::new(spreads, None))
}

/// Π_P for a good set P.
pub fn build_parallelism(geo: &Geometry, gs: &GoodSet) -> Result<Parallelism, ParallelismError> {
    if let Some(v) = check_good(geo.lambda(), gs.entries())? {
        return Err(ParallelismError::NotGood(v));
    }
    let mut p = build_line_family(geo, gs.entries())?;
    p.source = Some(gs.clone());
    Ok(p)
}

/// The key of Π_P straight from the catalog, without materialising lines.
pub fn family_key(geo: &Geometry, labels: &[Candidate]) -> ParallelismKey {
    let mut key = vec![geo.spread_key(geo.desarguesian().lines()).unwrap()];
    for label in labels {
        key.extend(geo.hall_catalog().for_label(label).map(|e| e.key.clone()));
    }
    key.sort();
    key
}

/// A member that failed the spread check.
#[derive(Debug, Clone)]
pub struct BadSpread {
    pub index: usize,
    pub kind: SpreadKind,
    pub report: SpreadReport,
}

/// Verification outcome. Coverage lists are sorted.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub q: usize,
    pub spread_count: usize,
    pub expected_spreads: usize,
    pub line_total: usize,
    pub expected_lines: usize,
    pub bad_spreads: Vec<BadSpread>,
    /// Σ_η lines listed more than once, with their multiplicity.
    pub multiply_covered: Vec<(Line, usize)>,
    pub uncovered: Vec<Line>,
    pub foreign: Vec<Line>,
    /// SHA-256 of the sorted line multiset.
    pub checksum: String,
}

impl Certificate {
    pub fn pass(&self) -> bool {
        self.spread_count == self.expected_spreads
            && self.line_total == self.expected_lines
            && self.bad_spreads.is_empty()
            && self.multiply_covered.is_empty()
            && self.uncovered.is_empty()
            && self.foreign.is_empty()
    }
}

/// SHA-256 over the sorted multiset of lines, each as its 8 canonical
/// coordinate codes.
pub fn line_multiset_checksum<'a>(lines: impl Iterator<Item = &'a Line>) -> String {
    let mut all: Vec<&Line> = lines.collect();
    all.sort();
    let mut h = Sha256::new();
    for l in all {
        for row in l.rows() {
            h.update(row.map(|x| x.0));
        }
    }
    hex::encode(h.finalize())
}

/// Checks every member with the spread check, then exact cover of the
/// Σ_η line set. Members are checked in parallel; the result does not
/// depend on scheduling.
pub fn verify_parallelism(geo: &Geometry, p: &Parallelism) -> Certificate {
    let q = geo.q();
    let bad_spreads: Vec<BadSpread> = p
        .spreads
        .par_iter()
        .enumerate()
        .filter_map(|(index, s)| {
            let report = geo.check_spread(s.lines());
            (!report.is_spread()).then(|| BadSpread { index, kind: s.kind(), report })
        })
        .collect();
    let n = geo.sigma_lines().len();
    let mut count = vec![0usize; n];
    let mut foreign = BTreeSet::new();
    for s in &p.spreads {
        for l in s.lines() {
            match geo.line_id(l) {
                Some(id) => count[id as usize] += 1,
                None => {
                    foreign.insert(*l);
                }
            }
        }
    }
    let lines = geo.sigma_lines();
    Certificate {
        q,
        spread_count: p.spreads.len(),
        expected_spreads: q * q + q + 1,
        line_total: p.spreads.iter().map(|s| s.lines().len()).sum(),
        expected_lines: n,
        bad_spreads,
        multiply_covered: (0..n).filter(|&i| count[i] > 1).map(|i| (lines[i], count[i])).collect(),
        uncovered: (0..n).filter(|&i| count[i] == 0).map(|i| lines[i]).collect(),
        foreign: foreign.into_iter().collect(),
        checksum: line_multiset_checksum(p.spreads.iter().flat_map(|s| s.lines())),
    }
}

/// The action of a collineation on the Σ_η line ids, or `None` if it does
/// not preserve Σ_η.
pub fn line_action(geo: &Geometry, c: &Collineation) -> Option<Vec<u32>> {
    let perm = point_action(geo, c)?;
    Some(line_action_from_points(geo, &perm))
}

/// The action on Σ_η point ids, or `None` if Σ_η is not preserved.
pub fn point_action(geo: &Geometry, c: &Collineation) -> Option<Vec<u32>> {
    let f = geo.field();
    geo.sigma_points().iter().map(|p| geo.point_id(&c.apply_point(f, p))).collect()
}

pub fn line_action_from_points(geo: &Geometry, points: &[u32]) -> Vec<u32> {
    (0..geo.sigma_lines().len() as u32)
        .map(|id| {
            let pts = geo.line_point_ids(id);
            geo.line_through_ids(points[pts[0] as usize], points[pts[1] as usize])
        })
        .collect()
}

/// The image of a parallelism key under a line permutation.
pub fn apply_to_key(line_perm: &[u32], key: &ParallelismKey) -> ParallelismKey {
    let mut out: ParallelismKey = key
        .iter()
        .map(|s| {
            let mut t: Vec<u32> = s.iter().map(|&i| line_perm[i as usize]).collect();
            t.sort_unstable();
            t
        })
        .collect();
    out.sort();
    out
}

/// `[[1,b,0,0],[0,1,0,0],[0,0,1,b^q],[0,0,0,1]]`.
pub fn e_element(f: &Field, b: Fe) -> Collineation {
    let (z, o) = (Fe::ZERO, Fe::ONE);
    Collineation::linear(f, [[o, b, z, z], [z, o, z, z], [z, z, o, f.frob(b)], [z, z, z, o]]).unwrap()
}

/// The group E with an F_p-basis of GF(q²) as generators.
#[derive(Debug, Clone)]
pub struct GroupE {
    elements: Vec<(Fe, Collineation)>,
    generators: Vec<(Fe, Collineation)>,
}

impl GroupE {
    pub fn new(f: &Field) -> GroupE {
        let elements = f.elements().map(|b| (b, e_element(f, b))).collect();
        let m = f.m();
        let generators = (0..2)
            .flat_map(|c| (0..m).map(move |j| (c, j)))
            .map(|(c, j)| {
                let mut digits = vec![vec![0u32; m], vec![0u32; m]];
                digits[c][j] = 1;
                let b = f.from_digits(&digits).unwrap();
                (b, e_element(f, b))
            })
            .collect();
        GroupE { elements, generators }
    }

    pub fn elements(&self) -> &[(Fe, Collineation)] {
        &self.elements
    }

    /// 2m elements whose parameters form an F_p-basis of GF(q²); b ↦ E_b
    /// is additive, so they generate E.
    pub fn generators(&self) -> &[(Fe, Collineation)] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

/// Whether Π^g = Π for the generators of E, or for every element when
/// `all_elements` is set.
pub fn is_e_invariant(geo: &Geometry, e: &GroupE, p: &Parallelism, all_elements: bool) -> bool {
    let Some(key) = p.key(geo) else {
        return false;
    };
    let set = if all_elements { e.elements() } else { e.generators() };
    set.par_iter().all(|(_, g)| match line_action(geo, g) {
        Some(perm) => apply_to_key(&perm, &key) == key,
        None => false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharacterizeError {
    #[error("expected {expected} spreads, found {found}")]
    WrongSpreadCount { found: usize, expected: usize },
    #[error("no member equals the Desarguesian spread 𝒟_η")]
    NoDesarguesian,
    #[error("member {member}: regulus misses r_U1 (not a Hall spread switching a regulus of 𝒟_η through r_U1)")]
    RegulusMissesRU1 { member: usize },
    #[error("not invariant under E")]
    NotEInvariant,
    #[error("not a parallelism: {uncovered} uncovered, {multiply_covered} multiply covered lines")]
    NotAParallelism { uncovered: usize, multiply_covered: usize },
    #[error("recovered set is not good: {0}")]
    RecoveredNotGood(String),
}

/// Recovers the good set behind a parallelism of the form
/// `{𝒟_η} ∪ {Hall spreads switching reguli through r_U1}` invariant under
/// E. Labels with N(α) = −1 are returned flip-canonical.
pub fn characterize(geo: &Geometry, e: &GroupE, p: &Parallelism) -> Result<GoodSet, CharacterizeError> {
    let q = geo.q();
    let expected = q * q + q + 1;
    if p.len() != expected {
        return Err(CharacterizeError::WrongSpreadCount { found: p.len(), expected });
    }
    let d = geo.desarguesian();
    let d_pos = p.spreads.iter().position(|s| s.lines() == d.lines()).ok_or(CharacterizeError::NoDesarguesian)?;
    let catalog = geo.hall_catalog();
    let mut labels: BTreeMap<Candidate, usize> = BTreeMap::new();
    let half = (q + 1) / 2;
    for (i, s) in p.spreads.iter().enumerate() {
        if i == d_pos {
            continue;
        }
        let hits = geo.spread_key(s.lines()).map(|k| catalog.lookup(&k).to_vec()).unwrap_or_default();
        let Some(label) = hits
            .iter()
            .map(|&h| catalog.entries[h].label)
            .map(|c| {
                if q % 2 == 1 && geo.lambda().has_norm_minus_one(c.alpha_idx) && c.u_pow >= half {
                    crate::goodsets::flip(geo.lambda(), c)
                } else {
                    c
                }
            })
            .min()
        else {
            return Err(CharacterizeError::RegulusMissesRU1 { member: i });
        };
        *labels.entry(label).or_default() += 1;
    }
    if !is_e_invariant(geo, e, p, false) {
        return Err(CharacterizeError::NotEInvariant);
    }
    let cert = verify_parallelism(geo, p);
    if !cert.pass() {
        return Err(CharacterizeError::NotAParallelism {
            uncovered: cert.uncovered.len(),
            multiply_covered: cert.multiply_covered.len(),
        });
    }
    if let Some((c, n)) = labels.iter().find(|(_, &n)| n != q) {
        return Err(CharacterizeError::RecoveredNotGood(format!("pencil {c} contributes {n} spreads, expected {q}")));
    }
    let cands: Vec<Candidate> = labels.into_keys().collect();
    GoodSet::new(geo.lambda(), cands).map_err(|e| CharacterizeError::RecoveredNotGood(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goodsets::{beutelspacher, CandidateFilter, GoodSetSearch};
    use std::collections::HashSet;

    #[test]
    fn beutelspacher_parallelism_q3() {
        let geo = Geometry::for_q(3).unwrap();
        let a = geo.lambda().i_set()[0];
        let gs = beutelspacher(geo.lambda(), a, 0).unwrap();
        let p = build_parallelism(&geo, &gs).unwrap();
        assert_eq!(p.len(), 13);
        assert_eq!(p.desarguesian_index(), Some(0));
        let cert = verify_parallelism(&geo, &p);
        assert!(cert.pass(), "{cert:?}");
        assert_eq!(cert.line_total, 130);
    }

    #[test]
    fn duplicated_desarguesian_member_fails() {
        let geo = Geometry::for_q(3).unwrap();
        let a = geo.lambda().i_set()[0];
        let gs = beutelspacher(geo.lambda(), a, 1).unwrap();
        let mut p = build_parallelism(&geo, &gs).unwrap();
        p.replace_spread(5, geo.desarguesian().clone());
        let cert = verify_parallelism(&geo, &p);
        assert!(!cert.pass());
        assert_eq!(cert.multiply_covered.len(), 10);
        assert_eq!(cert.uncovered.len(), 10);
    }

    #[test]
    fn e_group_structure() {
        for q in [3u32, 4, 5] {
            let f = Field::new(q).unwrap();
            let e = GroupE::new(&f);
            assert_eq!(e.order(), (q * q) as usize);
            assert_eq!(e.generators().len(), 2 * f.m());
            let id = Collineation::identity(&f);
            for (b, g) in e.elements() {
                for (c, h) in e.elements() {
                    assert_eq!(g.then(&f, h), e_element(&f, f.add(*b, *c)));
                }
                let mut x = *g;
                for _ in 1..f.p() {
                    x = x.then(&f, g);
                }
                assert_eq!(x, id);
            }
        }
    }

    #[test]
    fn pencil_is_an_e_orbit_q4() {
        let geo = Geometry::for_q(4).unwrap();
        let f = geo.field();
        let e = GroupE::new(f);
        for entry in geo.line_set().iter().step_by(7) {
            let orbit: HashSet<Line> = e.elements().iter().map(|(_, g)| g.apply_line(f, &entry.line)).collect();
            let pencil: HashSet<Line> =
                geo.pencil(entry.label).unwrap().lines.into_iter().filter(|l| l != geo.r_u1()).collect();
            assert_eq!(orbit, pencil);
        }
    }

    #[test]
    fn round_trip_q3_and_flip_collapse() {
        let geo = Geometry::for_q(3).unwrap();
        let e = GroupE::new(geo.field());
        let all = GoodSetSearch::new(geo.lambda(), CandidateFilter::All).collect(1, None);
        assert_eq!(all.len(), 64);
        let mut keys = HashSet::new();
        for gs in &all {
            let p = build_parallelism(&geo, gs).unwrap();
            assert!(verify_parallelism(&geo, &p).pass());
            assert!(is_e_invariant(&geo, &e, &p, true));
            assert_eq!(characterize(&geo, &e, &p).unwrap(), gs.flip_canonical(geo.lambda()));
            keys.insert(p.key(&geo).unwrap());
        }
        let canon: HashSet<GoodSet> = all.iter().map(|g| g.flip_canonical(geo.lambda())).collect();
        assert_eq!(keys.len(), canon.len());
        assert_eq!(keys.len(), 4);
    }

    #[test]
    fn characterize_failure_reasons() {
        let geo = Geometry::for_q(3).unwrap();
        let e = GroupE::new(geo.field());
        let a = geo.lambda().i_set()[0];
        let gs = beutelspacher(geo.lambda(), a, 0).unwrap();
        let p = build_parallelism(&geo, &gs).unwrap();

        let mut no_d = p.clone();
        no_d.replace_spread(0, p.spreads()[1].clone());
        assert_eq!(characterize(&geo, &e, &no_d), Err(CharacterizeError::NoDesarguesian));

        // Switch a regulus of 𝒟_η avoiding r_U1.
        let d = geo.desarguesian().lines().to_vec();
        let others: Vec<Line> = d.iter().filter(|l| *l != geo.r_u1()).copied().collect();
        let r = (2..others.len())
            .map(|k| geo.regulus_through(&others[0], &others[1], &others[k]).unwrap())
            .find(|r| !r.contains(geo.r_u1()))
            .unwrap();
        let opp = geo.opposite_regulus(&r).unwrap();
        let mut lines: Vec<Line> = d.iter().filter(|l| !r.contains(l)).copied().collect();
        lines.extend_from_slice(opp.lines());
        assert!(geo.check_spread(&lines).is_spread());
        let mut missing = p.clone();
        missing.replace_spread(4, Spread::new(lines, SpreadKind::Hall));
        assert_eq!(characterize(&geo, &e, &missing), Err(CharacterizeError::RegulusMissesRU1 { member: 4 }));

        let other = crate::goodsets::Candidate { alpha_idx: a, u_pow: 1, v_pow: 1 };
        let foreign = build_line_family(&geo, &[other]).unwrap();
        let mut broken = p.clone();
        broken.replace_spread(1, foreign.spreads()[1].clone());
        assert_eq!(characterize(&geo, &e, &broken), Err(CharacterizeError::NotEInvariant));
    }
}

//! The geometry around Σ_η: its points and lines, Desarguesian spreads,
//! Baer pencils, the line set 𝓛, transversal spreads, reguli and Hall
//! spreads.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::field_tower::{Fe, Field, FieldError, LambdaSystem};
use crate::goodsets::Candidate;
use crate::proj_geometry::{tau_line, BaerSubgeometry, Collineation, GeometryError, Line, Mat4, Plane, Point};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpreadError {
    #[error("transversal {0} meets Σ_η")]
    MeetsSigma(Line),
    #[error("transversal {0} is τ_η-stable")]
    SelfConjugate(Line),
    #[error("transversal {0} meets its τ_η-conjugate")]
    ConjugateNotSkew(Line),
    #[error("line {0} is not in 𝓛")]
    NotInLineSet(Line),
    #[error("Λ index {0} is not in 𝓘")]
    NotInI(usize),
    #[error("unit-circle exponent {0} out of range")]
    BadUnitExponent(usize),
    #[error("expected a regulus of q+1 lines, found {0} transversals")]
    NotARegulus(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpreadKind {
    Desarguesian,
    Hall,
    Unknown,
}

impl SpreadKind {
    pub fn tag(self) -> &'static str {
        match self {
            SpreadKind::Desarguesian => "desarguesian",
            SpreadKind::Hall => "hall",
            SpreadKind::Unknown => "unknown",
        }
    }
}

/// q+1 lines of Σ_η, sorted; equality is set equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Regulus {
    lines: Vec<Line>,
}

impl Regulus {
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn contains(&self, l: &Line) -> bool {
        self.lines.binary_search(l).is_ok()
    }

    /// Wraps lines without checking that they form a regulus.
    pub fn from_lines_unchecked(mut lines: Vec<Line>) -> Regulus {
        lines.sort();
        Regulus { lines }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallProvenance {
    pub transversal: Line,
    pub switched: Regulus,
}

/// A set of lines of Σ_η (stored as τ_η-stable lines of PG(3,q²)).
#[derive(Debug, Clone)]
pub struct Spread {
    lines: Vec<Line>,
    kind: SpreadKind,
    provenance: Option<HallProvenance>,
}

impl PartialEq for Spread {
    fn eq(&self, other: &Self) -> bool {
        self.lines == other.lines
    }
}

impl Eq for Spread {}

impl Spread {
    pub fn new(mut lines: Vec<Line>, kind: SpreadKind) -> Spread {
        lines.sort();
        Spread { lines, kind, provenance: None }
    }

    pub fn with_provenance(lines: Vec<Line>, provenance: HallProvenance) -> Spread {
        let mut s = Spread::new(lines, SpreadKind::Hall);
        s.provenance = Some(provenance);
        s
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn kind(&self) -> SpreadKind {
        self.kind
    }

    pub fn provenance(&self) -> Option<&HallProvenance> {
        self.provenance.as_ref()
    }

    pub fn contains(&self, l: &Line) -> bool {
        self.lines.binary_search(l).is_ok()
    }
}

/// The q+1 lines through `P_{αu}` in `π_{αv}` meeting `π_{αv} ∩ Σ_α` in a
/// Baer subline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pencil {
    pub label: Candidate,
    pub point: Point,
    pub plane: Plane,
    pub lines: Vec<Line>,
}

/// Outcome of a spread check; the first overlap and gap found are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadReport {
    pub line_count: usize,
    pub expected_lines: usize,
    pub foreign_lines: Vec<Line>,
    pub overlap: Option<(Point, Line, Line)>,
    pub gap: Option<Point>,
    pub overlapped_points: usize,
    pub uncovered_points: usize,
}

impl SpreadReport {
    pub fn is_spread(&self) -> bool {
        self.line_count == self.expected_lines
            && self.foreign_lines.is_empty()
            && self.overlap.is_none()
            && self.gap.is_none()
    }
}

/// Shape of the part of a plane section off the spread line it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResidueShape {
    /// The residue plus one point of the contained spread line is a line.
    Line(Line),
    /// The residue lies in a Baer subplane (returned in full).
    BaerSubplane(Vec<Point>),
    Other,
}

/// `π ∩ S̄` for a spread S.
#[derive(Debug, Clone)]
pub struct PlaneSection {
    pub plane: Plane,
    pub points: Vec<Point>,
    /// Extended spread lines lying in the plane.
    pub contained: Vec<Line>,
    pub residue: Vec<Point>,
    pub shape: ResidueShape,
}

/// A line of 𝓛 with its pencil label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledLine {
    pub line: Line,
    pub label: Candidate,
}

/// Hall spreads of all lines of 𝓛, keyed by their sorted Σ_η line ids.
#[derive(Debug)]
pub struct HallCatalog {
    pub entries: Vec<HallEntry>,
    by_key: HashMap<Vec<u32>, Vec<usize>>,
    by_label: HashMap<Candidate, Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct HallEntry {
    pub line: Line,
    pub label: Candidate,
    pub key: Vec<u32>,
    pub regulus_key: Vec<u32>,
}

impl HallCatalog {
    /// Catalog entries whose Hall spread has exactly this key.
    pub fn lookup(&self, key: &[u32]) -> &[usize] {
        self.by_key.get(key).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Catalog entries of the q lines of one punctured pencil.
    pub fn for_label(&self, label: &Candidate) -> impl Iterator<Item = &HallEntry> {
        self.by_label.get(label).into_iter().flatten().map(|&i| &self.entries[i])
    }
}

/// Everything that depends only on (field, Λ): Σ_η with its lines, the
/// special lines and points, 𝒟_η and lazily built catalogues.
pub struct Geometry {
    lambda: LambdaSystem,
    eta: BaerSubgeometry,
    tau_eta: Collineation,
    points: Vec<Point>,
    point_ids: HashMap<Point, u32>,
    lines: Vec<Line>,
    line_ids: HashMap<Line, u32>,
    line_points: Vec<u32>,
    t1: Line,
    t2: Line,
    r_u1: Line,
    desarguesian: Spread,
    subgeometries: OnceLock<Vec<Vec<Point>>>,
    line_set: OnceLock<Vec<LabeledLine>>,
    labels: OnceLock<HashMap<Line, Candidate>>,
    hall: OnceLock<HallCatalog>,
    reguli_through_r_u1: OnceLock<Vec<Regulus>>,
    pair_lines: OnceLock<Vec<u32>>,
}

impl std::fmt::Debug for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Geometry").field("q", &self.q()).finish()
    }
}

impl Geometry {
    pub fn for_q(q: u32) -> Result<Arc<Geometry>, FieldError> {
        Ok(Geometry::new(LambdaSystem::canonical(Field::new(q)?)))
    }

    pub fn new(lambda: LambdaSystem) -> Arc<Geometry> {
        let f = lambda.field().clone();
        let eta = BaerSubgeometry::new(lambda.eta()).unwrap();
        let tau_eta = eta.tau(&f);
        let points = eta.points(&f);
        let point_ids: HashMap<Point, u32> = points.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect();
        let n = points.len();
        let mut covered = vec![false; n * n];
        let mut found: Vec<(Line, Vec<u32>)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if covered[i * n + j] {
                    continue;
                }
                let l = Line::through(&f, &points[i], &points[j]).unwrap();
                let ids: Vec<u32> = l.points(&f).iter().filter_map(|p| point_ids.get(p).copied()).collect();
                for &a in &ids {
                    for &b in &ids {
                        covered[a as usize * n + b as usize] = true;
                    }
                }
                found.push((l, ids));
            }
        }
        found.sort();
        let lines: Vec<Line> = found.iter().map(|(l, _)| *l).collect();
        let line_points: Vec<u32> = found.iter().flat_map(|(_, ids)| ids.iter().copied()).collect();
        let line_ids = lines.iter().enumerate().map(|(i, l)| (*l, i as u32)).collect();
        let t1 = Line::through(&f, &Point::unit(0), &Point::unit(1)).unwrap();
        let t2 = Line::through(&f, &Point::unit(2), &Point::unit(3)).unwrap();
        let r_u1 = Line::through(&f, &Point::unit(0), &Point::unit(2)).unwrap();
        let desarguesian = Spread::new(
            t1.points(&f).iter().map(|p| Line::through(&f, p, &tau_eta.apply_point(&f, p)).unwrap()).collect(),
            SpreadKind::Desarguesian,
        );
        Arc::new(Geometry {
            lambda,
            eta,
            tau_eta,
            points,
            point_ids,
            lines,
            line_ids,
            line_points,
            t1,
            t2,
            r_u1,
            desarguesian,
            subgeometries: OnceLock::new(),
            line_set: OnceLock::new(),
            labels: OnceLock::new(),
            hall: OnceLock::new(),
            reguli_through_r_u1: OnceLock::new(),
            pair_lines: OnceLock::new(),
        })
    }

    pub fn field(&self) -> &Field {
        self.lambda.field()
    }

    pub fn lambda(&self) -> &LambdaSystem {
        &self.lambda
    }

    pub fn q(&self) -> usize {
        self.lambda.q()
    }

    pub fn eta(&self) -> &BaerSubgeometry {
        &self.eta
    }

    pub fn tau_eta(&self) -> &Collineation {
        &self.tau_eta
    }

    /// Points of Σ_η, sorted.
    pub fn sigma_points(&self) -> &[Point] {
        &self.points
    }

    pub fn point_id(&self, p: &Point) -> Option<u32> {
        self.point_ids.get(p).copied()
    }

    /// Lines of Σ_η (as τ_η-stable lines), sorted.
    pub fn sigma_lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn line_id(&self, l: &Line) -> Option<u32> {
        self.line_ids.get(l).copied()
    }

    /// Ids of the q+1 points of Σ_η on the line with the given id.
    pub fn line_point_ids(&self, id: u32) -> &[u32] {
        let k = self.q() + 1;
        &self.line_points[id as usize * k..(id as usize + 1) * k]
    }

    /// The id of the Σ_η line through two distinct Σ_η points.
    pub fn line_through_ids(&self, a: u32, b: u32) -> u32 {
        let n = self.points.len();
        let table = self.pair_lines.get_or_init(|| {
            let mut t = vec![u32::MAX; n * n];
            for id in 0..self.lines.len() as u32 {
                let pts = self.line_point_ids(id);
                for &x in pts {
                    for &y in pts {
                        t[x as usize * n + y as usize] = id;
                    }
                }
            }
            t
        });
        table[a as usize * n + b as usize]
    }

    /// Sorted line ids, or `None` if some line is not a line of Σ_η.
    pub fn spread_key(&self, lines: &[Line]) -> Option<Vec<u32>> {
        let mut key: Vec<u32> = lines.iter().map(|l| self.line_id(l)).collect::<Option<_>>()?;
        key.sort_unstable();
        Some(key)
    }

    pub fn t1(&self) -> &Line {
        &self.t1
    }

    pub fn t2(&self) -> &Line {
        &self.t2
    }

    pub fn r_u1(&self) -> &Line {
        &self.r_u1
    }

    /// Points of Σ_α for every index of Λ.
    pub fn subgeometry_points(&self, alpha_idx: usize) -> &[Point] {
        let all = self.subgeometries.get_or_init(|| {
            let f = self.field();
            self.lambda.elements().iter().map(|&a| BaerSubgeometry::new(a).unwrap().points(f)).collect()
        });
        &all[alpha_idx]
    }

    /// The Λ index whose subgeometry contains the point, if any.
    pub fn subgeometry_of(&self, p: &Point) -> Option<usize> {
        (0..self.lambda.len()).find(|&i| self.subgeometry_points(i).binary_search(p).is_ok())
    }

    fn unit(&self, pow: usize) -> Result<Fe, SpreadError> {
        if pow > self.q() {
            return Err(SpreadError::BadUnitExponent(pow));
        }
        Ok(self.field().exp(pow * (self.q() - 1)))
    }

    /// `P_{αu} = (1, 0, αu, 0)` with `u = ω^u_pow`.
    pub fn p_point(&self, alpha_idx: usize, u_pow: usize) -> Result<Point, SpreadError> {
        let f = self.field();
        let x = f.mul(self.lambda.alpha(alpha_idx), self.unit(u_pow)?);
        Ok(Point::new(f, [Fe::ONE, Fe::ZERO, x, Fe::ZERO])?)
    }

    /// `π_{αv}: X4 = αv X2` with `v = ω^v_pow`.
    pub fn pi_plane(&self, alpha_idx: usize, v_pow: usize) -> Result<Plane, SpreadError> {
        let f = self.field();
        let x = f.mul(self.lambda.alpha(alpha_idx), self.unit(v_pow)?);
        Ok(Plane::new(f, [Fe::ZERO, x, Fe::ZERO, f.minus_one()])?)
    }

    /// 𝒟_η as lines `⟨P, P^τ⟩`, P ∈ t₁.
    pub fn desarguesian(&self) -> &Spread {
        &self.desarguesian
    }

    /// 𝒟_α; the extended lines do not depend on α.
    pub fn desarguesian_spread(&self, alpha_idx: usize) -> Spread {
        let f = self.field();
        let alpha = self.lambda.alpha(alpha_idx);
        Spread::new(
            self.t1
                .points(f)
                .iter()
                .map(|p| Line::through(f, p, &crate::proj_geometry::tau(f, alpha, p).unwrap()).unwrap())
                .collect(),
            SpreadKind::Desarguesian,
        )
    }

    pub fn pencil(&self, label: Candidate) -> Result<Pencil, SpreadError> {
        if !self.lambda.in_i(label.alpha_idx) {
            return Err(SpreadError::NotInI(label.alpha_idx));
        }
        self.pencil_any(label)
    }

    /// As [`Geometry::pencil`] without the 𝓘 membership check.
    pub fn pencil_any(&self, label: Candidate) -> Result<Pencil, SpreadError> {
        let f = self.field();
        let point = self.p_point(label.alpha_idx, label.u_pow)?;
        let plane = self.pi_plane(label.alpha_idx, label.v_pow)?;
        let mut lines: Vec<Line> = self
            .subgeometry_points(label.alpha_idx)
            .iter()
            .filter(|x| **x != point && plane.contains_point(f, x))
            .map(|x| Line::through(f, &point, x).unwrap())
            .collect();
        lines.sort();
        lines.dedup();
        Ok(Pencil { label, point, plane, lines })
    }

    /// 𝓛 with labels, ordered by label then line.
    pub fn line_set(&self) -> &[LabeledLine] {
        self.line_set.get_or_init(|| {
            let q = self.q();
            let mut out = Vec::new();
            for &a in self.lambda.i_set() {
                for u in 0..=q {
                    for v in 0..=q {
                        let label = Candidate { alpha_idx: a, u_pow: u, v_pow: v };
                        let p = self.pencil(label).unwrap();
                        out.extend(
                            p.lines.iter().filter(|l| **l != self.r_u1).map(|&line| LabeledLine { line, label }),
                        );
                    }
                }
            }
            out
        })
    }

    pub fn label_of(&self, l: &Line) -> Option<Candidate> {
        self.labels.get_or_init(|| self.line_set().iter().map(|e| (e.line, e.label)).collect()).get(l).copied()
    }

    pub fn spread_from_transversal(&self, l: &Line) -> Result<Spread, SpreadError> {
        let f = self.field();
        let pts = l.points(f);
        if pts.iter().any(|p| self.point_ids.contains_key(p)) {
            return Err(SpreadError::MeetsSigma(*l));
        }
        // A τ_η-stable line, or one meeting its
        // conjugate, already meets Σ_η; the two checks below guard callers
        // with a different Λ model.
        let conj = tau_line(f, self.lambda.eta(), l)?;
        if conj == *l {
            return Err(SpreadError::SelfConjugate(*l));
        }
        if l.meets(f, &conj) {
            return Err(SpreadError::ConjugateNotSkew(*l));
        }
        let lines = pts.iter().map(|p| Line::through(f, p, &self.tau_eta.apply_point(f, p)).unwrap()).collect();
        Ok(Spread::new(lines, SpreadKind::Desarguesian))
    }

    /// Lines of Σ_η meeting every given line (all assumed lines of Σ_η).
    pub fn transversals(&self, lines: &[Line]) -> Vec<Line> {
        let f = self.field();
        let (Some(a), Some(b)) = (lines.first(), lines.get(1)) else {
            return Vec::new();
        };
        let (ia, ib) = (self.line_id(a), self.line_id(b));
        let (Some(ia), Some(ib)) = (ia, ib) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for &pa in self.line_point_ids(ia) {
            for &pb in self.line_point_ids(ib) {
                if pa == pb {
                    continue;
                }
                let t = Line::through(f, &self.points[pa as usize], &self.points[pb as usize]).unwrap();
                if lines[2..].iter().all(|r| t.meets(f, r)) {
                    out.push(t);
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn opposite_regulus(&self, r: &Regulus) -> Result<Regulus, SpreadError> {
        let t = self.transversals(&r.lines);
        if t.len() != self.q() + 1 {
            return Err(SpreadError::NotARegulus(t.len()));
        }
        Ok(Regulus { lines: t })
    }

    /// The regulus determined by three pairwise skew lines of Σ_η.
    pub fn regulus_through(&self, a: &Line, b: &Line, c: &Line) -> Result<Regulus, SpreadError> {
        let t = self.transversals(&[*a, *b, *c]);
        if t.len() != self.q() + 1 {
            return Err(SpreadError::NotARegulus(t.len()));
        }
        self.opposite_regulus(&Regulus { lines: t })
    }

    /// Wraps sorted lines as a regulus after checking it has a full opposite.
    pub fn regulus_from_lines(&self, mut lines: Vec<Line>) -> Result<Regulus, SpreadError> {
        lines.sort();
        let r = Regulus { lines };
        if r.lines.len() != self.q() + 1 {
            return Err(SpreadError::NotARegulus(r.lines.len()));
        }
        self.opposite_regulus(&r)?;
        Ok(r)
    }

    /// `R_ℓ = 𝒟_η ∩ S_ℓ` for ℓ ∈ 𝓛.
    pub fn regulus_of(&self, l: &Line) -> Result<Regulus, SpreadError> {
        if self.label_of(l).is_none() {
            return Err(SpreadError::NotInLineSet(*l));
        }
        let s = self.spread_from_transversal(l)?;
        let lines: Vec<Line> = s.lines.iter().filter(|x| self.desarguesian.contains(x)).copied().collect();
        Ok(Regulus { lines })
    }

    /// `(S_ℓ \ R_ℓ) ∪ R_ℓ^o` for ℓ ∈ 𝓛.
    pub fn hall_spread(&self, l: &Line) -> Result<Spread, SpreadError> {
        let r = self.regulus_of(l)?;
        let opp = self.opposite_regulus(&r)?;
        let s = self.spread_from_transversal(l)?;
        let mut lines: Vec<Line> = s.lines.iter().filter(|x| !r.contains(x)).copied().collect();
        lines.extend_from_slice(&opp.lines);
        let mut spread = Spread::new(lines, SpreadKind::Hall);
        spread.provenance = Some(HallProvenance { transversal: *l, switched: r });
        Ok(spread)
    }

    /// Hall spreads of every line of 𝓛, built once.
    pub fn hall_catalog(&self) -> &HallCatalog {
        self.hall.get_or_init(|| {
            use rayon::prelude::*;
            let entries: Vec<HallEntry> = self
                .line_set()
                .par_iter()
                .map(|e| {
                    let h = self.hall_spread(&e.line).unwrap();
                    let key = self.spread_key(h.lines()).unwrap();
                    let regulus_key = self.spread_key(&h.provenance.unwrap().switched.lines).unwrap();
                    HallEntry { line: e.line, label: e.label, key, regulus_key }
                })
                .collect();
            let mut by_key: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
            let mut by_label: HashMap<Candidate, Vec<usize>> = HashMap::new();
            for (i, e) in entries.iter().enumerate() {
                by_key.entry(e.key.clone()).or_default().push(i);
                by_label.entry(e.label).or_default().push(i);
            }
            HallCatalog { entries, by_key, by_label }
        })
    }

    pub fn check_spread(&self, lines: &[Line]) -> SpreadReport {
        let expected = self.q() * self.q() + 1;
        let mut owner: Vec<Option<usize>> = vec![None; self.points.len()];
        let mut count = vec![0u32; self.points.len()];
        let mut report = SpreadReport {
            line_count: lines.len(),
            expected_lines: expected,
            foreign_lines: Vec::new(),
            overlap: None,
            gap: None,
            overlapped_points: 0,
            uncovered_points: 0,
        };
        for (k, l) in lines.iter().enumerate() {
            let Some(id) = self.line_id(l) else {
                report.foreign_lines.push(*l);
                continue;
            };
            for &p in self.line_point_ids(id) {
                count[p as usize] += 1;
                match owner[p as usize] {
                    None => owner[p as usize] = Some(k),
                    Some(first) if report.overlap.is_none() => {
                        report.overlap = Some((self.points[p as usize], lines[first], *l));
                    }
                    Some(_) => {}
                }
            }
        }
        report.overlapped_points = count.iter().filter(|&&c| c > 1).count();
        report.uncovered_points = count.iter().filter(|&&c| c == 0).count();
        report.gap = count.iter().position(|&c| c == 0).map(|i| self.points[i]);
        report
    }

    /// The union of the extended lines, sorted.
    pub fn extended_points(&self, lines: &[Line]) -> Vec<Point> {
        let f = self.field();
        let mut pts: Vec<Point> = lines.iter().flat_map(|l| l.points(f)).collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// `π ∩ S̄` and its decomposition.
    pub fn plane_section(&self, plane: &Plane, lines: &[Line]) -> PlaneSection {
        let f = self.field();
        let ext = self.extended_points(lines);
        let points: Vec<Point> = ext.into_iter().filter(|p| plane.contains_point(f, p)).collect();
        let contained: Vec<Line> = lines.iter().filter(|l| plane.contains_line(f, l)).copied().collect();
        let residue: Vec<Point> =
            points.iter().filter(|p| !contained.iter().any(|l| l.contains(f, p))).copied().collect();
        let shape = classify_residue(f, &residue);
        PlaneSection { plane: *plane, points, contained, residue, shape }
    }

    /// The q²+q reguli of 𝒟_η containing r_{U₁}, by brute force over pairs
    /// of further spread lines.
    pub fn reguli_through_r_u1(&self) -> &[Regulus] {
        self.reguli_through_r_u1.get_or_init(|| {
            let others: Vec<Line> = self.desarguesian.lines.iter().filter(|l| **l != self.r_u1).copied().collect();
            let mut found: BTreeMap<Vec<Line>, Regulus> = BTreeMap::new();
            for i in 0..others.len() {
                for j in i + 1..others.len() {
                    let r = self.regulus_through(&self.r_u1, &others[i], &others[j]).unwrap();
                    found.entry(r.lines.clone()).or_insert(r);
                }
            }
            found.into_values().collect()
        })
    }
}

/// Recognizes a q² point residue as a punctured line or as part of a Baer
/// subplane.
fn classify_residue(f: &Field, residue: &[Point]) -> ResidueShape {
    let q = f.q();
    if residue.len() < 2 {
        return ResidueShape::Other;
    }
    let l = Line::through(f, &residue[0], &residue[1]).unwrap();
    if residue.iter().all(|p| l.contains(f, p)) {
        return ResidueShape::Line(l);
    }
    if let Some(sub) = baer_subplane_containing(f, residue) {
        if sub.len() == q * q + q + 1 {
            return ResidueShape::BaerSubplane(sub);
        }
    }
    ResidueShape::Other
}

/// The Baer subplane through a frame of the given points, if all points
/// lie in it.
pub fn baer_subplane_containing(f: &Field, pts: &[Point]) -> Option<Vec<Point>> {
    let frame = find_frame(f, pts)?;
    let sub = baer_subplane(f, &frame)?;
    pts.iter().all(|p| sub.binary_search(p).is_ok()).then_some(sub)
}

fn find_frame(f: &Field, pts: &[Point]) -> Option<[Point; 4]> {
    let n = pts.len();
    for a in 0..n {
        for b in a + 1..n {
            let lab = Line::through(f, &pts[a], &pts[b]).ok()?;
            for c in b + 1..n {
                if lab.contains(f, &pts[c]) {
                    continue;
                }
                for d in c + 1..n {
                    let cols = [pts[a], pts[b], pts[c]];
                    let pd = pts[d];
                    let collinear_with = |x: &Point, y: &Point| Line::through(f, x, y).unwrap().contains(f, &pd);
                    if !collinear_with(&cols[0], &cols[1])
                        && !collinear_with(&cols[0], &cols[2])
                        && !collinear_with(&cols[1], &cols[2])
                    {
                        return Some([pts[a], pts[b], pts[c], pd]);
                    }
                }
            }
        }
    }
    None
}

/// The q²+q+1 points of the Baer subplane through a frame `a, b, c, d`.
pub fn baer_subplane(f: &Field, frame: &[Point; 4]) -> Option<Vec<Point>> {
    let [a, b, c, d] = frame.map(|p| p.coords());
    // Solve d = x a + y b + z c.
    let m: Mat4 = std::array::from_fn(|i| [a[i], b[i], c[i], d[i]]);
    let mut rows: Vec<[Fe; 4]> = m.to_vec();
    crate::proj_geometry::rref(f, &mut rows);
    if rows.len() != 3 {
        return None;
    }
    let coeffs = [rows[0][3], rows[1][3], rows[2][3]];
    if coeffs.iter().any(|x| x.is_zero()) {
        return None;
    }
    let basis = [a, b, c];
    let scaled: [[Fe; 4]; 3] = std::array::from_fn(|k| basis[k].map(|x| f.mul(x, coeffs[k])));
    let sub: Vec<Fe> = f.subfield().collect();
    let mut out = Vec::new();
    for &x in &sub {
        for &y in &sub {
            for &z in &sub {
                let v: [Fe; 4] = std::array::from_fn(|i| {
                    f.add(f.add(f.mul(x, scaled[0][i]), f.mul(y, scaled[1][i])), f.mul(z, scaled[2][i]))
                });
                if let Ok(p) = Point::new(f, v) {
                    out.push(p);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Some(out)
}

/// The projectivity φ swapping t₁ with `l_0` (fixes Σ_η and r_{U₁}).
pub fn switch_map(geo: &Geometry, alpha_idx: usize) -> Collineation {
    let f = geo.field();
    let a = geo.lambda().alpha(alpha_idx);
    let aq = f.frob(a);
    let (z, o) = (Fe::ZERO, Fe::ONE);
    Collineation::linear(f, [[o, z, aq, z], [z, o, z, aq], [a, z, o, z], [z, a, z, o]]).unwrap()
}

/// The projectivity ξ_λ mapping `l_0` to `l_λ`.
pub fn shear_map(f: &Field, lambda: Fe, x_tilde: Fe) -> Collineation {
    let (z, o) = (Fe::ZERO, Fe::ONE);
    let s = f.mul(lambda, x_tilde);
    let t = f.mul(lambda, f.frob(x_tilde));
    Collineation::linear(f, [[o, s, z, z], [z, o, z, z], [z, z, o, t], [z, z, z, o]]).unwrap()
}

/// `l_λ = ⟨(1,0,α,0), (λx̃, 1, αλx̃^q, α)⟩`.
pub fn special_line(geo: &Geometry, alpha_idx: usize, lambda: Fe, x_tilde: Fe) -> Line {
    let f = geo.field();
    let a = geo.lambda().alpha(alpha_idx);
    let s = f.mul(lambda, x_tilde);
    let p0 = Point::new(f, [Fe::ONE, Fe::ZERO, a, Fe::ZERO]).unwrap();
    let p1 = Point::new(f, [s, Fe::ONE, f.mul(a, f.frob(s)), a]).unwrap();
    Line::through(f, &p0, &p1).unwrap()
}

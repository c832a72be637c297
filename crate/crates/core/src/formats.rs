//! JSON and JSON-lines formats: field descriptions, good-set streams and
//! parallelism files (header, one record per spread, certificate).
//! Readers report the 1-based line of the first bad record.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field_tower::{Fe, Field, FieldError, LambdaSystem};
use crate::goodsets::{Candidate, GoodSet};
use crate::parallelisms::{Certificate, Parallelism};
use crate::proj_geometry::{Line, Point};
use crate::spreads::{Geometry, Spread, SpreadKind};

pub const PARALLELISM_FORMAT: &str = "spreadsmith-parallelism";
pub const PARALLELISM_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("{0}")]
    Structure(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn at(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Record { line, message: message.into() }
}

/// A field model: GF(q) = GF(p)[x]/(modulus_q), GF(q²) = GF(q)[y]/(modulus_q2).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRecord {
    pub p: u32,
    pub m: u32,
    pub q: u32,
    /// Constant term first.
    pub modulus_q: Vec<u32>,
    /// Constant term first, each coefficient as m GF(p) digits.
    pub modulus_q2: [Vec<u32>; 3],
    /// Generator of GF(q²)* as a coordinate (see [`encode`]).
    pub generator: Vec<u32>,
}

impl FieldRecord {
    pub fn of(f: &Field) -> FieldRecord {
        let s = f.spec();
        FieldRecord {
            p: s.p,
            m: s.m,
            q: s.q(),
            modulus_q: s.modulus_q.clone(),
            modulus_q2: s.modulus_q2.map(|c| f.code_digits(c)),
            generator: encode(f, s.generator),
        }
    }

    /// Rebuilds the field, checking that the recorded generator is the one
    /// the model selects.
    pub fn build(&self) -> Result<Arc<Field>, FormatError> {
        let mut codes = [0u32; 3];
        for (code, digits) in codes.iter_mut().zip(&self.modulus_q2) {
            if digits.len() != self.m as usize || digits.iter().any(|&d| d >= self.p) {
                return Err(FormatError::Structure("modulus_q2 coefficients must be m GF(p) digits".into()));
            }
            *code = digits.iter().rev().fold(0, |acc, &d| acc * self.p + d);
        }
        let f = Field::with_moduli(self.p, self.m, Some(self.modulus_q.clone()), Some(codes))?;
        if f.q() as u32 != self.q {
            return Err(FormatError::Structure(format!("q = {} does not match p^m = {}", self.q, f.q())));
        }
        if decode(&f, &self.generator) != Some(f.generator()) {
            return Err(FormatError::Structure("recorded generator differs from the field's generator".into()));
        }
        Ok(f)
    }
}

/// A GF(q²) element as 2m GF(p) digits: those of c0, then of c1, where
/// `x = c0 + c1·y`.
pub fn encode(f: &Field, x: Fe) -> Vec<u32> {
    let [c0, c1] = f.to_digits(x);
    c0.into_iter().chain(c1).collect()
}

pub fn decode(f: &Field, digits: &[u32]) -> Option<Fe> {
    let m = f.m();
    if digits.len() != 2 * m {
        return None;
    }
    f.from_digits(&[digits[..m].to_vec(), digits[m..].to_vec()])
}

pub fn encode_point(f: &Field, p: &Point) -> [Vec<u32>; 4] {
    p.coords().map(|x| encode(f, x))
}

pub fn decode_point(f: &Field, coords: &[Vec<u32>; 4]) -> Option<Point> {
    let mut v = [Fe::ZERO; 4];
    for (slot, c) in v.iter_mut().zip(coords) {
        *slot = decode(f, c)?;
    }
    Point::new(f, v).ok()
}

/// A line as the two canonical points spanning it.
pub fn encode_line(f: &Field, l: &Line) -> [[Vec<u32>; 4]; 2] {
    let (a, b) = l.point_pair();
    [encode_point(f, &a), encode_point(f, &b)]
}

pub fn decode_line(f: &Field, pts: &[[Vec<u32>; 4]; 2]) -> Option<Line> {
    let a = decode_point(f, &pts[0])?;
    let b = decode_point(f, &pts[1])?;
    Line::through(f, &a, &b).ok()
}

/// One good set per JSON line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodSetRecord {
    pub q: usize,
    /// Λ as exponents of the field generator.
    pub lambda_idx: Vec<usize>,
    pub entries: Vec<Candidate>,
}

impl GoodSetRecord {
    pub fn of(lambda: &LambdaSystem, gs: &GoodSet) -> GoodSetRecord {
        GoodSetRecord { q: lambda.q(), lambda_idx: lambda.exponents(), entries: gs.entries().to_vec() }
    }
}

/// Parses JSON lines, skipping blank lines; returns records with their
/// 1-based line numbers.
pub fn read_json_lines<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<(usize, T)>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map(|r| (i + 1, r)).map_err(|e| at(i + 1, e.to_string())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub field: FieldRecord,
    pub lambda: Vec<usize>,
    /// The good set the parallelism was built from, if any.
    pub source: Option<Vec<Candidate>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpreadTag {
    Desarguesian,
    Hall,
    Unknown,
}

impl From<SpreadKind> for SpreadTag {
    fn from(k: SpreadKind) -> SpreadTag {
        match k {
            SpreadKind::Desarguesian => SpreadTag::Desarguesian,
            SpreadKind::Hall => SpreadTag::Hall,
            SpreadKind::Unknown => SpreadTag::Unknown,
        }
    }
}

impl From<SpreadTag> for SpreadKind {
    fn from(t: SpreadTag) -> SpreadKind {
        match t {
            SpreadTag::Desarguesian => SpreadKind::Desarguesian,
            SpreadTag::Hall => SpreadKind::Hall,
            SpreadTag::Unknown => SpreadKind::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpreadRecord {
    pub index: usize,
    pub kind: SpreadTag,
    pub lines: Vec<[[Vec<u32>; 4]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub pass: bool,
    pub spread_count: usize,
    pub expected_spreads: usize,
    pub line_total: usize,
    pub expected_lines: usize,
    pub bad_spreads: Vec<usize>,
    pub multiply_covered: usize,
    pub uncovered: usize,
    pub foreign: usize,
    pub checksum: String,
}

impl CertificateRecord {
    pub fn of(c: &Certificate) -> CertificateRecord {
        CertificateRecord {
            pass: c.pass(),
            spread_count: c.spread_count,
            expected_spreads: c.expected_spreads,
            line_total: c.line_total,
            expected_lines: c.expected_lines,
            bad_spreads: c.bad_spreads.iter().map(|b| b.index).collect(),
            multiply_covered: c.multiply_covered.len(),
            uncovered: c.uncovered.len(),
            foreign: c.foreign.len(),
            checksum: c.checksum.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum Record {
    Header(Header),
    Spread(SpreadRecord),
    Certificate(CertificateRecord),
}

/// Serializes a parallelism as JSON lines: header, spreads in order, then
/// the certificate.
pub fn write_parallelism(geo: &Geometry, p: &Parallelism, cert: &Certificate) -> String {
    let f: &Field = geo.field();
    let mut out = Vec::new();
    out.push(Record::Header(Header {
        format: PARALLELISM_FORMAT.into(),
        version: PARALLELISM_VERSION,
        field: FieldRecord::of(f),
        lambda: geo.lambda().exponents(),
        source: p.source().map(|gs| gs.entries().to_vec()),
    }));
    for (index, s) in p.spreads().iter().enumerate() {
        out.push(Record::Spread(SpreadRecord {
            index,
            kind: s.kind().into(),
            lines: s.lines().iter().map(|l| encode_line(f, l)).collect(),
        }));
    }
    out.push(Record::Certificate(CertificateRecord::of(cert)));
    let mut text = String::new();
    for r in out {
        text.push_str(&serde_json::to_string(&r).expect("records serialize"));
        text.push('\n');
    }
    text
}

/// A parsed parallelism file.
#[derive(Debug, Clone)]
pub struct ParallelismFile {
    pub geometry: Arc<Geometry>,
    pub parallelism: Parallelism,
    pub certificate: Option<CertificateRecord>,
}

/// Reads a parallelism file, rebuilding the geometry from its header.
pub fn read_parallelism(text: &str) -> Result<ParallelismFile, FormatError> {
    let records: Vec<(usize, Record)> = read_json_lines(text)?;
    let mut it = records.into_iter();
    let Some((first, Record::Header(header))) = it.next() else {
        return Err(FormatError::Structure("the first record must be a header".into()));
    };
    if header.format != PARALLELISM_FORMAT || header.version != PARALLELISM_VERSION {
        return Err(at(first, format!("unsupported format {} version {}", header.format, header.version)));
    }
    let f = header.field.build().map_err(|e| at(first, e.to_string()))?;
    let lambda = LambdaSystem::from_exponents(f.clone(), &header.lambda).map_err(|e| at(first, e.to_string()))?;
    let geometry = Geometry::new(lambda);
    let source = header.source.as_ref().map(|entries| GoodSet::from_unchecked(entries.clone()));
    let mut spreads = Vec::new();
    let mut certificate = None;
    for (line, r) in it {
        match r {
            Record::Header(_) => return Err(at(line, "second header")),
            Record::Spread(s) => {
                if certificate.is_some() {
                    return Err(at(line, "spread after the certificate"));
                }
                if s.index != spreads.len() {
                    return Err(at(line, format!("spread index {} out of order", s.index)));
                }
                let lines = s
                    .lines
                    .iter()
                    .enumerate()
                    .map(|(k, l)| {
                        decode_line(&f, l).ok_or_else(|| at(line, format!("line {k} is not two distinct points")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                spreads.push(Spread::new(lines, s.kind.into()));
            }
            Record::Certificate(c) => {
                if certificate.replace(c).is_some() {
                    return Err(at(line, "second certificate"));
                }
            }
        }
    }
    Ok(ParallelismFile { geometry, parallelism: Parallelism::new(spreads, source), certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goodsets::beutelspacher;
    use crate::parallelisms::{build_parallelism, verify_parallelism};

    #[test]
    fn field_record_round_trip() {
        for q in [3, 4, 8, 9, 16] {
            let f = Field::new(q).unwrap();
            let r = FieldRecord::of(&f);
            let json = serde_json::to_string(&r).unwrap();
            let back: FieldRecord = serde_json::from_str(&json).unwrap();
            let g = back.build().unwrap();
            assert_eq!(g.spec(), f.spec());
            for x in f.elements() {
                assert_eq!(decode(&f, &encode(&f, x)), Some(x));
            }
        }
    }

    #[test]
    fn parallelism_round_trip() {
        let geo = Geometry::for_q(3).unwrap();
        let gs = beutelspacher(geo.lambda(), geo.lambda().i_set()[0], 1).unwrap();
        let p = build_parallelism(&geo, &gs).unwrap();
        let cert = verify_parallelism(&geo, &p);
        let text = write_parallelism(&geo, &p, &cert);
        assert_eq!(text.lines().count(), 15);
        let back = read_parallelism(&text).unwrap();
        assert_eq!(back.parallelism.key(&back.geometry), p.key(&geo));
        assert_eq!(back.parallelism.source(), Some(&gs));
        assert_eq!(back.certificate.unwrap().checksum, cert.checksum);
        assert_eq!(write_parallelism(&back.geometry, &back.parallelism, &cert), text);
    }

    #[test]
    fn bad_records_carry_line_numbers() {
        let geo = Geometry::for_q(3).unwrap();
        let gs = beutelspacher(geo.lambda(), geo.lambda().i_set()[0], 0).unwrap();
        let p = build_parallelism(&geo, &gs).unwrap();
        let text = write_parallelism(&geo, &p, &verify_parallelism(&geo, &p));
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[4] = "{\"record\":\"spread\",".into();
        match read_parallelism(&lines.join("\n")) {
            Err(FormatError::Record { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let recs: Result<Vec<(usize, GoodSetRecord)>, _> = read_json_lines("\n{\"q\":3}\n");
        assert!(matches!(recs, Err(FormatError::Record { line: 2, .. })));
    }
}

//! Points, lines and planes of PG(3,q²) (and points of PG(2,q²)) in
//! canonical form, semilinear collineations, the involutions τ_α and the
//! Baer subgeometries Σ_α, and Plücker coordinates.

use std::fmt;

use thiserror::Error;

use crate::field_tower::{Fe, Field};

pub type Vec4 = [Fe; 4];
pub type Mat4 = [[Fe; 4]; 4];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("the zero vector is not a projective point")]
    ZeroVector,
    #[error("generators are linearly dependent")]
    Dependent,
    #[error("τ_α needs α ≠ 0")]
    ZeroAlpha,
    #[error("Plücker tuple is zero or off the Klein quadric")]
    NotOnKleinQuadric,
    #[error("matrix is singular")]
    Singular,
}

fn normalize<const N: usize>(f: &Field, v: [Fe; N]) -> Option<[Fe; N]> {
    let lead = *v.iter().find(|x| !x.is_zero())?;
    let s = f.inv(lead).unwrap();
    Some(v.map(|x| f.mul(x, s)))
}

fn dot(f: &Field, a: &Vec4, b: &Vec4) -> Fe {
    a.iter().zip(b).fold(Fe::ZERO, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
}

fn axpy(f: &Field, s: Fe, x: &Vec4, y: &Vec4) -> Vec4 {
    std::array::from_fn(|i| f.add(f.mul(s, x[i]), y[i]))
}

/// Reduced row echelon form in place; returns the rank. Zero rows are
/// dropped.
pub fn rref(f: &Field, rows: &mut Vec<Vec4>) -> usize {
    let mut rank = 0;
    for col in 0..4 {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, piv);
        let s = f.inv(rows[rank][col]).unwrap();
        rows[rank] = rows[rank].map(|x| f.mul(x, s));
        let pivot_row = rows[rank];
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let c = f.neg(rows[r][col]);
                rows[r] = axpy(f, c, &pivot_row, &rows[r]);
            }
        }
        rank += 1;
    }
    rows.truncate(rank);
    rank
}

/// A basis of `{x : r·x = 0 for all rows r}`, each vector normalized.
pub fn null_space(f: &Field, rows: &[Vec4]) -> Vec<Vec4> {
    let mut r = rows.to_vec();
    rref(f, &mut r);
    let pivots: Vec<usize> = r.iter().map(|row| row.iter().position(|x| !x.is_zero()).unwrap()).collect();
    (0..4)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = [Fe::ZERO; 4];
            v[free] = Fe::ONE;
            for (row, &pc) in r.iter().zip(&pivots) {
                v[pc] = f.neg(row[free]);
            }
            normalize(f, v).unwrap()
        })
        .collect()
}

/// A point of PG(3,q²); first nonzero coordinate is 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Point(Vec4);

impl Point {
    pub fn new(f: &Field, v: Vec4) -> Result<Point, GeometryError> {
        normalize(f, v).map(Point).ok_or(GeometryError::ZeroVector)
    }

    pub fn coords(&self) -> Vec4 {
        self.0
    }

    /// The fundamental point U_{i+1}.
    pub fn unit(i: usize) -> Point {
        let mut v = [Fe::ZERO; 4];
        v[i] = Fe::ONE;
        Point(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a},{b},{c},{d})")
    }
}

/// A point of PG(2,q²); first nonzero coordinate is 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Point2([Fe; 3]);

impl Point2 {
    pub fn new(f: &Field, v: [Fe; 3]) -> Result<Point2, GeometryError> {
        normalize(f, v).map(Point2).ok_or(GeometryError::ZeroVector)
    }

    pub fn coords(&self) -> [Fe; 3] {
        self.0
    }
}

/// A line of PG(3,q²) as the reduced row echelon form of a 2×4 generator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Line([Vec4; 2]);

impl Line {
    pub fn from_rows(f: &Field, a: Vec4, b: Vec4) -> Result<Line, GeometryError> {
        let mut rows = vec![a, b];
        if rref(f, &mut rows) != 2 {
            return Err(GeometryError::Dependent);
        }
        Ok(Line([rows[0], rows[1]]))
    }

    pub fn through(f: &Field, a: &Point, b: &Point) -> Result<Line, GeometryError> {
        Line::from_rows(f, a.0, b.0)
    }

    pub fn rows(&self) -> [Vec4; 2] {
        self.0
    }

    fn pivots(&self) -> (usize, usize) {
        let p = |r: &Vec4| r.iter().position(|x| !x.is_zero()).unwrap();
        (p(&self.0[0]), p(&self.0[1]))
    }

    pub fn contains(&self, f: &Field, p: &Point) -> bool {
        let (c0, c1) = self.pivots();
        let x = p.0;
        let span = axpy(f, x[c0], &self.0[0], &self.0[1].map(|y| f.mul(y, x[c1])));
        span == x
    }

    /// The q²+1 points, sorted.
    pub fn points(&self, f: &Field) -> Vec<Point> {
        let [a, b] = self.0;
        let mut pts: Vec<Point> =
            f.elements().map(|t| Point::new(f, axpy(f, t, &b, &a)).unwrap()).chain(std::iter::once(Point(b))).collect();
        pts.sort();
        pts
    }

    /// Two canonical points spanning the line: the rows of the echelon form.
    pub fn point_pair(&self) -> (Point, Point) {
        (Point(self.0[0]), Point(self.0[1]))
    }

    /// Plücker coordinates (p12, p13, p14, p23, p24, p34), normalized.
    pub fn plucker(&self, f: &Field) -> [Fe; 6] {
        let [a, b] = self.0;
        let m = |i: usize, j: usize| f.sub(f.mul(a[i], b[j]), f.mul(a[j], b[i]));
        normalize(f, [m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3)]).unwrap()
    }

    pub fn from_plucker(f: &Field, p: [Fe; 6]) -> Result<Line, GeometryError> {
        if p.iter().all(|x| x.is_zero()) || !klein_quadric(f, &p).is_zero() {
            return Err(GeometryError::NotOnKleinQuadric);
        }
        // Row i of the skew matrix (p_ik) lies on the line; two of them span it.
        let [p12, p13, p14, p23, p24, p34] = p;
        let n = |x: Fe| f.neg(x);
        let z = Fe::ZERO;
        let rows = [[z, p12, p13, p14], [n(p12), z, p23, p24], [n(p13), n(p23), z, p34], [n(p14), n(p24), n(p34), z]];
        let mut r = rows.to_vec();
        if rref(f, &mut r) != 2 {
            return Err(GeometryError::NotOnKleinQuadric);
        }
        Ok(Line([r[0], r[1]]))
    }

    /// Whether the two lines share a point (a line meets itself).
    pub fn meets(&self, f: &Field, other: &Line) -> bool {
        let mut r = vec![self.0[0], self.0[1], other.0[0], other.0[1]];
        rref(f, &mut r) < 4
    }

    /// The common point of two distinct meeting lines.
    pub fn intersection(&self, f: &Field, other: &Line) -> Option<Point> {
        if self == other {
            return None;
        }
        let [a, b] = self.0;
        other.dual_planes(f).iter().find_map(|pi| {
            let (pa, pb) = (dot(f, &pi.0, &a), dot(f, &pi.0, &b));
            if pa.is_zero() && pb.is_zero() {
                return None;
            }
            let x = axpy(f, pb, &a, &b.map(|y| f.mul(y, f.neg(pa))));
            let pt = Point::new(f, x).ok()?;
            other.contains(f, &pt).then_some(pt)
        })
    }

    /// Two planes whose intersection is this line.
    pub fn dual_planes(&self, f: &Field) -> [Plane; 2] {
        let ns = null_space(f, &self.0);
        [Plane(ns[0]), Plane(ns[1])]
    }
}

/// `X1X6 − X2X5 + X3X4`, the Klein quadric on Plücker tuples.
pub fn klein_quadric(f: &Field, p: &[Fe; 6]) -> Fe {
    f.add(f.sub(f.mul(p[0], p[5]), f.mul(p[1], p[4])), f.mul(p[2], p[3]))
}

/// The polar form of the Klein quadric; it vanishes exactly when the two
/// lines meet.
pub fn klein_form(f: &Field, p: &[Fe; 6], r: &[Fe; 6]) -> Fe {
    let t = |i: usize, j: usize| f.mul(p[i], r[j]);
    let s = [t(0, 5), t(2, 3), t(3, 2), t(5, 0)].iter().fold(Fe::ZERO, |acc, &x| f.add(acc, x));
    [t(1, 4), t(4, 1)].iter().fold(s, |acc, &x| f.sub(acc, x))
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", Point(self.0[0]), Point(self.0[1]))
    }
}

/// A plane of PG(3,q²) as a normalized dual vector.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Plane(Vec4);

/// How a line sits relative to a plane.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LineMeet {
    Point(Point),
    Contained,
}

impl Plane {
    pub fn new(f: &Field, v: Vec4) -> Result<Plane, GeometryError> {
        normalize(f, v).map(Plane).ok_or(GeometryError::ZeroVector)
    }

    pub fn coords(&self) -> Vec4 {
        self.0
    }

    pub fn through_points(f: &Field, a: &Point, b: &Point, c: &Point) -> Result<Plane, GeometryError> {
        match null_space(f, &[a.0, b.0, c.0]).as_slice() {
            [v] => Ok(Plane(*v)),
            _ => Err(GeometryError::Dependent),
        }
    }

    pub fn through_line_point(f: &Field, l: &Line, p: &Point) -> Result<Plane, GeometryError> {
        Plane::through_points(f, &Point(l.0[0]), &Point(l.0[1]), p)
    }

    pub fn contains_point(&self, f: &Field, p: &Point) -> bool {
        dot(f, &self.0, &p.0).is_zero()
    }

    pub fn contains_line(&self, f: &Field, l: &Line) -> bool {
        l.0.iter().all(|r| dot(f, &self.0, r).is_zero())
    }

    pub fn meet_line(&self, f: &Field, l: &Line) -> LineMeet {
        let [a, b] = l.0;
        let (pa, pb) = (dot(f, &self.0, &a), dot(f, &self.0, &b));
        if pa.is_zero() && pb.is_zero() {
            return LineMeet::Contained;
        }
        let x = axpy(f, pb, &a, &b.map(|y| f.mul(y, f.neg(pa))));
        LineMeet::Point(Point::new(f, x).unwrap())
    }

    pub fn meet_plane(&self, f: &Field, other: &Plane) -> Option<Line> {
        match null_space(f, &[self.0, other.0]).as_slice() {
            [a, b] => Line::from_rows(f, *a, *b).ok(),
            _ => None,
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "[{a},{b},{c},{d}]")
    }
}

fn mat_mul(f: &Field, a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..4).fold(Fe::ZERO, |acc, k| f.add(acc, f.mul(a[i][k], b[k][j]))))
    })
}

fn mat_vec(f: &Field, a: &Mat4, x: &Vec4) -> Vec4 {
    std::array::from_fn(|i| dot(f, &a[i], x))
}

fn mat_inverse(f: &Field, a: &Mat4) -> Option<Mat4> {
    // Gauss-Jordan on [A | I].
    let mut m: Vec<[Fe; 8]> = (0..4)
        .map(|i| {
            let mut row = [Fe::ZERO; 8];
            row[..4].copy_from_slice(&a[i]);
            row[4 + i] = Fe::ONE;
            row
        })
        .collect();
    for col in 0..4 {
        let piv = (col..4).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let s = f.inv(m[col][col]).unwrap();
        m[col] = m[col].map(|x| f.mul(x, s));
        let pr = m[col];
        for r in 0..4 {
            if r != col && !m[r][col].is_zero() {
                let c = f.neg(m[r][col]);
                m[r] = std::array::from_fn(|j| f.add(m[r][j], f.mul(c, pr[j])));
            }
        }
    }
    Some(std::array::from_fn(|i| std::array::from_fn(|j| m[i][4 + j])))
}

/// `X ↦ A·X^σ` with `σ: x ↦ x^(p^twist)`, taken up to scalars. The matrix is
/// normalized so its first nonzero entry (row-major) is 1, so equal maps
/// have equal representations.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Collineation {
    matrix: Mat4,
    twist: u8,
}

impl Collineation {
    pub fn new(f: &Field, matrix: Mat4, twist: usize) -> Result<Collineation, GeometryError> {
        mat_inverse(f, &matrix).ok_or(GeometryError::Singular)?;
        let flat: [Fe; 16] = std::array::from_fn(|k| matrix[k / 4][k % 4]);
        let n = normalize(f, flat).unwrap();
        Ok(Collineation {
            matrix: std::array::from_fn(|i| std::array::from_fn(|j| n[4 * i + j])),
            twist: (twist % (2 * f.m())) as u8,
        })
    }

    pub fn linear(f: &Field, matrix: Mat4) -> Result<Collineation, GeometryError> {
        Collineation::new(f, matrix, 0)
    }

    pub fn identity(f: &Field) -> Collineation {
        Collineation::new(f, diag([Fe::ONE; 4]), 0).unwrap()
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub fn twist(&self) -> usize {
        self.twist as usize
    }

    fn sigma(&self, f: &Field, x: Fe) -> Fe {
        f.frob_pow(x, self.twist as usize)
    }

    pub fn apply_vec(&self, f: &Field, x: &Vec4) -> Vec4 {
        mat_vec(f, &self.matrix, &x.map(|c| self.sigma(f, c)))
    }

    pub fn apply_point(&self, f: &Field, p: &Point) -> Point {
        Point::new(f, self.apply_vec(f, &p.0)).unwrap()
    }

    pub fn apply_line(&self, f: &Field, l: &Line) -> Line {
        Line::from_rows(f, self.apply_vec(f, &l.0[0]), self.apply_vec(f, &l.0[1])).unwrap()
    }

    pub fn apply_plane(&self, f: &Field, pi: &Plane) -> Plane {
        let inv = mat_inverse(f, &self.matrix).unwrap();
        let s = pi.0.map(|c| self.sigma(f, c));
        let v: Vec4 = std::array::from_fn(|j| (0..4).fold(Fe::ZERO, |acc, k| f.add(acc, f.mul(s[k], inv[k][j]))));
        Plane::new(f, v).unwrap()
    }

    /// `self` followed by `next`.
    pub fn then(&self, f: &Field, next: &Collineation) -> Collineation {
        let twisted = self.matrix.map(|row| row.map(|c| next.sigma(f, c)));
        Collineation::new(f, mat_mul(f, &next.matrix, &twisted), self.twist as usize + next.twist as usize).unwrap()
    }

    pub fn inverse(&self, f: &Field) -> Collineation {
        let k = 2 * f.m();
        let back = (k - self.twist as usize) % k;
        let inv = mat_inverse(f, &self.matrix).unwrap();
        Collineation::new(f, inv.map(|row| row.map(|c| f.frob_pow(c, back))), back).unwrap()
    }
}

pub fn diag(d: [Fe; 4]) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { d[i] } else { Fe::ZERO }))
}

/// Objects a collineation acts on.
pub trait Transform: Sized {
    fn transform(&self, f: &Field, c: &Collineation) -> Self;
}

impl Transform for Point {
    fn transform(&self, f: &Field, c: &Collineation) -> Self {
        c.apply_point(f, self)
    }
}

impl Transform for Line {
    fn transform(&self, f: &Field, c: &Collineation) -> Self {
        c.apply_line(f, self)
    }
}

impl Transform for Plane {
    fn transform(&self, f: &Field, c: &Collineation) -> Self {
        c.apply_plane(f, self)
    }
}

pub fn apply_collineation<T: Transform>(f: &Field, c: &Collineation, obj: &T) -> T {
    obj.transform(f, c)
}

/// τ_α as a collineation: `(x1,x2,x3,x4) ↦ (x3^q, x4^q, N x1^q, N x2^q)`.
pub fn tau_collineation(f: &Field, alpha: Fe) -> Result<Collineation, GeometryError> {
    if alpha.is_zero() {
        return Err(GeometryError::ZeroAlpha);
    }
    let n = f.norm(alpha);
    let (z, o) = (Fe::ZERO, Fe::ONE);
    Collineation::new(f, [[z, z, o, z], [z, z, z, o], [n, z, z, z], [z, n, z, z]], f.m())
}

pub fn tau(f: &Field, alpha: Fe, p: &Point) -> Result<Point, GeometryError> {
    if alpha.is_zero() {
        return Err(GeometryError::ZeroAlpha);
    }
    let n = f.norm(alpha);
    let [x1, x2, x3, x4] = p.0.map(|c| f.frob(c));
    Point::new(f, [x3, x4, f.mul(n, x1), f.mul(n, x2)])
}

pub fn tau_line(f: &Field, alpha: Fe, l: &Line) -> Result<Line, GeometryError> {
    let (a, b) = l.point_pair();
    Ok(Line::through(f, &tau(f, alpha, &a)?, &tau(f, alpha, &b)?).unwrap())
}

/// The Baer subgeometry Σ_α: points `(x, y, αx^q, αy^q)`, the fixed points of
/// τ_α. It depends on α only through its norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaerSubgeometry {
    alpha: Fe,
}

impl BaerSubgeometry {
    pub fn new(alpha: Fe) -> Result<BaerSubgeometry, GeometryError> {
        if alpha.is_zero() {
            return Err(GeometryError::ZeroAlpha);
        }
        Ok(BaerSubgeometry { alpha })
    }

    pub fn alpha(&self) -> Fe {
        self.alpha
    }

    pub fn contains(&self, f: &Field, p: &Point) -> bool {
        tau(f, self.alpha, p).unwrap() == *p
    }

    /// All (q+1)(q²+1) points, sorted.
    pub fn points(&self, f: &Field) -> Vec<Point> {
        let mut pts: Vec<Point> = f
            .elements()
            .flat_map(|x| f.elements().map(move |y| (x, y)))
            .filter(|&(x, y)| !(x.is_zero() && y.is_zero()))
            .map(|(x, y)| {
                let v = [x, y, f.mul(self.alpha, f.frob(x)), f.mul(self.alpha, f.frob(y))];
                Point::new(f, v).unwrap()
            })
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// The τ_α-stability test for a line to meet Σ_α in a Baer subline.
    pub fn is_baer_subline(&self, f: &Field, l: &Line) -> bool {
        tau_line(f, self.alpha, l).unwrap() == *l
    }

    pub fn points_on_line(&self, f: &Field, l: &Line) -> Vec<Point> {
        l.points(f).into_iter().filter(|p| self.contains(f, p)).collect()
    }

    pub fn tau(&self, f: &Field) -> Collineation {
        tau_collineation(f, self.alpha).unwrap()
    }
}

/// All points of PG(3,q²), sorted.
pub fn all_points(f: &Field) -> Vec<Point> {
    let n = f.order();
    let mut out = Vec::new();
    for lead in 0..4 {
        let free = 3 - lead;
        for code in 0..n.pow(free as u32) {
            let mut v = [Fe::ZERO; 4];
            v[lead] = Fe::ONE;
            let mut c = code;
            for slot in v.iter_mut().skip(lead + 1) {
                *slot = Fe((c % n) as u8);
                c /= n;
            }
            out.push(Point(v));
        }
    }
    out.sort();
    out
}

/// All planes of PG(3,q²), sorted.
pub fn all_planes(f: &Field) -> Vec<Plane> {
    all_points(f).into_iter().map(|p| Plane(p.0)).collect()
}

/// All lines of PG(3,q²) in echelon form, sorted.
pub fn all_lines(f: &Field) -> Vec<Line> {
    let n = f.order();
    let mut out = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let free0: Vec<usize> = (i + 1..4).filter(|&k| k != j).collect();
            let free1: Vec<usize> = (j + 1..4).collect();
            let total = free0.len() + free1.len();
            for code in 0..n.pow(total as u32) {
                let mut a = [Fe::ZERO; 4];
                let mut b = [Fe::ZERO; 4];
                a[i] = Fe::ONE;
                b[j] = Fe::ONE;
                let mut c = code;
                for &k in &free0 {
                    a[k] = Fe((c % n) as u8);
                    c /= n;
                }
                for &k in &free1 {
                    b[k] = Fe((c % n) as u8);
                    c /= n;
                }
                out.push(Line([a, b]));
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn rand_fe(f: &Field, rng: &mut impl Rng) -> Fe {
        Fe(rng.gen_range(0..f.order()) as u8)
    }

    fn rand_point(f: &Field, rng: &mut impl Rng) -> Point {
        loop {
            if let Ok(p) = Point::new(f, std::array::from_fn(|_| rand_fe(f, rng))) {
                return p;
            }
        }
    }

    fn rand_line(f: &Field, rng: &mut impl Rng) -> Line {
        loop {
            if let Ok(l) = Line::through(f, &rand_point(f, rng), &rand_point(f, rng)) {
                return l;
            }
        }
    }

    fn rand_collineation(f: &Field, rng: &mut impl Rng) -> Collineation {
        loop {
            let m: Mat4 = std::array::from_fn(|_| std::array::from_fn(|_| rand_fe(f, rng)));
            if let Ok(c) = Collineation::new(f, m, rng.gen_range(0..2 * f.m())) {
                return c;
            }
        }
    }

    #[test]
    fn counts_of_pg3() {
        let f = Field::new(3).unwrap();
        let pts = all_points(&f);
        let lines = all_lines(&f);
        // Q = 9: Q^3+Q^2+Q+1 points, (Q^2+1)(Q^2+Q+1) lines.
        assert_eq!(pts.len(), 820);
        assert_eq!(lines.len(), 7462);
        assert_eq!(lines.iter().collect::<HashSet<_>>().len(), 7462);
        for l in lines.iter().step_by(97) {
            assert_eq!(l.points(&f).len(), 10);
            let (a, b) = l.point_pair();
            assert_eq!(Line::through(&f, &a, &b).unwrap(), *l);
        }
    }

    #[test]
    fn canonical_line_independent_of_generators() {
        let f = Field::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let l = rand_line(&f, &mut rng);
            let pts = l.points(&f);
            let a = pts[rng.gen_range(0..pts.len())];
            let b = pts[rng.gen_range(0..pts.len())];
            if a != b {
                assert_eq!(Line::through(&f, &a, &b).unwrap(), l);
            }
            assert!(pts.iter().all(|p| l.contains(&f, p)));
        }
    }

    #[test]
    fn tau_basics() {
        for q in [3, 4, 5] {
            let f = Field::new(q).unwrap();
            for alpha in f.nonzero() {
                assert_eq!(tau(&f, alpha, &Point::unit(0)).unwrap(), Point::unit(2));
                let pa = Point::new(&f, [Fe::ONE, Fe::ZERO, alpha, Fe::ZERO]).unwrap();
                assert_eq!(tau(&f, alpha, &pa).unwrap(), pa);
            }
            assert_eq!(tau(&f, Fe::ZERO, &Point::unit(0)), Err(GeometryError::ZeroAlpha));
        }
    }

    #[test]
    fn tau_fixed_points_are_the_subgeometry() {
        let f = Field::new(3).unwrap();
        let pts = all_points(&f);
        for k in 0..2 {
            let alpha = f.exp(k);
            let fixed: Vec<Point> = pts.iter().copied().filter(|p| tau(&f, alpha, p).unwrap() == *p).collect();
            assert_eq!(fixed.len(), 40);
            for p in &pts {
                assert_eq!(tau(&f, alpha, &tau(&f, alpha, p).unwrap()).unwrap(), *p);
            }
            assert_eq!(BaerSubgeometry::new(alpha).unwrap().points(&f), fixed);
        }
        let s0 = BaerSubgeometry::new(f.exp(0)).unwrap().points(&f);
        let s1 = BaerSubgeometry::new(f.exp(1)).unwrap().points(&f);
        assert!(s0.iter().all(|p| !s1.contains(p)));
    }

    #[test]
    fn baer_subline_test_agrees_with_point_count() {
        let f = Field::new(3).unwrap();
        let sigma = BaerSubgeometry::new(Fe::ONE).unwrap();
        for l in all_lines(&f) {
            let k = sigma.points_on_line(&f, &l).len();
            assert!([0, 1, 2, 4].contains(&k), "count {k}");
            assert_eq!(sigma.is_baer_subline(&f, &l), k == 4);
        }
    }

    #[test]
    fn plucker_round_trip_and_klein() {
        let f = Field::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let l = rand_line(&f, &mut rng);
            let p = l.plucker(&f);
            assert!(klein_quadric(&f, &p).is_zero());
            assert_eq!(Line::from_plucker(&f, p).unwrap(), l);
        }
        let t1 = Line::through(&f, &Point::unit(0), &Point::unit(1)).unwrap();
        let p = t1.plucker(&f);
        assert_eq!(p.iter().filter(|x| !x.is_zero()).count(), 1);
        assert_eq!(p[0], Fe::ONE);
        let off = [Fe::ONE, Fe::ZERO, Fe::ZERO, Fe::ZERO, Fe::ZERO, Fe::ONE];
        assert_eq!(Line::from_plucker(&f, off), Err(GeometryError::NotOnKleinQuadric));
    }

    #[test]
    fn klein_relation_on_all_lines() {
        let f = Field::new(3).unwrap();
        for l in all_lines(&f) {
            let p = l.plucker(&f);
            assert!(klein_quadric(&f, &p).is_zero());
        }
    }

    #[test]
    fn meeting_via_plucker_form() {
        for q in [3, 4] {
            let f = Field::new(q).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..400 {
                let a = rand_line(&f, &mut rng);
                // Bias towards meeting pairs.
                let b = if rng.gen_bool(0.5) {
                    let p = a.points(&f)[0];
                    Line::through(&f, &p, &rand_point(&f, &mut rng)).unwrap_or(a)
                } else {
                    rand_line(&f, &mut rng)
                };
                let form = klein_form(&f, &a.plucker(&f), &b.plucker(&f)).is_zero();
                let shared = a.points(&f).iter().any(|p| b.contains(&f, p));
                assert_eq!(a.meets(&f, &b), shared);
                assert_eq!(form, shared);
                if shared && a != b {
                    let x = a.intersection(&f, &b).unwrap();
                    assert!(a.contains(&f, &x) && b.contains(&f, &x));
                }
            }
        }
    }

    #[test]
    fn planes_and_lines() {
        let f = Field::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let l = rand_line(&f, &mut rng);
            let [p1, p2] = l.dual_planes(&f);
            assert!(p1.contains_line(&f, &l) && p2.contains_line(&f, &l));
            assert_eq!(p1.meet_plane(&f, &p2), Some(l));
            let pt = rand_point(&f, &mut rng);
            if !l.contains(&f, &pt) {
                let pi = Plane::through_line_point(&f, &l, &pt).unwrap();
                assert!(pi.contains_point(&f, &pt) && pi.contains_line(&f, &l));
            }
            let pi = Plane::new(&f, std::array::from_fn(|_| rand_fe(&f, &mut rng))).unwrap_or(p1);
            match pi.meet_line(&f, &l) {
                LineMeet::Contained => assert!(pi.contains_line(&f, &l)),
                LineMeet::Point(x) => assert!(pi.contains_point(&f, &x) && l.contains(&f, &x)),
            }
        }
    }

    #[test]
    fn collineations_preserve_incidence_and_compose() {
        let f = Field::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let id = Collineation::identity(&f);
        for _ in 0..200 {
            let c = rand_collineation(&f, &mut rng);
            let d = rand_collineation(&f, &mut rng);
            let l = rand_line(&f, &mut rng);
            let p = l.points(&f)[rng.gen_range(0..17)];
            let pi = l.dual_planes(&f)[0];
            assert!(c.apply_line(&f, &l).contains(&f, &c.apply_point(&f, &p)));
            assert!(c.apply_plane(&f, &pi).contains_line(&f, &c.apply_line(&f, &l)));
            let cd = c.then(&f, &d);
            assert_eq!(cd.apply_point(&f, &p), d.apply_point(&f, &c.apply_point(&f, &p)));
            assert_eq!(c.then(&f, &c.inverse(&f)), id);
            assert_eq!(c.inverse(&f).then(&f, &c), id);
            assert_eq!(apply_collineation(&f, &id, &l), l);
        }
    }

    #[test]
    fn tau_collineation_matches_tau() {
        let f = Field::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let alpha = f.exp(3);
        let t = tau_collineation(&f, alpha).unwrap();
        assert_eq!(t.then(&f, &t), Collineation::identity(&f));
        for _ in 0..100 {
            let p = rand_point(&f, &mut rng);
            assert_eq!(t.apply_point(&f, &p), tau(&f, alpha, &p).unwrap());
        }
    }
}

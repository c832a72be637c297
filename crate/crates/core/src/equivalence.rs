//! Collineation groups stabilising 𝒟_η (and the line r_U1), equivalence of
//! parallelisms under them, orbit classification and the printed
//! lower bounds on the number of inequivalent parallelisms.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use thiserror::Error;

use crate::field_tower::{Fe, Field};
use crate::goodsets::G1Element;
use crate::parallelisms::{
    apply_to_key, characterize, line_action_from_points, point_action, CharacterizeError, GroupE, Parallelism,
    ParallelismKey,
};
use crate::proj_geometry::{Collineation, Mat4};
use crate::spreads::Geometry;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivalenceError {
    #[error("generator {0} does not preserve Σ_η")]
    NotPreserving(usize),
    #[error("parallelism {index} is outside the family: {reason}")]
    OutsideFamily { index: usize, reason: CharacterizeError },
    #[error("parallelism {0} has lines outside Σ_η")]
    ForeignLines(usize),
}

/// `diag(M, M^(q))` for M ∈ GL(2,q²).
pub fn block(f: &Field, m: [[Fe; 2]; 2]) -> Mat4 {
    let z = Fe::ZERO;
    let c = |x: Fe| f.frob(x);
    [[m[0][0], m[0][1], z, z], [m[1][0], m[1][1], z, z], [z, z, c(m[0][0]), c(m[0][1])], [z, z, c(m[1][0]), c(m[1][1])]]
}

/// ι: swaps t₁ and t₂.
pub fn iota(f: &Field) -> Collineation {
    let (z, o) = (Fe::ZERO, Fe::ONE);
    Collineation::linear(f, [[z, z, o, z], [z, z, z, o], [o, z, z, z], [z, o, z, z]]).unwrap()
}

/// `x ↦ x^p` coordinatewise followed by `diag(1,1,c,c)` with
/// `N(c) = N(η)^{1−p}`, which maps Σ_η to itself.
pub fn frobenius_on_sigma(geo: &Geometry) -> Collineation {
    let f = geo.field();
    let n = f.norm(geo.lambda().eta());
    let target = f.div(n, f.pow(n, f.p() as u64));
    let c = f.nonzero().find(|&c| f.norm(c) == target).unwrap();
    let (z, o) = (Fe::ZERO, Fe::ONE);
    Collineation::new(f, [[o, z, z, z], [z, o, z, z], [z, z, c, z], [z, z, z, c]], 1).unwrap()
}

fn fp_basis(f: &Field) -> Vec<Fe> {
    let m = f.m();
    (0..2)
        .flat_map(|c| (0..m).map(move |j| (c, j)))
        .map(|(c, j)| {
            let mut digits = vec![vec![0u32; m], vec![0u32; m]];
            digits[c][j] = 1;
            f.from_digits(&digits).unwrap()
        })
        .collect()
}

/// Generators of Γ_{r_U1}: `diag(M, M^(q))` for upper triangular M (two
/// diagonal generators and one shear per F_p-basis element), ι, and the
/// corrected Frobenius.
pub fn stabilizer_generators(geo: &Geometry) -> Vec<Collineation> {
    let f = geo.field();
    let (z, o, g) = (Fe::ZERO, Fe::ONE, f.generator());
    let mut gens = vec![
        Collineation::linear(f, block(f, [[g, z], [z, o]])).unwrap(),
        Collineation::linear(f, block(f, [[o, z], [z, g]])).unwrap(),
    ];
    for b in fp_basis(f) {
        gens.push(Collineation::linear(f, block(f, [[o, b], [z, o]])).unwrap());
    }
    gens.push(iota(f));
    gens.push(frobenius_on_sigma(geo));
    gens
}

/// Generators of Γ, the stabiliser of 𝒟_η: those of Γ_{r_U1} plus the
/// lower shears.
pub fn gamma_generators(geo: &Geometry) -> Vec<Collineation> {
    let f = geo.field();
    let (z, o) = (Fe::ZERO, Fe::ONE);
    let mut gens = stabilizer_generators(geo);
    for b in fp_basis(f) {
        gens.push(Collineation::linear(f, block(f, [[o, z], [b, o]])).unwrap());
    }
    gens
}

/// A group element with its action on Σ_η points and lines.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub collineation: Collineation,
    pub point_perm: Vec<u32>,
    pub line_perm: Vec<u32>,
}

/// A group of collineations preserving Σ_η, as the set of distinct
/// actions on Σ_η (breadth-first closure of the generators, identity
/// first).
#[derive(Debug, Clone)]
pub struct CollineationGroup {
    generators: Vec<Collineation>,
    elements: Vec<GroupElement>,
}

impl CollineationGroup {
    pub fn generate(geo: &Geometry, generators: Vec<Collineation>) -> Result<CollineationGroup, EquivalenceError> {
        let f = geo.field();
        let gen_perms: Vec<Vec<u32>> = generators
            .iter()
            .enumerate()
            .map(|(i, g)| point_action(geo, g).ok_or(EquivalenceError::NotPreserving(i)))
            .collect::<Result<_, _>>()?;
        let id = Collineation::identity(f);
        let id_perm: Vec<u32> = (0..geo.sigma_points().len() as u32).collect();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        seen.insert(id_perm.clone());
        let mut found = vec![(id, id_perm)];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for (g, gp) in generators.iter().zip(&gen_perms) {
                let perm: Vec<u32> = found[i].1.iter().map(|&x| gp[x as usize]).collect();
                if seen.insert(perm.clone()) {
                    let c = found[i].0.then(f, g);
                    found.push((c, perm));
                    queue.push_back(found.len() - 1);
                }
            }
        }
        let elements = found
            .into_par_iter()
            .map(|(collineation, point_perm)| {
                let line_perm = line_action_from_points(geo, &point_perm);
                GroupElement { collineation, point_perm, line_perm }
            })
            .collect();
        Ok(CollineationGroup { generators, elements })
    }

    /// Γ_{r_U1}.
    pub fn stabilizer(geo: &Geometry) -> CollineationGroup {
        CollineationGroup::generate(geo, stabilizer_generators(geo)).expect("generators preserve Σ_η")
    }

    /// Γ.
    pub fn gamma(geo: &Geometry) -> CollineationGroup {
        CollineationGroup::generate(geo, gamma_generators(geo)).expect("generators preserve Σ_η")
    }

    pub fn generators(&self) -> &[Collineation] {
        &self.generators
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

/// `2hq²(q²−1)(q+1)` (for Γ_{r_U1}) or `2hq²(q⁴−1)(q+1)` (for Γ) with
/// h = m.
pub fn group_order_formula(q: usize, m: usize, stabilizer_of_line: bool) -> BigUint {
    let q = BigUint::from(q);
    let one = BigUint::one();
    let middle = if stabilizer_of_line { &q * &q - &one } else { q.pow(4) - &one };
    BigUint::from(2 * m) * &q * &q * middle * (&q + &one)
}

fn family_key(geo: &Geometry, e: &GroupE, p: &Parallelism, index: usize) -> Result<ParallelismKey, EquivalenceError> {
    characterize(geo, e, p).map_err(|reason| EquivalenceError::OutsideFamily { index, reason })?;
    p.key(geo).ok_or(EquivalenceError::ForeignLines(index))
}

/// A collineation of the group mapping p1 to p2, if any. Both inputs must
/// be of the form Π_P; the first witness in group order is returned, so
/// p vs p yields the identity.
pub fn are_equivalent(
    geo: &Geometry,
    group: &CollineationGroup,
    p1: &Parallelism,
    p2: &Parallelism,
) -> Result<Option<Collineation>, EquivalenceError> {
    let e = GroupE::new(geo.field());
    let k1 = family_key(geo, &e, p1, 0)?;
    let k2 = family_key(geo, &e, p2, 1)?;
    Ok(equivalence_witness(group, &k1, &k2).map(|g| g.collineation))
}

/// Key-level search without the family check.
pub fn equivalence_witness<'a>(
    group: &'a CollineationGroup,
    k1: &ParallelismKey,
    k2: &ParallelismKey,
) -> Option<&'a GroupElement> {
    group.elements.iter().find(|g| apply_to_key(&g.line_perm, k1) == *k2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    /// Lexicographically least key in the orbit.
    pub canonical: ParallelismKey,
    /// Indices of the family members in this orbit, ascending.
    pub members: Vec<usize>,
    pub orbit_size: usize,
    pub stabilizer_order: usize,
}

impl Orbit {
    pub fn representative(&self) -> usize {
        self.members[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitReport {
    pub family_size: usize,
    pub distinct: usize,
    pub group_order: usize,
    /// Sorted by canonical key.
    pub orbits: Vec<Orbit>,
}

impl OrbitReport {
    pub fn orbit_stabilizer_holds(&self) -> bool {
        self.orbits.iter().all(|o| o.orbit_size * o.stabilizer_order == self.group_order)
    }

    /// Whether every orbit lies inside the family.
    pub fn family_closed(&self) -> bool {
        self.orbits.iter().map(|o| o.orbit_size).sum::<usize>() == self.distinct
    }

    pub fn orbit_of(&self, member: usize) -> Option<usize> {
        self.orbits.iter().position(|o| o.members.contains(&member))
    }
}

/// Partitions keys into orbits: each unassigned key is expanded to its
/// full orbit (images computed in parallel), whose least image is the
/// canonical form.
pub fn classify_keys(group: &CollineationGroup, keys: &[ParallelismKey]) -> OrbitReport {
    let mut index: HashMap<&ParallelismKey, Vec<usize>> = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        index.entry(k).or_default().push(i);
    }
    let distinct = index.len();
    let mut assigned = vec![false; keys.len()];
    let mut orbits = Vec::new();
    for i in 0..keys.len() {
        if assigned[i] {
            continue;
        }
        let images: Vec<ParallelismKey> =
            group.elements.par_iter().map(|g| apply_to_key(&g.line_perm, &keys[i])).collect();
        let stabilizer_order = images.iter().filter(|k| **k == keys[i]).count();
        let orbit: HashSet<&ParallelismKey> = images.iter().collect();
        let canonical = (*orbit.iter().min().unwrap()).clone();
        let mut members: Vec<usize> = orbit.iter().filter_map(|k| index.get(*k)).flatten().copied().collect();
        members.sort_unstable();
        for &m in &members {
            assigned[m] = true;
        }
        orbits.push(Orbit { canonical, members, orbit_size: orbit.len(), stabilizer_order });
    }
    orbits.sort_by(|a, b| a.canonical.cmp(&b.canonical));
    OrbitReport { family_size: keys.len(), distinct, group_order: group.order(), orbits }
}

/// Orbit partition of a family of Π_P's under the group.
pub fn classify(
    geo: &Geometry,
    group: &CollineationGroup,
    family: &[Parallelism],
) -> Result<OrbitReport, EquivalenceError> {
    let e = GroupE::new(geo.field());
    let keys: Vec<ParallelismKey> =
        family.par_iter().enumerate().map(|(i, p)| family_key(geo, &e, p, i)).collect::<Result<_, _>>()?;
    Ok(classify_keys(group, &keys))
}

/// The collineation `diag(1, c, u, c^q u)` with `c^{q−1} = v/u`, which
/// carries Π_P to Π_{P^g} for `g = diag(1,u,v)` in H.
pub fn diagonal_witness(f: &Field, g: G1Element) -> Option<Collineation> {
    if g.swap {
        return None;
    }
    let q = f.q();
    let u = f.exp(g.u_pow * (q - 1));
    let v = f.exp(g.v_pow * (q - 1));
    let ratio = f.div(v, u);
    let c = f.nonzero().find(|&c| f.pow(c, q as u64 - 1) == ratio)?;
    let z = Fe::ZERO;
    Collineation::linear(f, [[Fe::ONE, z, z, z], [z, c, z, z], [z, z, u, z], [z, z, z, f.mul(f.frob(c), u)]]).ok()
}

/// Printed lower bounds on the number of inequivalent parallelisms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowerBound {
    /// Even q, `((q−1)/2)^{q+1}(q−2)!/(2hq(q+1))` as printed.
    EvenPrinted,
    /// Even q with `|𝓘| = (q−2)/2` in place of `(q−1)/2`.
    EvenWithISize,
    /// Odd q, the printed case split by q mod 4.
    Odd,
}

impl LowerBound {
    pub fn name(self) -> &'static str {
        match self {
            LowerBound::EvenPrinted => "even ((q-1)/2)^(q+1)(q-2)!/(2hq(q+1))",
            LowerBound::EvenWithISize => "even ((q-2)/2)^(q+1)(q-2)!/(2hq(q+1))",
            LowerBound::Odd => "odd by q mod 4",
        }
    }

    pub fn for_q(q: usize) -> Vec<LowerBound> {
        if q % 2 == 0 {
            vec![LowerBound::EvenPrinted, LowerBound::EvenWithISize]
        } else {
            vec![LowerBound::Odd]
        }
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn factorial(n: usize) -> BigRational {
    (1..=n).fold(BigRational::one(), |acc, k| acc * rat(k as i64, 1))
}

/// Evaluates a printed lower bound exactly; `None` on parity mismatch.
pub fn lower_bound(q: usize, m: usize, bound: LowerBound) -> Option<BigRational> {
    let (qi, h) = (q as i64, m as i64);
    match bound {
        LowerBound::EvenPrinted | LowerBound::EvenWithISize if q % 2 == 0 => {
            let base = if bound == LowerBound::EvenPrinted { rat(qi - 1, 2) } else { rat(qi - 2, 2) };
            Some(num_traits::pow(base, q + 1) * factorial(q - 2) / rat(2 * h * qi * (qi + 1), 1))
        }
        LowerBound::Odd if q % 2 == 1 => {
            let base = if q % 4 == 1 {
                num_traits::pow(rat((qi - 5) * (qi - 1), 16), (q + 1) / 2)
            } else {
                num_traits::pow(rat(qi - 3, 4), q + 1)
            };
            let tail = num_traits::pow(rat(qi * qi - 1, 1), (q - 1) / 2) / rat(2 * h * qi * qi * (qi + 1), 1);
            Some(base * tail)
        }
        _ => None,
    }
}

/// Groups family indices by orbit, in report order.
pub fn orbit_table(report: &OrbitReport) -> BTreeMap<usize, Vec<usize>> {
    report.orbits.iter().enumerate().map(|(i, o)| (i, o.members.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goodsets::{apply_g1, beutelspacher, dual, CandidateFilter, GoodSetSearch};
    use crate::parallelisms::{build_parallelism, family_key as fkey, line_action};
    use crate::proj_geometry::Line;

    #[test]
    fn stabilizer_orders() {
        for (q, m) in [(3u32, 1usize), (4, 2), (5, 1)] {
            let geo = Geometry::for_q(q).unwrap();
            let g = CollineationGroup::stabilizer(&geo);
            assert_eq!(BigUint::from(g.order()), group_order_formula(q as usize, m, true), "q={q}");
        }
    }

    #[test]
    fn gamma_order_q3() {
        let geo = Geometry::for_q(3).unwrap();
        let g = CollineationGroup::gamma(&geo);
        assert_eq!(BigUint::from(g.order()), group_order_formula(3, 1, false));
    }

    #[test]
    fn generators_fix_desarguesian_and_r_u1() {
        for q in [3u32, 4, 5] {
            let geo = Geometry::for_q(q).unwrap();
            let f = geo.field();
            let d = geo.spread_key(geo.desarguesian().lines()).unwrap();
            for g in stabilizer_generators(&geo) {
                let perm = line_action(&geo, &g).unwrap();
                let mut img: Vec<u32> = d.iter().map(|&i| perm[i as usize]).collect();
                img.sort_unstable();
                assert_eq!(img, d);
                assert_eq!(g.apply_line(f, geo.r_u1()), *geo.r_u1());
            }
        }
    }

    #[test]
    fn orbits_q3() {
        let geo = Geometry::for_q(3).unwrap();
        let group = CollineationGroup::stabilizer(&geo);
        let all = GoodSetSearch::new(geo.lambda(), CandidateFilter::All).collect(1, None);
        let family: Vec<Parallelism> = all.iter().map(|gs| build_parallelism(&geo, gs).unwrap()).collect();
        let report = classify(&geo, &group, &family).unwrap();
        assert_eq!(report.family_size, 64);
        assert!(report.orbit_stabilizer_holds());
        assert!(report.family_closed());
        let a = geo.lambda().i_set()[0];
        let b = beutelspacher(geo.lambda(), a, 0).unwrap();
        let pb = build_parallelism(&geo, &b).unwrap();
        let pd = build_parallelism(&geo, &dual(geo.lambda(), &b).unwrap()).unwrap();
        assert!(are_equivalent(&geo, &group, &pb, &pd).unwrap().is_none());
        let id = are_equivalent(&geo, &group, &pb, &pb).unwrap().unwrap();
        assert_eq!(id, Collineation::identity(geo.field()));
    }

    #[test]
    fn diagonal_witness_maps_h_images() {
        let geo = Geometry::for_q(4).unwrap();
        let f = geo.field();
        let all = GoodSetSearch::new(geo.lambda(), CandidateFilter::All).collect(1, Some(10));
        for gs in &all {
            for (u, v) in [(1, 0), (2, 3), (4, 4)] {
                let g = G1Element { u_pow: u, v_pow: v, swap: false };
                let w = diagonal_witness(f, g).unwrap();
                let perm = line_action(&geo, &w).unwrap();
                let img = apply_g1(geo.lambda(), gs, g).unwrap();
                assert_eq!(apply_to_key(&perm, &fkey(&geo, gs.entries())), fkey(&geo, img.entries()));
                let l: Line = *geo.r_u1();
                assert_eq!(w.apply_line(f, &l), l);
            }
        }
    }

    #[test]
    fn printed_lower_bounds() {
        assert_eq!(lower_bound(3, 1, LowerBound::Odd).unwrap(), rat(0, 1));
        assert_eq!(lower_bound(4, 2, LowerBound::EvenPrinted).unwrap(), rat(243, 1280));
        assert_eq!(lower_bound(4, 2, LowerBound::EvenWithISize).unwrap(), rat(1, 40));
        assert!(lower_bound(4, 2, LowerBound::Odd).is_none());
    }
}

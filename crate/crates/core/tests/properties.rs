use std::sync::Arc;

use proptest::prelude::*;

use spreadsmith::field_tower::{Fe, Field, LambdaSystem};
use spreadsmith::formats::{decode, decode_line, encode, encode_line};
use spreadsmith::goodsets::{
    apply_g1, count_by_permanent, count_closed_form, dual, is_good, CandidateFilter, G1Element, GoodSetSearch,
};
use spreadsmith::proj_geometry::{Collineation, Line, Point};
use spreadsmith::spreads::Geometry;

const ORDERS: [u32; 9] = [3, 4, 5, 7, 8, 9, 11, 13, 16];

fn field(i: usize) -> Arc<Field> {
    Field::new(ORDERS[i % ORDERS.len()]).unwrap()
}

fn elem(f: &Field, raw: u16) -> Fe {
    Fe((raw as usize % f.order()) as u8)
}

fn vec4(f: &Field, raw: [u16; 4]) -> [Fe; 4] {
    raw.map(|r| elem(f, r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn field_axioms(i in 0usize..9, a in any::<u16>(), b in any::<u16>(), c in any::<u16>()) {
        let f = field(i);
        let (a, b, c) = (elem(&f, a), elem(&f, b), elem(&f, c));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.add(f.sub(a, b), b), a);
        prop_assert_eq!(f.frob(f.mul(a, b)), f.mul(f.frob(a), f.frob(b)));
        prop_assert_eq!(f.frob(f.add(a, b)), f.add(f.frob(a), f.frob(b)));
        prop_assert_eq!(f.norm(f.mul(a, b)), f.mul(f.norm(a), f.norm(b)));
        prop_assert!(f.is_subfield(f.norm(a)));
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
            prop_assert_eq!(f.exp(f.log(a).unwrap()), a);
        }
        prop_assert_eq!(decode(&f, &encode(&f, a)), Some(a));
    }

    #[test]
    fn points_are_projective(i in 0usize..9, v in any::<[u16; 4]>(), s in 1u16..) {
        let f = field(i);
        let v = vec4(&f, v);
        prop_assume!(v.iter().any(|x| !x.is_zero()));
        let s = elem(&f, s);
        prop_assume!(!s.is_zero());
        let p = Point::new(&f, v).unwrap();
        prop_assert_eq!(Point::new(&f, v.map(|x| f.mul(x, s))).unwrap(), p);
    }

    #[test]
    fn lines_through_points(i in 0usize..9, a in any::<[u16; 4]>(), b in any::<[u16; 4]>()) {
        let f = field(i);
        let (a, b) = (vec4(&f, a), vec4(&f, b));
        let (Ok(p), Ok(r)) = (Point::new(&f, a), Point::new(&f, b)) else { return Ok(()) };
        prop_assume!(p != r);
        let l = Line::through(&f, &p, &r).unwrap();
        prop_assert!(l.contains(&f, &p) && l.contains(&f, &r));
        prop_assert_eq!(l.points(&f).len(), f.order() + 1);
        prop_assert_eq!(Line::from_plucker(&f, l.plucker(&f)).unwrap(), l);
        prop_assert_eq!(decode_line(&f, &encode_line(&f, &l)), Some(l));
    }

    #[test]
    fn collineations_compose(
        i in 0usize..9,
        m in any::<[[u16; 4]; 4]>(),
        twist in 0usize..8,
        v in any::<[u16; 4]>(),
    ) {
        let f = field(i);
        let m = m.map(|r| vec4(&f, r));
        let Ok(c) = Collineation::new(&f, m, twist) else { return Ok(()) };
        let Ok(p) = Point::new(&f, vec4(&f, v)) else { return Ok(()) };
        let back = c.then(&f, &c.inverse(&f));
        prop_assert_eq!(back.apply_point(&f, &p), p);
        let q = c.apply_point(&f, &p);
        prop_assert_eq!(c.inverse(&f).apply_point(&f, &q), p);
    }

    #[test]
    fn g1_preserves_goodness(q in prop::sample::select(vec![3u32, 4, 5]), k in any::<usize>(), u in 0usize..6, v in 0usize..6, swap: bool) {
        let lambda = LambdaSystem::canonical(Field::new(q).unwrap());
        let family = GoodSetSearch::new(&lambda, CandidateFilter::All).collect(1, Some(500));
        let gs = &family[k % family.len()];
        let qs = q as usize;
        let g = G1Element { u_pow: u % (qs + 1), v_pow: v % (qs + 1), swap };
        let image = apply_g1(&lambda, gs, g).unwrap();
        prop_assert!(is_good(&lambda, image.entries()).unwrap());
        prop_assert_eq!(dual(&lambda, &dual(&lambda, gs).unwrap()).unwrap(), gs.clone());
    }
}

#[test]
fn three_counts_agree() {
    for q in [3u32, 4, 5, 7] {
        let lambda = LambdaSystem::canonical(Field::new(q).unwrap());
        for filter in [CandidateFilter::All, CandidateFilter::ExcludeNormMinusOne] {
            let n = GoodSetSearch::new(&lambda, filter).count(2);
            assert_eq!(count_by_permanent(&lambda, filter), n.into(), "q = {q}, {filter:?}");
            assert_eq!(count_closed_form(&lambda, filter), n.into(), "q = {q}, {filter:?}");
        }
    }
}

#[test]
fn desarguesian_and_hall_spreads_are_spreads() {
    for q in [3, 4, 5] {
        let geo = Geometry::for_q(q).unwrap();
        assert!(geo.check_spread(geo.desarguesian().lines()).is_spread());
        for e in geo.line_set() {
            let hall = geo.hall_spread(&e.line).unwrap();
            assert!(geo.check_spread(hall.lines()).is_spread(), "q = {q}, label {}", e.label);
        }
    }
}

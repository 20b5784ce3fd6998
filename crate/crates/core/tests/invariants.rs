use proptest::prelude::*;
use towercalc_core::index_algebra::{in_weighted_l2, in_weighted_l2_resolved, is_exceptional_weight, negate, shift, ExceptionalWeights, WeightedIndexQuery};
use towercalc_core::scalar::{self, frac, int};
use towercalc_core::static_operator::LinExpr;
use towercalc_core::{Blade, Form, Monomial, Poly, RadialRingElement, Rational, Role, SeedCache, Sign, TowerIndex};

fn form(n: usize, q: usize) -> impl Strategy<Value = Form> {
    let blades = Blade::all(n, q);
    prop::collection::vec((0..blades.len(), -3i32..=3, prop::collection::vec(0u32..=2, n), -5i64..=5), 0..5).prop_map(move |terms| {
        let mut f = Form::zero(n, q);
        for (b, r, e, c) in terms {
            let p = Poly::term(Monomial::from_exponents(&e), int(c));
            f.add_component(blades[b], &RadialRingElement::from_r_poly(n, r, p).unwrap());
        }
        f
    })
}

fn form_any() -> impl Strategy<Value = Form> {
    prop_oneof![Just(3usize), Just(5usize)].prop_flat_map(|n| (0..=n).prop_flat_map(move |q| form(n, q)))
}

fn index() -> impl Strategy<Value = TowerIndex> {
    (any::<bool>(), 0u32..8, 0u32..8, 1u32..6)
        .prop_map(|(p, k, s, m)| TowerIndex::new(if p { Sign::Plus } else { Sign::Minus }, k, s, m))
}

fn weight() -> impl Strategy<Value = Rational> {
    (-40i64..40, 1i64..5).prop_map(|(a, b)| frac(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rot_rot_and_div_div_vanish(f in form_any()) {
        let (n, q) = (f.dim(), f.grade());
        if q + 2 <= n {
            prop_assert!(f.rot().unwrap().rot().unwrap().is_zero());
        }
        if q >= 2 {
            prop_assert!(f.div().unwrap().div().unwrap().is_zero());
        }
    }

    #[test]
    fn div_matches_hodge_formula(f in form_any()) {
        if f.grade() >= 1 {
            prop_assert_eq!(f.div().unwrap(), f.div_via_hodge().unwrap());
        }
    }

    #[test]
    fn laplacian_is_rot_div_plus_div_rot(f in form_any()) {
        prop_assert_eq!(f.laplacian(), f.laplacian_via_rot_div());
    }

    #[test]
    fn hodge_star_squares_to_sign(f in form_any()) {
        let (n, q) = (f.dim(), f.grade());
        let ss = f.hodge_star().hodge_star();
        prop_assert_eq!(ss, if (q * (n - q)) % 2 == 0 { f.clone() } else { f.neg() });
    }

    #[test]
    fn hodge_star_swaps_rot_and_div(f in form_any()) {
        // div = (-1)^{(q-1)N} * rot *, so * div and rot * agree up to sign
        let (n, q) = (f.dim(), f.grade());
        if q >= 1 {
            let lhs = f.hodge_star().rot().unwrap();
            let rhs = f.div().unwrap().hodge_star();
            let sign_ok = lhs == rhs || lhs == rhs.neg();
            prop_assert!(sign_ok, "N={} q={}", n, q);
        }
    }

    #[test]
    fn sphere_pairing_is_symmetric_and_nonnegative(f in form(3, 1), g in form(3, 1)) {
        prop_assert_eq!(f.sphere_inner_product(&g).unwrap(), g.sphere_inner_product(&f).unwrap());
        let ff = f.sphere_inner_product(&f).unwrap();
        prop_assert!(ff >= int(0));
    }

    #[test]
    fn shift_composes_and_moves_degree(i in index(), a in 0i32..4, b in 0i32..4, n in prop_oneof![Just(3usize), Just(5usize)]) {
        let ab = shift(&shift(&i, a).unwrap(), b).unwrap();
        prop_assert_eq!(ab, shift(&i, a + b).unwrap());
        prop_assert_eq!(ab.degree(n), i.degree(n) + a + b);
        prop_assert_eq!(negate(&negate(&i)), i);
        prop_assert!(shift(&i, -(i.k as i32) - 1).is_err());
    }

    #[test]
    fn membership_is_monotone_in_weight(i in index(), s in weight(), t in weight(), n in prop_oneof![Just(3usize), Just(5usize)]) {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        if in_weighted_l2(&i, &hi, n) {
            prop_assert!(in_weighted_l2(&i, &lo, n));
        }
        // the sign-resolved rule agrees with the degree rule for negative indices
        if i.sign == Sign::Minus {
            prop_assert_eq!(in_weighted_l2(&i, &lo, n), in_weighted_l2_resolved(&i, &lo, n));
        }
    }

    #[test]
    fn exceptional_weights_are_symmetric(s in weight(), n in prop_oneof![Just(3usize), Just(5usize), Just(7usize)]) {
        prop_assert_eq!(is_exceptional_weight(&s, n), is_exceptional_weight(&(int(1) - s.clone()), n));
    }

    #[test]
    fn linexpr_round_trips(c in weight(), d in weight(), e in weight()) {
        let x = LinExpr::constant(c).add(&LinExpr::symbol("e1[-,0,0,1]").scale(&d)).add(&LinExpr::symbol("h2[-,1,0,2]").scale(&e));
        prop_assert_eq!(LinExpr::parse(&x.to_string()).unwrap(), x);
    }

    #[test]
    fn index_display_round_trips(i in index()) {
        prop_assert_eq!(TowerIndex::parse(&i.to_string()).unwrap(), i);
    }

    #[test]
    fn rational_text_round_trips(r in weight()) {
        prop_assert_eq!(scalar::parse(&scalar::fmt(&r)).unwrap(), r);
    }
}

#[test]
fn excluded_sets_grow_with_weight_and_match_definition() {
    let p = SeedCache::new();
    let n = 3;
    let mut prev: Vec<TowerIndex> = Vec::new();
    for a in -12..=16 {
        let s = frac(a, 4);
        let ex = WeightedIndexQuery::negative(n, 1, 3, s.clone(), Role::D).excluded(&p).unwrap();
        for i in &prev {
            assert!(ex.contains(i), "excluded set shrank at s={s}");
        }
        for i in &ex {
            // h >= -s - N/2
            assert!(int(2 * i.degree(n) as i64) >= int(-2) * s.clone() - int(n as i64));
            assert_eq!(i.sign, Sign::Minus);
        }
        prev = ex;
    }
}

#[test]
fn exceptional_weight_listing() {
    let w = ExceptionalWeights { n: 3 }.first(6);
    let want: Vec<Rational> = [-5, -3, -1, 3, 5, 7].iter().map(|&a| frac(a, 2)).collect();
    assert_eq!(w, want);
    assert!(w.iter().all(|s| is_exceptional_weight(s, 3)));
    assert!(!is_exceptional_weight(&frac(1, 2), 3));
}

use proptest::prelude::*;
use towercalc::json::{form_from_json, form_to_json, parse_text};
use towercalc_core::scalar::frac;
use towercalc_core::{Blade, Form, Monomial, Poly, RadialRingElement};

fn form() -> impl Strategy<Value = Form> {
    (prop_oneof![Just(3usize), Just(5usize)], 0usize..=5).prop_flat_map(|(n, q)| {
        let q = q.min(n);
        let blades = Blade::all(n, q);
        prop::collection::vec((0..blades.len(), -4i32..=4, prop::collection::vec(0u32..=3, n), -9i64..=9, 1i64..=6), 0..6)
            .prop_map(move |terms| {
                let mut f = Form::zero(n, q);
                for (b, r, e, c, d) in terms {
                    let p = Poly::term(Monomial::from_exponents(&e), frac(c, d));
                    f.add_component(blades[b], &RadialRingElement::from_r_poly(n, r, p).unwrap());
                }
                f
            })
    })
}

proptest! {
    #[test]
    fn forms_round_trip(f in form()) {
        let text = form_to_json(&f).to_string();
        let back = form_from_json(&parse_text(&text, "test").unwrap(), "$").unwrap();
        prop_assert_eq!(back, f);
    }
}

#[test]
fn bad_blades_are_located() {
    let v = parse_text(r#"{"n": 3, "q": 1, "terms": [{"blade": [4], "r": 0, "coeff": "1", "exp": [0, 0, 0]}]}"#, "t").unwrap();
    let e = form_from_json(&v, "$.E").unwrap_err().to_string();
    assert!(e.contains("$.E.terms[0].blade[0]"), "{e}");
    let v = parse_text(r#"{"n": 3, "q": 2, "terms": [{"blade": [2, 1], "r": 0, "coeff": "1", "exp": [0, 0, 0]}]}"#, "t").unwrap();
    assert!(form_from_json(&v, "$").is_err());
}

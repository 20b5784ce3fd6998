use towercalc_core::atlas::Atlas;
use towercalc_core::expansion::{expand, classify_harmonic, reconstruct, HarmonicBranch, IntegrabilityFlags, MaxwellPair};
use towercalc_core::index_algebra::TheoremId;
use towercalc_core::scalar::{frac, int};
use towercalc_core::static_operator::solve_whole_space;
use towercalc_core::towers::{build_tower_pair, exceptional_form, verify_independence, ExceptionalKind, TowerRef};
use towercalc_core::{Error, Form, Role, SeedCache, Sign, TowerFamily, TowerIndex};

fn families(p: &SeedCache, n: usize, smax: u32, floors: u32) -> Vec<TowerFamily> {
    let mut out = Vec::new();
    for q in 0..=n {
        for sign in Sign::BOTH {
            for sigma in 0..=smax {
                if let Ok(f) = build_tower_pair(p, n, q, sign, sigma, floors) {
                    out.push(f);
                }
            }
        }
    }
    out
}

#[test]
fn floors_satisfy_maxwell_ladder() {
    let p = SeedCache::new();
    let n = 3;
    let fams = families(&p, n, 2, 3);
    assert!(fams.len() >= 20);
    for fam in &fams {
        let name = fam.label();
        for k in 0..=fam.floors() {
            let want_h = match fam.sign {
                Sign::Plus => k as i32 + fam.sigma as i32,
                Sign::Minus => k as i32 - fam.sigma as i32 - n as i32,
            };
            for role in [Role::D, Role::R] {
                for f in fam.floor(role, k).iter().filter(|f| !f.is_zero()) {
                    assert_eq!(f.homogeneous_degree(), Some(want_h), "{name} {role}[{k}]");
                }
            }
            let d = fam.floor(Role::D, k);
            let r = fam.floor(Role::R, k);
            for (m, f) in d.iter().enumerate() {
                if fam.q > 0 {
                    assert!(f.div().unwrap().is_zero(), "{name} div D[{k}][{m}]");
                }
                if fam.q < n {
                    let rot = f.rot().unwrap();
                    if k == 0 {
                        assert!(rot.is_zero(), "{name} rot D[0][{m}]");
                    } else {
                        let want = fam.floor(Role::R, k - 1).get(m).cloned().unwrap_or_else(|| Form::zero(n, fam.q + 1));
                        assert_eq!(rot, want, "{name} rot D[{k}][{m}]");
                    }
                }
            }
            for (m, f) in r.iter().enumerate() {
                if fam.q + 1 < n {
                    assert!(f.rot().unwrap().is_zero(), "{name} rot R[{k}][{m}]");
                }
                let div = f.div().unwrap();
                if k == 0 {
                    assert!(div.is_zero(), "{name} div R[0][{m}]");
                } else {
                    let want = fam.floor(Role::D, k - 1).get(m).cloned().unwrap_or_else(|| Form::zero(n, fam.q));
                    assert_eq!(div, want, "{name} div R[{k}][{m}]");
                }
            }
        }
    }
    assert!(verify_independence(&fams).iter().all(|&(_, _, ok)| ok));
}

#[test]
fn expansion_reconstructs_input() {
    let p = SeedCache::new();
    let atlas = Atlas::new(&p, 3).unwrap();
    let pick = |role, rank, sign, k, sigma, m| atlas.form(role, rank, &TowerIndex::new(sign, k, sigma, m)).unwrap().unwrap();
    let mut e = pick(Role::D, 1, Sign::Minus, 2, 1, 2).scale(&frac(3, 2));
    e.add_assign(&pick(Role::D, 1, Sign::Plus, 1, 0, 1));
    let h = pick(Role::R, 2, Sign::Minus, 3, 0, 1).scale(&int(-5));
    let pair = MaxwellPair::new(e, h).unwrap();
    let res = expand(&atlas, &pair, 4).unwrap();
    assert!(res.in_span());
    assert_eq!(res.e_coeffs.get(&TowerIndex::new(Sign::Minus, 2, 1, 2)), Some(&frac(3, 2)));
    assert_eq!(res.h_coeffs.get(&TowerIndex::new(Sign::Minus, 3, 0, 1)), Some(&int(-5)));
    assert_eq!(reconstruct(&atlas, &res).unwrap(), pair);
}

#[test]
fn expansion_rejects_non_solutions() {
    let p = SeedCache::new();
    let atlas = Atlas::new(&p, 3).unwrap();
    // x_1^5 dx_1 is not killed by four applications of the Maxwell operator
    let x = towercalc_core::RadialRingElement::var(3, 0);
    let mut f = Form::scalar(x.mul(&x).mul(&x).mul(&x).mul(&x));
    f = f.rot().unwrap();
    let pair = MaxwellPair::new(f, Form::zero(3, 2)).unwrap();
    assert!(matches!(expand(&atlas, &pair, 2), Err(Error::InvalidInput(_))));
}

#[test]
fn exceptional_case_table() {
    use ExceptionalKind::*;
    let d = |role, rank, k| Some(TowerRef { role, rank, k });
    let n = 3;
    let cases = [
        (DHat, 0, 2, d(Role::D, 0, 2)),
        (DHat, 0, 3, None),
        (DHat, 1, 3, d(Role::R, 1, 1)),
        (DHat, 2, 3, d(Role::D, 2, 3)),
        (DHat, 2, 2, None),
        (RHat, 0, 3, d(Role::R, 1, 3)),
        (RHat, 0, 2, None),
        (RHat, 1, 2, d(Role::D, 2, 1)),
        (RHat, 2, 4, d(Role::R, 3, 4)),
        (RHat, 2, 3, None),
    ];
    for (kind, q, k, want) in cases {
        assert_eq!(exceptional_form(kind, n, q, k, None).unwrap().value, want, "{kind:?} q={q} K={k}");
    }
    // weighted variants split at N/2 - K
    let at = |kind, s| exceptional_form(kind, n, 0, 2, Some(&s)).unwrap().value;
    assert!(at(DHatWeighted, int(-1)).is_some());
    assert!(at(DHatWeighted, frac(-1, 2)).is_none());
    assert!(at(DCheckWeighted, frac(-1, 2)).is_some());
    assert!(at(DCheckWeighted, int(-1)).is_none());
    assert!(exceptional_form(DHatWeighted, n, 0, 2, None).is_err());
    assert!(exceptional_form(DHat, n, 0, 0, None).is_err());
}

#[test]
fn whole_space_solution_solves_the_system() {
    let p = SeedCache::new();
    let atlas = Atlas::new(&p, 3).unwrap();
    for sigma in 0..=2 {
        let f = atlas.form(Role::D, 1, &TowerIndex::new(Sign::Minus, 0, sigma, 1)).unwrap().unwrap();
        let g = atlas.form(Role::R, 2, &TowerIndex::new(Sign::Minus, 0, sigma, 1)).unwrap().unwrap();
        let sol = solve_whole_space(&atlas, &f, &g, 3).unwrap();
        assert_eq!(sol.e.rot().unwrap(), g, "rot E = G at sigma={sigma}");
        assert_eq!(sol.h.div().unwrap(), f, "div H = F at sigma={sigma}");
        assert!(sol.e.div().unwrap().is_zero());
        assert!(sol.h.rot().unwrap().is_zero());
    }
}

#[test]
fn classification_of_a_seed() {
    let p = SeedCache::new();
    let atlas = Atlas::new(&p, 3).unwrap();
    let e = atlas.form(Role::D, 1, &TowerIndex::new(Sign::Minus, 0, 0, 1)).unwrap().unwrap();
    // degree -3 fails L^2_s once -3 >= -s - 3/2
    let c = classify_harmonic(&atlas, &e, &int(2), IntegrabilityFlags::default()).unwrap();
    assert!(c.residual.is_zero());
    assert_eq!(c.coeffs.get(&TowerIndex::new(Sign::Minus, 0, 0, 1)), Some(&int(1)));
    assert_ne!(c.branch, HarmonicBranch::Potential);
    // in L^2_0 there is nothing to represent
    let c0 = classify_harmonic(&atlas, &e, &int(0), IntegrabilityFlags::default()).unwrap();
    assert!(c0.non_integrable.is_zero());
}

#[test]
fn invalid_inputs_are_rejected() {
    let p = SeedCache::new();
    assert_eq!(build_tower_pair(&p, 4, 1, Sign::Plus, 0, 1).unwrap_err(), Error::UnsupportedDimension(4));
    assert!(matches!(build_tower_pair(&p, 3, 4, Sign::Plus, 0, 1), Err(Error::GradeOverflow { .. })));
    assert_eq!(TowerIndex::new(Sign::Minus, 1, 0, 1).shift(-2).unwrap_err(), Error::NegativeHeight);
    assert!(matches!(TheoremId::parse("bogus"), Err(Error::UnknownTheorem(_))));
    assert_eq!(Form::zero(3, 0).div().unwrap_err(), Error::GradeUnderflow);
    assert!(matches!(MaxwellPair::new(Form::zero(3, 1), Form::zero(3, 1)), Err(Error::DimensionMismatch(_))));
    assert!(Atlas::new(&p, 6).is_err());
}

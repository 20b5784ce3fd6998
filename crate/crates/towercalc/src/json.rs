//! JSON encodings. Every file carries `"schema": "towercalc/1"`.
//!
//! A form is `{"n", "q", "terms": [{"blade": [i..], "r": b, "coeff": "p/q",
//! "exp": [..]}]}` with 1-based blade indices; each term stands for
//! `coeff * r^b * x^exp dx^blade`.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use towercalc_core::error::{Error, Result};
use towercalc_core::expansion::{ExpansionResult, MaxwellPair};
use towercalc_core::scalar::{self, Rational};
use towercalc_core::static_operator::{LinExpr, OperatorRangeDescriptor, TowerProfile};
use towercalc_core::towers::{Role, Sign, TowerFamily, TowerIndex, TowerRef};
use towercalc_core::{Blade, Form, Monomial, Poly, RadialRingElement};

pub const SCHEMA: &str = "towercalc/1";

fn err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("parse error at {path}: {msg}"))
}

/// Parses text, reporting syntax errors with line and column.
pub fn parse_text(text: &str, origin: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("parse error in {origin} at line {}, column {}: {e}", e.line(), e.column())))
}

pub fn check_schema(v: &Value, kind: &str) -> Result<()> {
    match v.get("schema").and_then(Value::as_str) {
        Some(SCHEMA) => {}
        Some(other) => return Err(err("$.schema", format!("unsupported schema {other:?}, expected {SCHEMA:?}"))),
        None => return Err(err("$.schema", "missing schema field")),
    }
    match v.get("kind").and_then(Value::as_str) {
        Some(k) if k == kind => Ok(()),
        Some(k) => Err(err("$.kind", format!("expected {kind:?}, found {k:?}"))),
        None => Err(err("$.kind", "missing kind field")),
    }
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| err(path, format!("missing field {key:?}")))
}

pub fn get_usize(v: &Value, key: &str, path: &str) -> Result<usize> {
    field(v, key, path)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| err(&format!("{path}.{key}"), "expected a nonnegative integer"))
}

fn get_u32(v: &Value, key: &str, path: &str) -> Result<u32> {
    let x = get_usize(v, key, path)?;
    u32::try_from(x).map_err(|_| err(&format!("{path}.{key}"), "integer too large"))
}

fn get_i32(v: &Value, key: &str, path: &str) -> Result<i32> {
    field(v, key, path)?
        .as_i64()
        .and_then(|x| i32::try_from(x).ok())
        .ok_or_else(|| err(&format!("{path}.{key}"), "expected an integer"))
}

fn get_array<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Vec<Value>> {
    field(v, key, path)?.as_array().ok_or_else(|| err(&format!("{path}.{key}"), "expected an array"))
}

pub fn rational_to_json(r: &Rational) -> Value {
    Value::String(scalar::fmt(r))
}

pub fn rational_from_json(v: &Value, path: &str) -> Result<Rational> {
    match v {
        Value::String(s) => scalar::parse(s).map_err(|_| err(path, format!("bad rational {s:?}"))),
        Value::Number(n) if n.is_i64() => Ok(scalar::int(n.as_i64().unwrap())),
        _ => Err(err(path, "expected a rational as a string like \"3/2\"")),
    }
}

pub fn form_to_json(f: &Form) -> Value {
    let n = f.dim();
    let mut terms = Vec::new();
    for (b, c) in f.components() {
        let blade: Vec<usize> = b.indices().iter().map(|i| i + 1).collect();
        for p in c.parts() {
            for (m, v) in p.poly().terms() {
                terms.push(json!({
                    "blade": blade,
                    "r": p.r_exp(),
                    "coeff": scalar::fmt(v),
                    "exp": m.exponents(n),
                }));
            }
        }
    }
    json!({"n": n, "q": f.grade(), "terms": terms})
}

pub fn form_from_json(v: &Value, path: &str) -> Result<Form> {
    let n = get_usize(v, "n", path)?;
    let q = get_usize(v, "q", path)?;
    towercalc_core::error::check_dimension(n).map_err(|e| err(&format!("{path}.n"), e))?;
    if q > n {
        return Err(err(&format!("{path}.q"), format!("rank {q} exceeds dimension {n}")));
    }
    let mut f = Form::zero(n, q);
    for (t, term) in get_array(v, "terms", path)?.iter().enumerate() {
        let tp = format!("{path}.terms[{t}]");
        let blade_v = get_array(term, "blade", &tp)?;
        let mut ix = Vec::with_capacity(blade_v.len());
        for (j, b) in blade_v.iter().enumerate() {
            let i = b.as_u64().filter(|&i| i >= 1 && i as usize <= n).ok_or_else(|| err(&format!("{tp}.blade[{j}]"), format!("index must be in 1..={n}")))?;
            ix.push(i as usize - 1);
        }
        if ix.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err(&format!("{tp}.blade"), "indices must be strictly increasing"));
        }
        if ix.len() != q {
            return Err(err(&format!("{tp}.blade"), format!("expected {q} indices")));
        }
        let blade = Blade::from_indices(&ix).map_err(|e| err(&tp, e))?;
        let r = get_i32(term, "r", &tp)?;
        let coeff = rational_from_json(field(term, "coeff", &tp)?, &format!("{tp}.coeff"))?;
        let exp_v = get_array(term, "exp", &tp)?;
        if exp_v.len() != n {
            return Err(err(&format!("{tp}.exp"), format!("expected {n} exponents")));
        }
        let mut exps = Vec::with_capacity(n);
        for (j, e) in exp_v.iter().enumerate() {
            let x = e.as_u64().filter(|&x| x <= 200).ok_or_else(|| err(&format!("{tp}.exp[{j}]"), "expected a small nonnegative integer"))?;
            exps.push(x as u32);
        }
        let poly = Poly::term(Monomial::from_exponents(&exps), coeff);
        let ring = RadialRingElement::from_r_poly(n, r, poly).map_err(|e| err(&tp, e))?;
        f.add_component(blade, &ring);
    }
    Ok(f)
}

pub fn sign_str(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

fn floors_to_json(floors: &[Vec<Form>]) -> Value {
    Value::Array(floors.iter().map(|fl| Value::Array(fl.iter().map(form_to_json).collect())).collect())
}

fn floors_from_json(v: &Value, path: &str) -> Result<Vec<Vec<Form>>> {
    let arr = v.as_array().ok_or_else(|| err(path, "expected an array of floors"))?;
    arr.iter()
        .enumerate()
        .map(|(k, fl)| {
            let fp = format!("{path}[{k}]");
            fl.as_array()
                .ok_or_else(|| err(&fp, "expected an array of forms"))?
                .iter()
                .enumerate()
                .map(|(m, f)| form_from_json(f, &format!("{fp}[{m}]")))
                .collect()
        })
        .collect()
}

pub fn family_to_json(f: &TowerFamily) -> Value {
    json!({
        "q": f.q,
        "sign": sign_str(f.sign),
        "sigma": f.sigma,
        "floors": f.floors(),
        "omega_sq": scalar::fmt(&f.omega_sq),
        "D": floors_to_json(&f.d_floors),
        "R": floors_to_json(&f.r_floors),
    })
}

pub fn family_from_json(n: usize, v: &Value, path: &str) -> Result<TowerFamily> {
    let q = get_usize(v, "q", path)?;
    let sign_s = field(v, "sign", path)?.as_str().ok_or_else(|| err(&format!("{path}.sign"), "expected \"+\" or \"-\""))?;
    let sign = Sign::parse(sign_s).map_err(|e| err(&format!("{path}.sign"), e))?;
    let sigma = get_u32(v, "sigma", path)?;
    let omega_sq = rational_from_json(field(v, "omega_sq", path)?, &format!("{path}.omega_sq"))?;
    let d_floors = floors_from_json(field(v, "D", path)?, &format!("{path}.D"))?;
    let r_floors = floors_from_json(field(v, "R", path)?, &format!("{path}.R"))?;
    if d_floors.is_empty() {
        return Err(err(&format!("{path}.D"), "a family needs at least floor 0"));
    }
    Ok(TowerFamily { n, q, sign, sigma, omega_sq, d_floors, r_floors })
}

pub fn towers_to_json(n: usize, families: &[TowerFamily]) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "towers",
        "n": n,
        "families": families.iter().map(family_to_json).collect::<Vec<_>>(),
    })
}

pub fn towers_from_json(v: &Value) -> Result<(usize, Vec<TowerFamily>)> {
    check_schema(v, "towers")?;
    let n = get_usize(v, "n", "$")?;
    towercalc_core::error::check_dimension(n)?;
    let fams = get_array(v, "families", "$")?
        .iter()
        .enumerate()
        .map(|(i, f)| family_from_json(n, f, &format!("$.families[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok((n, fams))
}

pub fn pair_to_json(p: &MaxwellPair) -> Value {
    json!({"schema": SCHEMA, "kind": "pair", "E": form_to_json(&p.e), "H": form_to_json(&p.h)})
}

pub fn pair_from_json(v: &Value) -> Result<MaxwellPair> {
    check_schema(v, "pair")?;
    let e = form_from_json(field(v, "E", "$")?, "$.E")?;
    let h = form_from_json(field(v, "H", "$")?, "$.H")?;
    MaxwellPair::new(e, h)
}

fn coeffs_to_json(m: &BTreeMap<TowerIndex, Rational>) -> Value {
    let mut o = Map::new();
    for (k, v) in m {
        o.insert(k.to_string(), rational_to_json(v));
    }
    Value::Object(o)
}

pub fn tower_ref_to_json(r: &TowerRef) -> Value {
    json!({"role": r.role.to_string(), "rank": r.rank, "index": r.index().to_string()})
}

pub fn expansion_to_json(res: &ExpansionResult) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "expansion",
        "n": res.n,
        "q": res.q,
        "K": res.k,
        "e_coeffs": coeffs_to_json(&res.e_coeffs),
        "h_coeffs": coeffs_to_json(&res.h_coeffs),
        "e_hat": res.e_hat.as_ref().map(rational_to_json),
        "e_hat_form": res.e_hat_form.as_ref().map(tower_ref_to_json),
        "h_hat": res.h_hat.as_ref().map(rational_to_json),
        "h_hat_form": res.h_hat_form.as_ref().map(tower_ref_to_json),
        "in_span": res.in_span(),
        "residual": {"E": form_to_json(&res.residual.e), "H": form_to_json(&res.residual.h)},
    })
}

fn linmap_to_json(m: &BTreeMap<TowerIndex, LinExpr>) -> Value {
    let mut o = Map::new();
    for (k, v) in m {
        o.insert(k.to_string(), Value::String(v.to_string()));
    }
    Value::Object(o)
}

fn linmap_from_json(v: &Value, path: &str) -> Result<BTreeMap<TowerIndex, LinExpr>> {
    let obj = v.as_object().ok_or_else(|| err(path, "expected an object of index -> coefficient"))?;
    let mut out = BTreeMap::new();
    for (k, c) in obj {
        let p = format!("{path}[{k:?}]");
        let idx = TowerIndex::parse(k).map_err(|e| err(&p, e))?;
        let s = c.as_str().ok_or_else(|| err(&p, "expected a coefficient string"))?;
        out.insert(idx, LinExpr::parse(s).map_err(|e| err(&p, e))?);
    }
    Ok(out)
}

pub fn profile_to_json(p: &TowerProfile) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "profile",
        "n": p.n,
        "q": p.q,
        "weight": scalar::fmt(&p.s),
        "step": p.step,
        "l2_weight": scalar::fmt(&p.l2_weight),
        "f": linmap_to_json(&p.f_coeffs),
        "g": linmap_to_json(&p.g_coeffs),
    })
}

/// Reads a seed profile. `weight` may be overridden by the caller.
pub fn profile_from_json(v: &Value, weight: Option<&Rational>) -> Result<TowerProfile> {
    check_schema(v, "profile")?;
    let n = get_usize(v, "n", "$")?;
    let q = get_usize(v, "q", "$")?;
    let s = match weight {
        Some(w) => w.clone(),
        None => rational_from_json(field(v, "weight", "$")?, "$.weight")?,
    };
    let f = match v.get("f") {
        Some(x) => linmap_from_json(x, "$.f")?,
        None => BTreeMap::new(),
    };
    let g = match v.get("g") {
        Some(x) => linmap_from_json(x, "$.g")?,
        None => BTreeMap::new(),
    };
    TowerProfile::new(n, q, s, f, g)
}

pub fn range_to_json(d: &OperatorRangeDescriptor) -> Value {
    let ix = |v: &[TowerIndex]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>();
    json!({
        "j": d.j,
        "target_weight": scalar::fmt(&d.target_weight),
        "new_seed_D": ix(&d.new_seed_d),
        "new_seed_R": ix(&d.new_seed_r),
        "shifted_D": ix(&d.shifted_d),
        "shifted_R": ix(&d.shifted_r),
        "t_bounds": d.t_bounds.iter().map(|b| json!({
            "label": b.label,
            "bound": scalar::fmt(&b.bound),
            "strict": b.strict,
        })).collect::<Vec<_>>(),
    })
}

pub fn role_from_str(s: &str) -> Result<Role> {
    match s {
        "D" | "d" => Ok(Role::D),
        "R" | "r" => Ok(Role::R),
        other => Err(Error::InvalidInput(format!("unknown role {other:?}"))),
    }
}

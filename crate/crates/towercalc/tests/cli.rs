use std::fs;
use std::path::Path;

use clap::Parser;
use serde_json::{json, Value};
use towercalc::cache::SharedSeedCache;
use towercalc::cli::{run, Cli, Io, EXCEPTIONAL_WARNING};
use towercalc::json;
use towercalc_core::atlas::Atlas;
use towercalc_core::expansion::MaxwellPair;
use towercalc_core::harmonic_spaces::{mu, SeedProvider};
use towercalc_core::scalar::frac;
use towercalc_core::{Role, Sign, TowerIndex};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn call(cache: &SharedSeedCache, args: &[&str]) -> Run {
    let cli = Cli::try_parse_from(std::iter::once("towercalc").chain(args.iter().copied())).expect("arguments parse");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(cli, cache, &mut Io { out: &mut out, err: &mut err, verbose: false });
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn build_is_deterministic_and_verifies() {
    let cache = SharedSeedCache::in_memory();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = ["build", "--n", "3", "--q", "1", "--sigma-max", "2", "--floors", "3", "--out"];
    let mut first: Vec<&str> = args.to_vec();
    first.push(p(&a));
    assert_eq!(call(&cache, &first).code, 0);
    // a fresh cache must not change the bytes
    let mut second: Vec<&str> = args.to_vec();
    second.push(p(&b));
    assert_eq!(call(&SharedSeedCache::in_memory(), &second).code, 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let doc: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(doc["schema"], "towercalc/1");
    assert_eq!(doc["families"].as_array().unwrap().len(), 6);
    let order: Vec<(String, u64)> = doc["families"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["sign"].as_str().unwrap().to_string(), f["sigma"].as_u64().unwrap()))
        .collect();
    let want: Vec<(String, u64)> = ["+", "-"].iter().flat_map(|s| (0..3).map(move |k| (s.to_string(), k))).collect();
    assert_eq!(order, want);

    let v = call(&cache, &["verify", p(&a)]);
    assert_eq!(v.code, 0, "{}", v.out);
    assert!(v.out.contains("0 failed"));
}

#[test]
fn families_round_trip_through_json() {
    let cache = SharedSeedCache::in_memory();
    let r = call(&cache, &["build", "--n", "3", "--sigma-max", "1", "--floors", "2"]);
    assert_eq!(r.code, 0);
    let v = json::parse_text(&r.out, "stdout").unwrap();
    let (n, fams) = json::towers_from_json(&v).unwrap();
    assert_eq!(n, 3);
    assert_eq!(json::towers_to_json(n, &fams), v);
    // q ranges over 0..=N, so the q = 3 family with its single form is present
    assert!(fams.iter().any(|f| f.q == 3));
}

#[test]
fn even_dimension_is_a_usage_error() {
    let r = call(&SharedSeedCache::in_memory(), &["build", "--n", "4", "--q", "1"]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("even dimension unsupported"), "{}", r.err);
    let rec: Value = serde_json::from_str(r.err.trim()).unwrap();
    assert_eq!(rec["error"], "unsupported-dimension");
}

#[test]
fn malformed_files_report_locations() {
    let cache = SharedSeedCache::in_memory();
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");

    fs::write(&f, "{\"schema\": \"towercalc/1\",\n  \"kind\": }").unwrap();
    let r = call(&cache, &["verify", p(&f)]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("line 2"), "{}", r.err);

    let good = call(&cache, &["build", "--n", "3", "--q", "1", "--sigma", "0", "--floors", "1"]);
    let mut doc: Value = serde_json::from_str(&good.out).unwrap();
    doc["families"][0]["D"][1][0]["terms"][0]["coeff"] = json!("three halves");
    fs::write(&f, doc.to_string()).unwrap();
    let r = call(&cache, &["verify", p(&f)]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("$.families[0].D[1][0].terms[0].coeff"), "{}", r.err);

    doc["schema"] = json!("towercalc/0");
    fs::write(&f, doc.to_string()).unwrap();
    assert_eq!(call(&cache, &["verify", p(&f)]).code, 2);

    let r = call(&cache, &["verify", p(&dir.path().join("missing.json"))]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("io-read"));
}

#[test]
fn tampered_coefficient_names_the_relation() {
    let cache = SharedSeedCache::in_memory();
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.json");
    let good = call(&cache, &["build", "--n", "3", "--q", "1", "--sign", "minus", "--sigma", "0", "--floors", "3"]);
    let mut doc: Value = serde_json::from_str(&good.out).unwrap();
    let term = &mut doc["families"][0]["D"][2][0]["terms"][0];
    let c = towercalc_core::scalar::parse(term["coeff"].as_str().unwrap()).unwrap();
    term["coeff"] = json!(towercalc_core::scalar::fmt(&(c + frac(1, 3))));
    fs::write(&f, doc.to_string()).unwrap();
    let r = call(&cache, &["verify", p(&f)]);
    assert_eq!(r.code, 1);
    assert!(r.out.lines().any(|l| l.starts_with("FAIL ") && l.contains("D[2],m=1)")), "{}", r.out);
}

#[test]
fn index_tables_and_weights() {
    let cache = SharedSeedCache::in_memory();
    let r = call(&cache, &["indices", "--n", "3", "--q", "1", "--max-floor", "3", "--weight", "5/2"]);
    assert_eq!(r.code, 0);
    assert!(r.err.contains(EXCEPTIONAL_WARNING));
    let mut lines = r.out.lines();
    assert_eq!(lines.next(), Some("sign,k,sigma,m,degree"));
    for l in lines {
        let cols: Vec<i64> = l.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        // degree = k - sigma - 3 and not below -s - N/2 = -4
        assert_eq!(cols[3], cols[0] - cols[1] - 3);
        assert!(cols[3] >= -4);
    }
    let r = call(&cache, &["indices", "--n", "3", "--q", "1", "--max-floor", "1", "--weight", "9/4"]);
    assert!(r.err.is_empty());

    let w = call(&cache, &["weights", "--n", "3", "--list", "10"]);
    assert_eq!(w.out.lines().count(), 10);
    assert!(w.out.lines().any(|l| l == "3/2") && w.out.lines().any(|l| l == "-1/2"));

    let d = call(&cache, &["dims", "--n", "3", "--sigma-max", "1"]);
    assert!(d.out.contains("1,1,5\n"));
}

#[test]
fn iterate_emits_profile_chain() {
    let cache = SharedSeedCache::in_memory();
    let dir = tempfile::tempdir().unwrap();
    let seed = dir.path().join("seeds.json");
    let idx = TowerIndex::new(Sign::Minus, 0, 0, 1).to_string();
    fs::write(&seed, json!({"schema": "towercalc/1", "kind": "profile", "n": 3, "q": 1, "f": {idx: "2"}, "g": {}}).to_string()).unwrap();
    let r = call(&cache, &["iterate", "--n", "3", "--q", "1", "--weight", "13/4", "--power", "3", "--seed", p(&seed)]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["profiles"].as_array().unwrap().len(), 4);
    assert_eq!(v["ranges"].as_array().unwrap().len(), 3);
    // after one step the data lands on the R side, shifted by one
    assert_eq!(v["profiles"][1]["g"]["-,1,0,1"], "2");

    // 7/2 = 2 + N/2 is exceptional for N = 3
    let r = call(&cache, &["iterate", "--n", "3", "--q", "1", "--weight", "7/2", "--power", "3", "--seed", p(&seed)]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("hypothesis"), "{}", r.err);
}

#[test]
fn expand_and_classify_commands() {
    let cache = SharedSeedCache::in_memory();
    let dir = tempfile::tempdir().unwrap();
    let atlas = Atlas::new(&cache, 3).unwrap();
    let e = atlas.form(Role::D, 1, &TowerIndex::new(Sign::Minus, 1, 0, 2)).unwrap().unwrap().scale(&frac(-2, 3));
    let h = atlas.form(Role::R, 2, &TowerIndex::new(Sign::Minus, 0, 1, 1)).unwrap().unwrap();
    let pair = dir.path().join("pair.json");
    fs::write(&pair, json::pair_to_json(&MaxwellPair::new(e.clone(), h).unwrap()).to_string()).unwrap();
    let r = call(&cache, &["expand", "--input", p(&pair), "--floors", "3", "--weight", "2", "--weight", "-5/4"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["in_span"], true);
    assert_eq!(v["e_coeffs"]["-,1,0,2"], "-2/3");
    assert_eq!(v["h_coeffs"]["-,0,1,1"], "1");
    assert_eq!(v["membership"][0]["in_space"], false);
    assert_eq!(v["membership"][1]["in_space"], true);
    assert!(r.err.contains("offending terms"));

    let seed = atlas.form(Role::D, 1, &TowerIndex::new(Sign::Minus, 0, 0, 1)).unwrap().unwrap();
    let form = dir.path().join("form.json");
    fs::write(&form, json!({"schema": "towercalc/1", "kind": "form", "form": json::form_to_json(&seed)}).to_string()).unwrap();
    let r = call(&cache, &["classify", "--input", p(&form), "--weight", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["represented"], true);
}

#[test]
fn hypotheses_command_exit_codes() {
    let cache = SharedSeedCache::in_memory();
    let ok = call(&cache, &["hypotheses", "--theorem", "iterated-operator", "--n", "3", "--weight", "13/4", "--j", "3"]);
    assert_eq!(ok.code, 0);
    let bad = call(&cache, &["hypotheses", "--theorem", "maxwell-isomorphism", "--n", "3", "--weight", "3/2"]);
    assert_eq!(bad.code, 1);
    assert!(bad.out.contains("FAIL"));
    let unknown = call(&cache, &["hypotheses", "--theorem", "nope", "--n", "3", "--weight", "0"]);
    assert_eq!(unknown.code, 2);
}

#[test]
fn disk_cache_persists_seed_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let first = SharedSeedCache::with_dir(dir.path());
    let space = first.seed_space(3, 1, -4).unwrap();
    let d = mu(&first, 3, 2, 1).unwrap();
    assert!(fs::read_dir(dir.path()).unwrap().count() >= 2);
    let second = SharedSeedCache::with_dir(dir.path());
    assert_eq!(second.seed_space(3, 1, -4).unwrap().basis, space.basis);
    assert_eq!(mu(&second, 3, 2, 1).unwrap(), d);
    // a corrupt entry is ignored and recomputed
    for e in fs::read_dir(dir.path()).unwrap() {
        fs::write(e.unwrap().path(), "not json").unwrap();
    }
    let third = SharedSeedCache::with_dir(dir.path());
    assert_eq!(third.seed_space(3, 1, -4).unwrap().basis, space.basis);
}

//! The static Maxwell solution operator on tower spans.
//!
//! Concrete mode works on whole space with exact forms. Symbolic mode
//! tracks only the tower parts of data and solutions on an exterior
//! domain: coefficients are linear expressions in named unknowns, and the
//! square-integrable remainder is an opaque weight tag.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::atlas::Atlas;
use crate::error::{Error, Result};
use crate::expansion::{decompose, expand, MaxwellPair};
use crate::forms::Form;
use crate::harmonic_spaces::SeedProvider;
use crate::index_algebra::{
    in_weighted_l2, is_exceptional_weight, multiplicity, validate_hypotheses, HypothesisInput, TheoremId, WeightedIndexQuery,
};
use crate::scalar::{fmt as rfmt, half, int, Rational};
use crate::towers::{Role, TowerIndex};

/// `E = sum g_J D_{1J}`, `H = sum f_I R_{1I}` for `F = sum f_I D_I`,
/// `G = sum g_J R_J`, so that `rot E = G`, `div H = F`.
pub fn solve_whole_space(atlas: &Atlas, f: &Form, g: &Form, k_max: u32) -> Result<MaxwellPair> {
    let data = MaxwellPair::new(f.clone(), g.clone())?;
    let q = data.rank();
    let n = data.dim();
    let fd = decompose(atlas, f, Role::D, k_max, None)?;
    let gd = decompose(atlas, g, Role::R, k_max, None)?;
    if !fd.residual.is_zero() {
        return Err(Error::NotInSpan(format!("F is not a combination of D towers of rank {q} up to height {k_max}")));
    }
    if !gd.residual.is_zero() {
        return Err(Error::NotInSpan(format!("G is not a combination of R towers of rank {} up to height {k_max}", q + 1)));
    }
    let mut e = Form::zero(n, q);
    let mut h = Form::zero(n, q + 1);
    for (j, c) in &gd.coeffs {
        let d = atlas
            .form(Role::D, q, &j.shift(1)?)?
            .ok_or_else(|| Error::NotInSpan(format!("no D tower form of rank {q} at index {}", j.shift(1).unwrap())))?;
        e.add_scaled(&d, c);
    }
    for (i, c) in &fd.coeffs {
        let r = atlas
            .form(Role::R, q + 1, &i.shift(1)?)?
            .ok_or_else(|| Error::NotInSpan(format!("no R tower form of rank {} at index {}", q + 1, i.shift(1).unwrap())))?;
        h.add_scaled(&r, c);
    }
    let ok = e.rot()? == *g && h.div()? == *f && (q == 0 || e.div()?.is_zero()) && (q + 1 == n || h.rot()?.is_zero());
    if !ok {
        return Err(Error::ConsistencyFailure("whole-space solution violates a Maxwell relation".into()));
    }
    Ok(MaxwellPair { e, h })
}

/// `c + sum a_i x_i` over named unknowns.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    pub constant: Rational,
    pub terms: BTreeMap<String, Rational>,
}

impl LinExpr {
    pub fn constant(c: Rational) -> Self {
        LinExpr { constant: c, terms: BTreeMap::new() }
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.into(), Rational::one());
        LinExpr { constant: Rational::zero(), terms }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }

    pub fn add(&self, o: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.constant += &o.constant;
        for (k, v) in &o.terms {
            let e = out.terms.entry(k.clone()).or_insert_with(Rational::zero);
            *e += v;
            if e.is_zero() {
                out.terms.remove(k);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> LinExpr {
        if c.is_zero() {
            return LinExpr::default();
        }
        LinExpr { constant: &self.constant * c, terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    /// Value with every unknown set to zero.
    pub fn known_part(&self) -> &Rational {
        &self.constant
    }

    /// Parses `"3/2"`, `"x"`, `"2*x + 1 - y/3"`-style sums of `c*name` terms.
    pub fn parse(s: &str) -> Result<LinExpr> {
        let mut out = LinExpr::default();
        let src: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if src.is_empty() {
            return Err(Error::InvalidInput("empty coefficient".into()));
        }
        let mut pieces = Vec::new();
        let mut cur = String::new();
        let mut depth = 0i32;
        for ch in src.chars() {
            match ch {
                '[' => depth += 1,
                ']' => depth -= 1,
                '+' | '-' if depth == 0 && !cur.is_empty() => pieces.push(core::mem::take(&mut cur)),
                _ => {}
            }
            cur.push(ch);
        }
        if depth != 0 {
            return Err(Error::InvalidInput(format!("unbalanced brackets in {s:?}")));
        }
        pieces.push(cur);
        for p in pieces {
            let (neg, body) = match p.strip_prefix('-') {
                Some(b) => (true, b),
                None => (false, p.strip_prefix('+').unwrap_or(&p)),
            };
            let term = if let Some((c, name)) = body.split_once('*') {
                LinExpr::symbol(check_name(name)?).scale(&crate::scalar::parse(c)?)
            } else if body.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
                LinExpr::constant(crate::scalar::parse(body)?)
            } else {
                LinExpr::symbol(check_name(body)?)
            };
            out = out.add(&if neg { term.scale(&int(-1)) } else { term });
        }
        Ok(out)
    }
}

fn check_name(s: &str) -> Result<&str> {
    let stem = s.split_once('[').map_or(s, |(a, _)| a);
    if stem.is_empty() || stem.starts_with(|c: char| c.is_ascii_digit()) || stem.contains(['*', '+', '-', '/', ']']) {
        return Err(Error::InvalidInput(format!("bad unknown name {s:?}")));
    }
    Ok(s)
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if !self.constant.is_zero() || self.terms.is_empty() {
            write!(f, "{}", rfmt(&self.constant))?;
            first = false;
        }
        for (k, v) in &self.terms {
            let neg = v < &Rational::zero();
            let a = if neg { -v.clone() } else { v.clone() };
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if a.is_one() {
                write!(f, "{k}")?;
            } else {
                write!(f, "{}*{k}", rfmt(&a))?;
            }
            first = false;
        }
        Ok(())
    }
}

/// Tower parts of data `F` (`D` side, rank `q`) and `G` (`R` side, rank
/// `q+1`) at weight `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerProfile {
    pub n: usize,
    pub q: usize,
    pub s: Rational,
    pub f_coeffs: BTreeMap<TowerIndex, LinExpr>,
    pub g_coeffs: BTreeMap<TowerIndex, LinExpr>,
    /// Weight of the opaque square-integrable remainder.
    pub l2_weight: Rational,
    /// Number of operator applications so far (names fresh unknowns).
    pub step: u32,
}

impl TowerProfile {
    pub fn new(n: usize, q: usize, s: Rational, f_coeffs: BTreeMap<TowerIndex, LinExpr>, g_coeffs: BTreeMap<TowerIndex, LinExpr>) -> Result<Self> {
        crate::error::check_dimension(n)?;
        if !(1..=n - 2).contains(&q) {
            return Err(Error::InvalidInput(format!("profiles need 1 <= q <= N-2, got q = {q}")));
        }
        let p = TowerProfile { n, q, l2_weight: s.clone(), s, f_coeffs, g_coeffs, step: 0 };
        p.check_invariants()?;
        Ok(p)
    }

    fn check_invariants(&self) -> Result<()> {
        if is_exceptional_weight(&self.s, self.n) {
            return Err(Error::HypothesisViolation(format!("weight {} is exceptional", rfmt(&self.s))));
        }
        for i in self.f_coeffs.keys().chain(self.g_coeffs.keys()) {
            if in_weighted_l2(i, &self.s, self.n) {
                return Err(Error::InvalidInput(format!(
                    "index {i} is square integrable at weight {} and belongs to the remainder",
                    rfmt(&self.s)
                )));
            }
        }
        Ok(())
    }

    /// Checks counting indices against the seed multiplicities.
    pub fn check_counts(&self, p: &dyn SeedProvider) -> Result<()> {
        for (role, rank, map) in [(Role::D, self.q, &self.f_coeffs), (Role::R, self.q + 1, &self.g_coeffs)] {
            for i in map.keys() {
                if i.m as usize > multiplicity(p, self.n, role, rank, i.k, i.sigma)? {
                    return Err(Error::InvalidInput(format!("counting index of {i} exceeds the multiplicity")));
                }
            }
        }
        Ok(())
    }

    /// Largest homogeneity degree among the data indices.
    pub fn h_max(&self) -> Option<i32> {
        self.f_coeffs.keys().chain(self.g_coeffs.keys()).map(|i| i.degree(self.n)).max()
    }
}

fn fresh_name(side: char, step: u32, i: &TowerIndex) -> String {
    format!("{side}{step}[{i}]")
}

/// One application of the generalized operator to a profile.
pub fn apply_l_profile(p: &dyn SeedProvider, prof: &TowerProfile, tau: Option<&Rational>) -> Result<TowerProfile> {
    let input = HypothesisInput { n: prof.n, s: prof.s.clone(), tau: tau.cloned(), j: None, h_max: prof.h_max() };
    validate_hypotheses(TheoremId::GeneralizedProblem, &input)?.into_result()?;
    let s1 = prof.s.clone() - int(1);
    let step = prof.step + 1;
    let mut f = BTreeMap::new();
    let mut g = BTreeMap::new();
    for (j, c) in &prof.g_coeffs {
        f.insert(j.shift(1)?, c.clone());
    }
    for (i, c) in &prof.f_coeffs {
        g.insert(i.shift(1)?, c.clone());
    }
    for i in WeightedIndexQuery::negative(prof.n, prof.q, 0, s1.clone(), Role::D).excluded(p)? {
        let e = f.entry(i).or_insert_with(LinExpr::default);
        *e = e.add(&LinExpr::symbol(fresh_name('e', step, &i)));
    }
    for j in WeightedIndexQuery::negative(prof.n, prof.q + 1, 0, s1.clone(), Role::R).excluded(p)? {
        let e = g.entry(j).or_insert_with(LinExpr::default);
        *e = e.add(&LinExpr::symbol(fresh_name('h', step, &j)));
    }
    let out = TowerProfile { n: prof.n, q: prof.q, s: s1.clone(), f_coeffs: f, g_coeffs: g, l2_weight: prof.l2_weight.clone() - int(1), step };
    Ok(out)
}

/// Upper bound on an admissible target weight `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightBound {
    pub bound: Rational,
    pub strict: bool,
    pub label: String,
}

impl WeightBound {
    pub fn admits(&self, t: &Rational) -> bool {
        if self.strict { t < &self.bound } else { t <= &self.bound }
    }
}

/// Range description of the `j`-th power.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorRangeDescriptor {
    pub j: u32,
    pub target_weight: Rational,
    /// Fresh negative-sign indices at heights `<= j-1` (rank `q`, `D` side).
    pub new_seed_d: Vec<TowerIndex>,
    /// Same on the `R` side (rank `q+1`).
    pub new_seed_r: Vec<TowerIndex>,
    /// Data indices shifted by `j`, sorted into the side they land on.
    pub shifted_d: Vec<TowerIndex>,
    pub shifted_r: Vec<TowerIndex>,
    pub t_bounds: Vec<WeightBound>,
}

impl OperatorRangeDescriptor {
    pub fn admits(&self, t: &Rational) -> bool {
        self.t_bounds.iter().all(|b| b.admits(t))
    }

    /// Supremum of the admissible weights and whether it is excluded.
    pub fn sup(&self) -> Option<(Rational, bool)> {
        let mut best: Option<(Rational, bool)> = None;
        for b in &self.t_bounds {
            best = match best {
                None => Some((b.bound.clone(), b.strict)),
                Some((v, _)) if b.bound < v => Some((b.bound.clone(), b.strict)),
                Some((v, st)) if b.bound == v => Some((v, st || b.strict)),
                keep => keep,
            };
        }
        best
    }

    /// Every retained index fails membership at the target weight and
    /// lies in `L^2_t` for every admissible `t`.
    pub fn retained_consistent(&self, n: usize) -> bool {
        let Some((sup, strict)) = self.sup() else { return true };
        // h < -t - N/2 for all admissible t
        let edge = -sup - half(n);
        self.new_seed_d.iter().chain(&self.new_seed_r).chain(&self.shifted_d).chain(&self.shifted_r).all(|i| {
            let h = int(i.degree(n) as i64);
            !in_weighted_l2(i, &self.target_weight, n) && if strict { h <= edge } else { h < edge }
        })
    }
}

/// `j` applications plus the range descriptor. The descriptor's index sets
/// agree with the keys of the returned profile.
pub fn apply_l_power(p: &dyn SeedProvider, prof: &TowerProfile, j: u32, tau: Option<&Rational>) -> Result<(TowerProfile, OperatorRangeDescriptor)> {
    let n = prof.n;
    let input = HypothesisInput { n, s: prof.s.clone(), tau: tau.cloned(), j: Some(j), h_max: prof.h_max() };
    validate_hypotheses(TheoremId::IteratedOperator, &input)?.into_result()?;
    let mut cur = prof.clone();
    for _ in 0..j {
        cur = apply_l_profile(p, &cur, tau)?;
    }
    let t = prof.s.clone() - int(j as i64);
    let new_seed_d = WeightedIndexQuery::negative(n, prof.q, j - 1, t.clone(), Role::D).excluded(p)?;
    let new_seed_r = WeightedIndexQuery::negative(n, prof.q + 1, j - 1, t.clone(), Role::R).excluded(p)?;
    let shift_all = |m: &BTreeMap<TowerIndex, LinExpr>| m.keys().map(|i| i.shift(j as i32)).collect::<Result<Vec<_>>>();
    let (shifted_d, shifted_r) = if j.is_multiple_of(2) {
        (shift_all(&prof.f_coeffs)?, shift_all(&prof.g_coeffs)?)
    } else {
        (shift_all(&prof.g_coeffs)?, shift_all(&prof.f_coeffs)?)
    };
    let mut t_bounds = alloc::vec![
        WeightBound { bound: t.clone(), strict: false, label: "t <= s - j".into() },
        WeightBound { bound: half(n) - int(j as i64) + int(1), strict: true, label: "t < N/2 - j + 1".into() },
    ];
    if let Some(h) = prof.h_max() {
        t_bounds.push(WeightBound {
            bound: -int(j as i64) - half(n) - int(h as i64),
            strict: true,
            label: "t < -j - N/2 - h_max".into(),
        });
    }
    let desc = OperatorRangeDescriptor { j, target_weight: t, new_seed_d, new_seed_r, shifted_d, shifted_r, t_bounds };
    let want_f: BTreeSet<TowerIndex> = desc.new_seed_d.iter().chain(&desc.shifted_d).copied().collect();
    let want_g: BTreeSet<TowerIndex> = desc.new_seed_r.iter().chain(&desc.shifted_r).copied().collect();
    let got_f: BTreeSet<TowerIndex> = cur.f_coeffs.keys().copied().collect();
    let got_g: BTreeSet<TowerIndex> = cur.g_coeffs.keys().copied().collect();
    if want_f != got_f || want_g != got_g {
        return Err(Error::ConsistencyFailure(format!("index flow after {j} applications differs from the range description")));
    }
    Ok((cur, desc))
}

/// One step of the concrete recursion check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionStep {
    pub step: u32,
    pub e_coeffs: BTreeMap<TowerIndex, Rational>,
    pub h_coeffs: BTreeMap<TowerIndex, Rational>,
    /// `e_{1J} = h_J` and `h_{1I} = e_I` against the previous step.
    pub recursion_ok: bool,
    /// Coefficients equal the shifted data predicted by the profile flow.
    pub prediction_ok: bool,
    /// The independent expansion reproduces the coefficients.
    pub expansion_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursionReport {
    pub steps: Vec<RecursionStep>,
}

impl RecursionReport {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.recursion_ok && s.prediction_ok && s.expansion_ok)
    }
}

fn shifted(m: &BTreeMap<TowerIndex, Rational>, j: i32) -> Result<BTreeMap<TowerIndex, Rational>> {
    m.iter().map(|(i, c)| Ok((i.shift(j)?, c.clone()))).collect()
}

/// Applies the whole-space operator `j + 1` times to `(F, G)` and checks
/// the coefficient recursion between consecutive powers.
pub fn verify_recursion(atlas: &Atlas, f: &Form, g: &Form, j: u32) -> Result<RecursionReport> {
    let k_data = j + 1;
    let f0 = decompose(atlas, f, Role::D, k_data, None)?;
    let g0 = decompose(atlas, g, Role::R, k_data, None)?;
    if !f0.residual.is_zero() || !g0.residual.is_zero() {
        return Err(Error::NotInSpan("recursion data must be combinations of tower forms".into()));
    }
    let max_h = f0.coeffs.keys().chain(g0.coeffs.keys()).map(|i| i.k).max().unwrap_or(0);
    let mut state = MaxwellPair::new(f.clone(), g.clone())?;
    let mut prev: Option<(BTreeMap<TowerIndex, Rational>, BTreeMap<TowerIndex, Rational>)> = None;
    let mut steps = Vec::new();
    for step in 1..=j + 1 {
        state = solve_whole_space(atlas, &state.e, &state.h, max_h + step)?;
        let ed = decompose(atlas, &state.e, Role::D, max_h + step, None)?;
        let hd = decompose(atlas, &state.h, Role::R, max_h + step, None)?;
        let (e_c, h_c) = (ed.coeffs, hd.coeffs);
        let recursion_ok = match &prev {
            None => true,
            Some((pe, ph)) => e_c == shifted(ph, 1)? && h_c == shifted(pe, 1)?,
        };
        let (pe, ph) = if step % 2 == 0 {
            (shifted(&f0.coeffs, step as i32)?, shifted(&g0.coeffs, step as i32)?)
        } else {
            (shifted(&g0.coeffs, step as i32)?, shifted(&f0.coeffs, step as i32)?)
        };
        let prediction_ok = e_c == pe && h_c == ph && ed.residual.is_zero() && hd.residual.is_zero();
        let ex = expand(atlas, &state, max_h + step + 1)?;
        let expansion_ok = ex.in_span()
            && ex.e_coeffs == e_c
            && ex.h_coeffs == h_c
            && ex.e_hat.as_ref().is_none_or(|c| c.is_zero())
            && ex.h_hat.as_ref().is_none_or(|c| c.is_zero());
        steps.push(RecursionStep { step, e_coeffs: e_c.clone(), h_coeffs: h_c.clone(), recursion_ok, prediction_ok, expansion_ok });
        prev = Some((e_c, h_c));
    }
    Ok(RecursionReport { steps })
}

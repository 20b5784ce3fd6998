//! Decomposition of homogeneous solutions of the iterated Maxwell system
//! into tower forms, weighted membership of the result, and the
//! classification of harmonic forms by the integrability of `rot`/`div`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::ansatz::{block_part, form_blocks};
use crate::atlas::Atlas;
use crate::error::{Error, Result};
use crate::forms::{Form, SphereForm};
use crate::index_algebra::{in_weighted_l2, in_weighted_l2_resolved};
use crate::linalg::{determinant, solve_dense, Matrix};
use crate::scalar::{half, int, Rational};
use crate::towers::{exceptional_form, ExceptionalKind, Role, Sign, TowerIndex, TowerRef};

/// `(E, H)`: a `q`-form and a `(q+1)`-form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxwellPair {
    pub e: Form,
    pub h: Form,
}

impl MaxwellPair {
    pub fn new(e: Form, h: Form) -> Result<Self> {
        if e.dim() != h.dim() {
            return Err(Error::DimensionMismatch(format!("E lives in R^{}, H in R^{}", e.dim(), h.dim())));
        }
        if h.grade() != e.grade() + 1 {
            return Err(Error::DimensionMismatch(format!("ranks {} and {} are not consecutive", e.grade(), h.grade())));
        }
        Ok(MaxwellPair { e, h })
    }

    pub fn zero(n: usize, q: usize) -> Self {
        MaxwellPair { e: Form::zero(n, q), h: Form::zero(n, q + 1) }
    }

    pub fn dim(&self) -> usize {
        self.e.dim()
    }

    pub fn rank(&self) -> usize {
        self.e.grade()
    }

    pub fn is_zero(&self) -> bool {
        self.e.is_zero() && self.h.is_zero()
    }

    /// `M(E, H) = (div H, rot E)`.
    pub fn apply_m(&self) -> Result<MaxwellPair> {
        Ok(MaxwellPair { e: self.h.div()?, h: self.e.rot()? })
    }
}

/// `div E = 0`, `rot H = 0` and `M^K (E, H) = 0`.
pub fn iterated_maxwell_check(p: &MaxwellPair, k: u32) -> Result<bool> {
    if k == 0 {
        return Err(Error::InvalidInput("iteration count K must be at least 1".into()));
    }
    let n = p.dim();
    if p.rank() > 0 && !p.e.div()?.is_zero() {
        return Ok(false);
    }
    if p.rank() + 1 < n && !p.h.rot()?.is_zero() {
        return Ok(false);
    }
    let mut cur = p.clone();
    for _ in 0..k {
        if cur.is_zero() {
            return Ok(true);
        }
        cur = cur.apply_m()?;
    }
    Ok(cur.is_zero())
}

/// Coefficients of a form against tower forms of one role and rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub coeffs: BTreeMap<TowerIndex, Rational>,
    /// `None` when no exceptional form was requested or it vanishes.
    pub exceptional: Option<Rational>,
    pub residual: Form,
}

fn gram(forms: &[&Form]) -> Matrix {
    let sph: Vec<SphereForm> = forms.iter().map(|f| SphereForm::of(f)).collect();
    let n = forms.first().map_or(3, |f| f.dim());
    let k = forms.len();
    let mut g = alloc::vec![alloc::vec![Rational::zero(); k]; k];
    for i in 0..k {
        for j in i..k {
            let v = sph[i].pairing(n, &sph[j]);
            g[j][i] = v.clone();
            g[i][j] = v;
        }
    }
    g
}

/// Least-squares fit of one homogeneous piece against equally homogeneous
/// candidates; returns coefficients and adds the misfit to `residual`.
fn fit(piece: &Form, cands: &[&Form], degree: i32, residual: &mut Form) -> Result<Vec<Rational>> {
    if cands.is_empty() {
        residual.add_assign(piece);
        return Ok(Vec::new());
    }
    let g = gram(cands);
    if determinant(&g).is_zero() {
        return Err(Error::ConsistencyFailure(format!("tower forms of degree {degree} are linearly dependent")));
    }
    let sp = SphereForm::of(piece);
    let rhs: Vec<Rational> = cands.iter().map(|c| SphereForm::of(c).pairing(piece.dim(), &sp)).collect();
    let c = solve_dense(&g, &rhs).expect("nonsingular Gram matrix");
    let mut rest = piece.clone();
    for (f, ci) in cands.iter().zip(&c) {
        rest.add_scaled(f, &-ci.clone());
    }
    residual.add_assign(&rest);
    Ok(c)
}

/// Expands `f` in the tower forms of `role` and rank `f.grade()` with
/// height `<= k_max` (both signs), plus an optional exceptional form.
pub fn decompose(atlas: &Atlas, f: &Form, role: Role, k_max: u32, exceptional: Option<&TowerRef>) -> Result<Decomposition> {
    let rank = f.grade();
    let n = f.dim();
    let ex_form = match exceptional {
        Some(r) => atlas.tower_ref(r)?,
        None => None,
    };
    let mut coeffs = BTreeMap::new();
    let mut ex_coeff = ex_form.as_ref().map(|_| Rational::zero());
    let mut residual = Form::zero(n, rank);
    for (h, piece) in f.homogeneity_split().pieces {
        let mut cands = atlas.forms_of_degree(role, rank, h, k_max)?;
        let mut ex_slot = None;
        if let (Some(ef), Some(r)) = (&ex_form, exceptional) {
            let same_as_tower = r.role == role && r.rank == rank && r.k <= k_max;
            if ef.homogeneous_degree() == Some(h) && !same_as_tower {
                ex_slot = Some(cands.len());
                cands.push((r.index(), ef.clone()));
            }
        }
        let blocks: Vec<BTreeSet<u32>> = cands.iter().map(|(_, c)| form_blocks(c)).collect();
        let single = blocks.iter().all(|b| b.len() == 1);
        let mut groups: BTreeMap<Option<u32>, Vec<usize>> = BTreeMap::new();
        for (i, b) in blocks.iter().enumerate() {
            let key = if single { b.iter().next().copied() } else { None };
            groups.entry(key).or_default().push(i);
        }
        let mut covered = BTreeSet::new();
        for (key, members) in &groups {
            let part = match key {
                Some(v) => {
                    covered.insert(*v);
                    block_part(&piece, *v)
                }
                None => piece.clone(),
            };
            let fs: Vec<&Form> = members.iter().map(|&i| &cands[i].1).collect();
            let c = fit(&part, &fs, h, &mut residual)?;
            for (&i, ci) in members.iter().zip(c) {
                if Some(i) == ex_slot {
                    ex_coeff = Some(ci);
                } else if !ci.is_zero() {
                    coeffs.insert(cands[i].0, ci);
                }
            }
        }
        if single {
            for v in form_blocks(&piece) {
                if !covered.contains(&v) {
                    residual.add_assign(&block_part(&piece, v));
                }
            }
        }
    }
    Ok(Decomposition { coeffs, exceptional: ex_coeff, residual })
}

/// Tower coefficients of a solution of the iterated Maxwell system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionResult {
    pub n: usize,
    pub q: usize,
    pub k: u32,
    pub e_coeffs: BTreeMap<TowerIndex, Rational>,
    pub h_coeffs: BTreeMap<TowerIndex, Rational>,
    /// Absent when the exceptional form vanishes.
    pub e_hat: Option<Rational>,
    pub h_hat: Option<Rational>,
    pub e_hat_form: Option<TowerRef>,
    pub h_hat_form: Option<TowerRef>,
    pub residual: MaxwellPair,
}

impl ExpansionResult {
    pub fn in_span(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Expands `(E, H)` in tower forms of height `<= K - 1` plus the
/// exceptional forms of level `K`.
pub fn expand(atlas: &Atlas, p: &MaxwellPair, k: u32) -> Result<ExpansionResult> {
    if p.dim() != atlas.dim() {
        return Err(Error::DimensionMismatch(format!("pair in R^{}, towers in R^{}", p.dim(), atlas.dim())));
    }
    if !iterated_maxwell_check(p, k)? {
        return Err(Error::InvalidInput(format!("input does not solve the {k}-fold iterated Maxwell system")));
    }
    let (n, q) = (p.dim(), p.rank());
    let dh = exceptional_form(ExceptionalKind::DHat, n, q, k, None)?;
    let rh = exceptional_form(ExceptionalKind::RHat, n, q, k, None)?;
    let de = decompose(atlas, &p.e, Role::D, k - 1, dh.value.as_ref())?;
    let he = decompose(atlas, &p.h, Role::R, k - 1, rh.value.as_ref())?;
    Ok(ExpansionResult {
        n,
        q,
        k,
        e_coeffs: de.coeffs,
        h_coeffs: he.coeffs,
        e_hat_form: dh.value.filter(|_| de.exceptional.is_some()),
        h_hat_form: rh.value.filter(|_| he.exceptional.is_some()),
        e_hat: de.exceptional,
        h_hat: he.exceptional,
        residual: MaxwellPair { e: de.residual, h: he.residual },
    })
}

/// Sum of coefficient times form, exceptional terms and residual.
pub fn reconstruct(atlas: &Atlas, res: &ExpansionResult) -> Result<MaxwellPair> {
    let mut out = res.residual.clone();
    for (role, coeffs, target, rank) in [
        (Role::D, &res.e_coeffs, 0usize, res.q),
        (Role::R, &res.h_coeffs, 1, res.q + 1),
    ] {
        for (i, c) in coeffs {
            let f = atlas
                .form(role, rank, i)?
                .ok_or_else(|| Error::ConsistencyFailure(format!("coefficient on missing tower form {i}")))?;
            if target == 0 { &mut out.e } else { &mut out.h }.add_scaled(&f, c);
        }
    }
    for (r, c, target) in [(&res.e_hat_form, &res.e_hat, 0), (&res.h_hat_form, &res.h_hat, 1)] {
        if let (Some(r), Some(c)) = (r, c) {
            if let Some(f) = atlas.tower_ref(r)? {
                if target == 0 { &mut out.e } else { &mut out.h }.add_scaled(&f, c);
            }
        }
    }
    Ok(out)
}

/// Weighted membership of an expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipReport {
    pub s: Rational,
    pub m: u32,
    /// Nonzero terms that are not square integrable with weight `s`.
    pub offending: Vec<(Role, TowerIndex)>,
    /// The sign-resolved criterion agrees with the degree criterion on
    /// every term.
    pub resolved_agrees: bool,
    /// The residual was zero, so the verdict covers the whole input.
    pub complete: bool,
}

impl MembershipReport {
    pub fn in_space(&self) -> bool {
        self.offending.is_empty() && self.complete
    }
}

/// Lists nonzero terms with `h >= -s - N/2`; all derivatives behave the
/// same, so `m` only labels the report.
pub fn membership_filter(res: &ExpansionResult, s: &Rational, m: u32) -> MembershipReport {
    let n = res.n;
    let mut offending = Vec::new();
    let mut agrees = true;
    let mut terms: Vec<(Role, TowerIndex)> = Vec::new();
    terms.extend(res.e_coeffs.iter().filter(|(_, c)| !c.is_zero()).map(|(i, _)| (Role::D, *i)));
    terms.extend(res.h_coeffs.iter().filter(|(_, c)| !c.is_zero()).map(|(i, _)| (Role::R, *i)));
    for (r, c) in [(&res.e_hat_form, &res.e_hat), (&res.h_hat_form, &res.h_hat)] {
        if let (Some(r), Some(c)) = (r, c) {
            if !c.is_zero() {
                terms.push((r.role, r.index()));
            }
        }
    }
    for (role, i) in terms {
        let a = in_weighted_l2(&i, s, n);
        agrees &= a == in_weighted_l2_resolved(&i, s, n);
        if !a {
            offending.push((role, i));
        }
    }
    MembershipReport { s: s.clone(), m, offending, resolved_agrees: agrees, complete: res.residual.is_zero() }
}

/// Representation class of the non-integrable part of a harmonic form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarmonicBranch {
    /// `rot E` integrable: `R` floors `<= 1` plus the checked `R` form of level 2.
    RType,
    /// `div E` integrable: `D` floors `<= 1` plus the checked `D` form of level 2.
    DType,
    /// both integrable: floor 0 plus the checked `D` form of level 1.
    FloorZero,
    /// neither: no tower representation.
    Potential,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrabilityFlags {
    /// `rot E` in `L^2_{s+1}`; computed from the degrees when `None`.
    pub rot_ok: Option<bool>,
    pub div_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HarmonicClassification {
    pub branch: HarmonicBranch,
    pub rot_ok: bool,
    pub div_ok: bool,
    /// Homogeneous pieces of degree `>= -s - N/2`.
    pub non_integrable: Form,
    pub coeffs: BTreeMap<TowerIndex, Rational>,
    pub exceptional_form: Option<TowerRef>,
    pub exceptional: Option<Rational>,
    /// Part of `non_integrable` the branch could not represent.
    pub residual: Form,
    /// Terms with positive sign (not expected for these weights).
    pub positive_terms: Vec<TowerIndex>,
}

fn all_pieces_below(f: &Form, bound: &Rational) -> bool {
    f.homogeneity_split().pieces.keys().all(|h| &int(*h as i64) < bound)
}

/// Classifies a harmonic `q`-form by which of `rot E`, `div E` lie in
/// `L^2_{s+1}` and expands its non-`L^2_s` part accordingly.
pub fn classify_harmonic(atlas: &Atlas, e: &Form, s: &Rational, flags: IntegrabilityFlags) -> Result<HarmonicClassification> {
    let n = e.dim();
    let q = e.grade();
    if n != atlas.dim() {
        return Err(Error::DimensionMismatch(format!("form in R^{n}, towers in R^{}", atlas.dim())));
    }
    if !e.laplacian().is_zero() {
        return Err(Error::InvalidInput("form is not harmonic".into()));
    }
    let bound_s1 = -(s.clone() + int(1)) - half(n);
    let rot_ok = match flags.rot_ok {
        Some(v) => v,
        None => q == n || all_pieces_below(&e.rot()?, &bound_s1),
    };
    let div_ok = match flags.div_ok {
        Some(v) => v,
        None => q == 0 || all_pieces_below(&e.div()?, &bound_s1),
    };
    let bound_s = -s.clone() - half(n);
    let mut non_integrable = Form::zero(n, q);
    for (h, piece) in e.homogeneity_split().pieces {
        if int(h as i64) >= bound_s {
            non_integrable.add_assign(&piece);
        }
    }
    let branch = match (rot_ok, div_ok) {
        (true, true) => HarmonicBranch::FloorZero,
        (true, false) => HarmonicBranch::RType,
        (false, true) => HarmonicBranch::DType,
        (false, false) => HarmonicBranch::Potential,
    };
    let (role, k_max, ex) = match branch {
        HarmonicBranch::FloorZero => (Role::D, 0, Some(exceptional_form(ExceptionalKind::DCheckWeighted, n, q, 1, Some(s))?)),
        HarmonicBranch::DType => (Role::D, 1, Some(exceptional_form(ExceptionalKind::DCheckWeighted, n, q, 2, Some(s))?)),
        HarmonicBranch::RType => {
            let ex = match q.checked_sub(1) {
                Some(qm) => Some(exceptional_form(ExceptionalKind::RCheckWeighted, n, qm, 2, Some(s))?),
                None => None,
            };
            (Role::R, 1, ex)
        }
        HarmonicBranch::Potential => {
            return Ok(HarmonicClassification {
                branch,
                rot_ok,
                div_ok,
                residual: non_integrable.clone(),
                non_integrable,
                coeffs: BTreeMap::new(),
                exceptional_form: None,
                exceptional: None,
                positive_terms: Vec::new(),
            });
        }
    };
    let ex_ref = ex.and_then(|d| d.value);
    let d = decompose(atlas, &non_integrable, role, k_max, ex_ref.as_ref())?;
    let positive_terms = d.coeffs.keys().filter(|i| i.sign == Sign::Plus).copied().collect();
    Ok(HarmonicClassification {
        branch,
        rot_ok,
        div_ok,
        non_integrable,
        coeffs: d.coeffs,
        exceptional_form: ex_ref.filter(|_| d.exceptional.is_some()),
        exceptional: d.exceptional,
        residual: d.residual,
        positive_terms,
    })
}

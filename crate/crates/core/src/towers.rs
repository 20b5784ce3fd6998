//! Tower families: homogeneous forms linked by `rot` and `div`.
//!
//! A family `(q, sign, sigma)` has `D` floors (`q`-forms) and `R` floors
//! (`(q+1)`-forms). Floor 0 holds closed and coclosed seeds; floor `k >= 1`
//! is obtained by lifting floor `k-1`:
//!
//! * `D[k][m]` is the unique degree-`h(k)` form with `rot D[k][m] = R[k-1][m]`,
//!   `div D[k][m] = 0`, sphere-orthogonal to the degree-`h(k)` seeds;
//! * `R[k][m]` likewise with `div R[k][m] = D[k-1][m]`, `rot R[k][m] = 0`.
//!
//! Even `D` floors and odd `R` floors descend from the `D` seeds, the others
//! from the `R` seeds. When a floor-0 seed space is empty at an extreme rank
//! (negative sign, rank 0 or `N`), floor 1 of that chain starts directly from
//! the seeds of degree `h(1)`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::ansatz::{self, block_part, form_blocks, Target};
use crate::error::{check_dimension, Error, Result};
use crate::forms::{Form, SphereForm};
use crate::harmonic_spaces::{mu, SeedProvider};
use crate::linalg::rank;
use crate::scalar::{frac, int, Rational};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn negate(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn parse(s: &str) -> Result<Sign> {
        match s.trim() {
            "+" | "plus" | "p" => Ok(Sign::Plus),
            "-" | "minus" | "m" => Ok(Sign::Minus),
            other => Err(Error::InvalidInput(format!("unknown sign {other:?}"))),
        }
    }

    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

/// `k + sigma` for `+`, `k - sigma - N` for `-`.
pub fn homogeneity_degree(n: usize, sign: Sign, k: u32, sigma: u32) -> i32 {
    match sign {
        Sign::Plus => k as i32 + sigma as i32,
        Sign::Minus => k as i32 - sigma as i32 - n as i32,
    }
}

/// Index `(sign, height k, eigenvalue index sigma, counting index m >= 1)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TowerIndex {
    pub sign: Sign,
    pub k: u32,
    pub sigma: u32,
    pub m: u32,
}

impl TowerIndex {
    pub fn new(sign: Sign, k: u32, sigma: u32, m: u32) -> Self {
        TowerIndex { sign, k, sigma, m }
    }

    pub fn degree(&self, n: usize) -> i32 {
        homogeneity_degree(n, self.sign, self.k, self.sigma)
    }

    /// `jI = (sign, k + j, sigma, m)`.
    pub fn shift(&self, j: i32) -> Result<TowerIndex> {
        let k = self.k as i64 + j as i64;
        if k < 0 {
            return Err(Error::NegativeHeight);
        }
        Ok(TowerIndex { k: k as u32, ..*self })
    }

    /// `-I = (-sign, k, sigma, m)`.
    pub fn negate(&self) -> TowerIndex {
        TowerIndex { sign: self.sign.negate(), ..*self }
    }

    /// Parses `"+,k,sigma,m"`.
    pub fn parse(s: &str) -> Result<TowerIndex> {
        let bad = || Error::InvalidInput(format!("malformed tower index {s:?}"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let num = |t: &str| t.parse::<u32>().map_err(|_| bad());
        let idx = TowerIndex::new(Sign::parse(parts[0])?, num(parts[1])?, num(parts[2])?, num(parts[3])?);
        if idx.m == 0 {
            return Err(bad());
        }
        Ok(idx)
    }
}

impl fmt::Display for TowerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.sign.symbol(), self.k, self.sigma, self.m)
    }
}

/// Whether an index addresses a `D` form (rank `q`, family `q`) or an `R`
/// form (rank `q`, family `q - 1`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Role {
    D,
    R,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::D => "D",
            Role::R => "R",
        })
    }
}

/// Coefficient of the explicit eigenform representation, by its recursion.
pub fn alpha(sign: Sign, q: usize, sigma: u32, k: u32, n: usize) -> Result<Rational> {
    let mut a = match sign {
        Sign::Minus => Rational::one(),
        Sign::Plus => {
            let e = 1 + (q == 0) as i64 + (q == n) as i64;
            frac(if e % 2 == 0 { 1 } else { -1 }, 2 * sigma as i64 + n as i64)
        }
    };
    for j in 1..=k as i64 {
        let s = if sign == Sign::Plus { 1 } else { -1 };
        let inner = 2 * j + s * (2 * sigma as i64 + n as i64);
        if inner == 0 {
            return Err(Error::UnsupportedDimension(n));
        }
        a /= int(2 * j * inner);
    }
    Ok(a)
}

/// `Gamma(x)` for `x` an integer or half-integer, as `(c, has_sqrt_pi)` with
/// `Gamma(x) = c` or `c * sqrt(pi)`. Poles give `None`.
pub fn gamma_half_integer(x: &Rational) -> Option<(Rational, bool)> {
    let two_x = x * int(2);
    if !two_x.is_integer() {
        return None;
    }
    let (mut cur, mut val, sqrt_pi) = if x.is_integer() {
        if *x <= Rational::zero() {
            return None;
        }
        (int(1), int(1), false)
    } else {
        (frac(1, 2), int(1), true)
    };
    while &cur < x {
        val *= &cur;
        cur += int(1);
    }
    while &cur > x {
        cur -= int(1);
        val /= &cur;
    }
    Some((val, sqrt_pi))
}

/// The same coefficient from its Gamma-ratio closed form.
pub fn alpha_closed_form(sign: Sign, q: usize, sigma: u32, k: u32, n: usize) -> Result<Rational> {
    let half_n = frac(n as i64, 2);
    let s = int(sigma as i64);
    let (a, b) = match sign {
        Sign::Plus => (int(1) + &half_n + &s, int(k as i64 + 1) + &half_n + &s),
        Sign::Minus => (int(1) - &half_n - &s, int(k as i64 + 1) - &half_n - &s),
    };
    let (ga, pa) = gamma_half_integer(&a).ok_or(Error::UnsupportedDimension(n))?;
    let (gb, pb) = gamma_half_integer(&b).ok_or(Error::UnsupportedDimension(n))?;
    debug_assert_eq!(pa, pb);
    let mut denom = BigInt::one();
    for j in 1..=k as u64 {
        denom *= 4u64 * j;
    }
    let ratio = ga / gb / Rational::from_integer(denom);
    Ok(match sign {
        Sign::Minus => ratio,
        Sign::Plus => {
            let e = 1 + (q == 0) as i64 + (q == n) as i64;
            ratio * frac(if e % 2 == 0 { 1 } else { -1 }, 2 * sigma as i64 + n as i64)
        }
    })
}

/// A constructed tower family.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerFamily {
    pub n: usize,
    pub q: usize,
    pub sign: Sign,
    pub sigma: u32,
    /// `(q + sigma)(N - q + sigma)`, the square of the sphere eigenvalue.
    pub omega_sq: Rational,
    pub d_floors: Vec<Vec<Form>>,
    pub r_floors: Vec<Vec<Form>>,
}

impl TowerFamily {
    pub fn floors(&self) -> u32 {
        self.d_floors.len().saturating_sub(1) as u32
    }

    pub fn degree(&self, k: u32) -> i32 {
        homogeneity_degree(self.n, self.sign, k, self.sigma)
    }

    pub fn floor(&self, role: Role, k: u32) -> &[Form] {
        let f = match role {
            Role::D => &self.d_floors,
            Role::R => &self.r_floors,
        };
        f.get(k as usize).map_or(&[], |v| v.as_slice())
    }

    /// Form at floor `k`, counting index `m >= 1`.
    pub fn form(&self, role: Role, k: u32, m: u32) -> Option<&Form> {
        self.floor(role, k).get((m as usize).checked_sub(1)?)
    }

    /// Whether floor 0 of the chain feeding `(role, k)` is an empty extreme seed space.
    pub fn chain_starts_late(&self, role: Role, k: u32) -> bool {
        let from_d_seeds = (role == Role::D) == k.is_multiple_of(2);
        let start = if from_d_seeds { &self.d_floors } else { &self.r_floors };
        start.first().is_some_and(|f| f.is_empty()) && self.expected_count(role, k) > 0
    }

    /// Nominal number of forms on floor `k` (`mu^q` or `mu^(q+1)`), before
    /// the extreme-rank adjustments. Stored as metadata by the builder.
    fn expected_count(&self, role: Role, k: u32) -> usize {
        let (md, mr) = self.nominal_mu();
        let from_d_seeds = (role == Role::D) == k.is_multiple_of(2);
        if from_d_seeds { md } else { mr }
    }

    /// `(mu^q, mu^(q+1))` as recorded on the longest floors.
    fn nominal_mu(&self) -> (usize, usize) {
        let mut md = 0;
        let mut mr = 0;
        for k in 0..=self.floors() {
            let (d, r) = (self.floor(Role::D, k).len(), self.floor(Role::R, k).len());
            if k % 2 == 0 {
                md = md.max(d);
                mr = mr.max(r);
            } else {
                mr = mr.max(d);
                md = md.max(r);
            }
        }
        (md, mr)
    }

    /// Short label `(q=1,-,σ=0)`.
    pub fn label(&self) -> String {
        format!("(q={},{},σ={})", self.q, self.sign.symbol(), self.sigma)
    }
}

fn parity_split(f: &Form) -> Vec<Form> {
    let mut out = [Form::zero(f.dim(), f.grade()), Form::zero(f.dim(), f.grade())];
    for (b, c) in f.components() {
        for p in c.parts() {
            let e = crate::ring::RadialRingElement::from_r_poly(f.dim(), p.r_exp(), p.poly().clone()).unwrap();
            out[p.r_exp().rem_euclid(2) as usize].add_component(*b, &e);
        }
    }
    out.into_iter().filter(|x| !x.is_zero()).collect()
}

/// Lifts `target` through `rot` (`via_rot`) or `div`: finds the degree-`h`
/// form `X` of rank `grade` with `rot X = target, div X = 0` (resp.
/// `div X = target, rot X = 0`) orthogonal to the degree-`h` seeds.
pub fn lift(p: &dyn SeedProvider, target: &Form, grade: usize, h: i32, via_rot: bool) -> Result<Form> {
    let n = target.dim();
    let mut out = Form::zero(n, grade);
    for v in form_blocks(target) {
        let tv = block_part(target, v);
        let only: BTreeSet<u32> = core::iter::once(v).collect();
        for piece in parity_split(&tv) {
            let parity = piece.components().next().unwrap().1.parts().next().unwrap().r_exp().rem_euclid(2);
            let e_target = piece
                .components()
                .flat_map(|(_, c)| c.parts().map(|p| p.poly_degree()).collect::<Vec<_>>())
                .max()
                .unwrap_or(0);
            let mut e = e_target.saturating_sub(1);
            if (h - e as i32 - parity).rem_euclid(2) != 0 {
                e += 1;
            }
            let (rot, div) = if via_rot {
                (Target::Form(&piece), if grade > 0 { Target::Zero } else { Target::Skip })
            } else {
                (if grade < n { Target::Zero } else { Target::Skip }, Target::Form(&piece))
            };
            let cap = e + 8;
            let particular = loop {
                if let Some(res) = ansatz::solve(n, grade, h, e, rot, div, Some(&only))? {
                    break res.into_iter().map(|r| r.particular).fold(Form::zero(n, grade), |a, b| a.add(&b));
                }
                e += 2;
                if e > cap {
                    return Err(Error::ConstructionFailure(format!(
                        "no degree-{h} rank-{grade} lift found up to polynomial depth {cap}"
                    )));
                }
            };
            let seeds = p.seed_block(n, grade, h, v)?;
            out.add_assign(&seeds.project_out(&particular));
        }
    }
    Ok(out)
}

fn seed_floor(p: &dyn SeedProvider, n: usize, grade: usize, h: i32, expected: usize) -> Result<Vec<Form>> {
    if grade > n || expected == 0 {
        return Ok(Vec::new());
    }
    let s = p.seed_space(n, grade, h)?;
    Ok(s.basis.clone())
}

/// Builds floors `0..=floors` of the family `(q, sign, sigma)`.
pub fn build_tower_pair(p: &dyn SeedProvider, n: usize, q: usize, sign: Sign, sigma: u32, floors: u32) -> Result<TowerFamily> {
    check_dimension(n)?;
    if q > n {
        return Err(Error::GradeOverflow { q, n });
    }
    let mu_d = mu(p, n, q, sigma)?;
    let mu_r = if q < n { mu(p, n, q + 1, sigma)? } else { 0 };
    if mu_d + mu_r == 0 {
        return Err(Error::InvalidInput(format!("family (N={n}, q={q}, sigma={sigma}) is empty")));
    }
    let h = |k: u32| homogeneity_degree(n, sign, k, sigma);
    let d0 = seed_floor(p, n, q, h(0), mu_d)?;
    let r0 = if q < n { seed_floor(p, n, q + 1, h(0), mu_r)? } else { Vec::new() };
    let extreme_ok = |len: usize, want: usize, grade: usize| len == want || (len == 0 && sign == Sign::Minus && (grade == 0 || grade == n));
    if !extreme_ok(d0.len(), mu_d, q) || (q < n && !extreme_ok(r0.len(), mu_r, q + 1)) {
        return Err(Error::ConsistencyFailure(format!(
            "floor-0 seed counts ({}, {}) differ from ({mu_d}, {mu_r})",
            d0.len(),
            r0.len()
        )));
    }
    let mut d_floors = alloc::vec![d0];
    let mut r_floors = alloc::vec![r0];
    for k in 1..=floors {
        let hk = h(k);
        let nominal_from_r = if (k - 1) % 2 == 0 { mu_r } else { mu_d };
        let nominal_from_d = if (k - 1) % 2 == 0 { mu_d } else { mu_r };
        let dk = if q == n {
            Vec::new()
        } else {
            let src = &r_floors[(k - 1) as usize];
            if src.is_empty() && k == 1 && nominal_from_r > 0 {
                let s = p.seed_space(n, q, hk)?;
                if s.dim() != nominal_from_r {
                    return Err(Error::ConsistencyFailure(format!(
                        "late-start seeds at degree {hk} have dimension {} instead of {nominal_from_r}",
                        s.dim()
                    )));
                }
                s.basis.clone()
            } else {
                src.iter().map(|t| lift(p, t, q, hk, true)).collect::<Result<Vec<_>>>()?
            }
        };
        let rk = if q == n {
            Vec::new()
        } else {
            let src = &d_floors[(k - 1) as usize];
            if src.is_empty() && k == 1 && nominal_from_d > 0 {
                let s = p.seed_space(n, q + 1, hk)?;
                if s.dim() != nominal_from_d {
                    return Err(Error::ConsistencyFailure(format!(
                        "late-start seeds at degree {hk} have dimension {} instead of {nominal_from_d}",
                        s.dim()
                    )));
                }
                s.basis.clone()
            } else {
                src.iter().map(|t| lift(p, t, q + 1, hk, false)).collect::<Result<Vec<_>>>()?
            }
        };
        d_floors.push(dk);
        r_floors.push(rk);
    }
    let omega_sq = int((q as i64 + sigma as i64) * (n as i64 - q as i64 + sigma as i64));
    Ok(TowerFamily { n, q, sign, sigma, omega_sq, d_floors, r_floors })
}

/// Relation checked by `verify_family`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Relation {
    /// `rot D[0] = 0`
    GroundClosed,
    /// `div R[0] = 0`
    GroundCoclosed,
    /// `div D[k] = 0`
    DivergenceFree,
    /// `rot R[k] = 0`
    CurlFree,
    /// `rot D[k] = R[k-1]`
    RotLadder,
    /// `div R[k] = D[k-1]`
    DivLadder,
    /// floor-`k` forms homogeneous of degree `h(k)`
    Homogeneity,
    /// floor sizes match `mu`
    FloorCount,
    /// lifted floors orthogonal to seeds of equal degree
    SeedOrthogonality,
    /// ground floor linearly independent
    GroundIndependence,
}

impl Relation {
    pub fn name(&self) -> &'static str {
        match self {
            Relation::GroundClosed => "rot D[0] = 0",
            Relation::GroundCoclosed => "div R[0] = 0",
            Relation::DivergenceFree => "div D[k] = 0",
            Relation::CurlFree => "rot R[k] = 0",
            Relation::RotLadder => "rot D[k] = R[k-1]",
            Relation::DivLadder => "div R[k] = D[k-1]",
            Relation::Homogeneity => "homogeneity of degree h(k)",
            Relation::FloorCount => "floor size equals mu",
            Relation::SeedOrthogonality => "sphere-orthogonality to same-degree seeds",
            Relation::GroundIndependence => "linear independence of floor 0",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Place where a check applies.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Location {
    pub q: usize,
    pub sign: Sign,
    pub sigma: u32,
    pub role: Role,
    pub k: u32,
    /// Counting index, `None` for whole-floor checks.
    pub m: Option<u32>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(q={},{},σ={},{}[{}]", self.q, self.sign.symbol(), self.sigma, self.role, self.k)?;
        if let Some(m) = self.m {
            write!(f, ",m={m}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub relation: Relation,
    pub location: Location,
    pub passed: bool,
    pub detail: Option<String>,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            write!(f, "ok   {} at {}", self.relation, self.location)
        } else {
            write!(f, "FAIL {} residual nonzero at {}", self.relation, self.location)?;
            if let Some(d) = &self.detail {
                write!(f, ": {d}")?;
            }
            Ok(())
        }
    }
}

/// Expected floor sizes for a family, given the seed dimensions.
pub fn expected_floor_sizes(p: &dyn SeedProvider, fam: &TowerFamily) -> Result<Vec<(usize, usize)>> {
    let (n, q) = (fam.n, fam.q);
    let mu_d = mu(p, n, q, fam.sigma)?;
    let mu_r = if q < n { mu(p, n, q + 1, fam.sigma)? } else { 0 };
    let minus = fam.sign == Sign::Minus;
    let mut out = Vec::new();
    for k in 0..=fam.floors() {
        let (mut d, mut r) = if k % 2 == 0 { (mu_d, mu_r) } else { (mu_r, mu_d) };
        if q == n {
            r = 0;
            if k > 0 {
                d = 0;
            }
        }
        if k == 0 && minus {
            if q == 0 || q == n {
                d = 0;
            }
            if q + 1 == n {
                r = 0;
            }
        }
        out.push((d, r));
    }
    Ok(out)
}

/// Re-checks every relation of a family with exact arithmetic.
pub fn verify_family(p: &dyn SeedProvider, fam: &TowerFamily) -> Result<Vec<CheckResult>> {
    let (n, q) = (fam.n, fam.q);
    let mut out = Vec::new();
    let loc = |role: Role, k: u32, m: Option<u32>| Location { q, sign: fam.sign, sigma: fam.sigma, role, k, m };
    let mut push = |relation: Relation, location: Location, passed: bool, detail: Option<String>| {
        out.push(CheckResult { relation, location, passed, detail });
    };
    let sizes = expected_floor_sizes(p, fam)?;
    if fam.d_floors.len() != fam.r_floors.len() {
        push(Relation::FloorCount, loc(Role::R, 0, None), false, Some("D and R floor lists differ in length".into()));
        return Ok(out);
    }
    for k in 0..=fam.floors() {
        let (wd, wr) = sizes[k as usize];
        let gd = fam.floor(Role::D, k).len();
        let gr = fam.floor(Role::R, k).len();
        push(Relation::FloorCount, loc(Role::D, k, None), gd == wd, (gd != wd).then(|| format!("{gd} forms, expected {wd}")));
        push(Relation::FloorCount, loc(Role::R, k, None), gr == wr, (gr != wr).then(|| format!("{gr} forms, expected {wr}")));
    }
    let hk = |k: u32| fam.degree(k);
    for k in 0..=fam.floors() {
        for (role, grade) in [(Role::D, q), (Role::R, q + 1)] {
            for (mi, f) in fam.floor(role, k).iter().enumerate() {
                let m = mi as u32 + 1;
                let l = loc(role, k, Some(m));
                if f.dim() != n || f.grade() != grade {
                    push(Relation::Homogeneity, l, false, Some("wrong rank or dimension".into()));
                    continue;
                }
                let deg = f.homogeneous_degree();
                let hom_ok = deg == Some(hk(k)) || f.is_zero();
                push(Relation::Homogeneity, l.clone(), hom_ok, (!hom_ok).then(|| format!("degree {deg:?}")));
                // closedness / coclosedness of the whole tower
                match role {
                    Role::D => {
                        if grade > 0 {
                            push(Relation::DivergenceFree, l.clone(), f.div()?.is_zero(), None);
                        }
                        if grade < n {
                            let r = f.rot()?;
                            if k == 0 {
                                push(Relation::GroundClosed, l.clone(), r.is_zero(), None);
                            } else {
                                let want = fam.form(Role::R, k - 1, m).cloned().unwrap_or_else(|| Form::zero(n, grade + 1));
                                push(Relation::RotLadder, l.clone(), r == want, None);
                            }
                        }
                    }
                    Role::R => {
                        if grade < n {
                            push(Relation::CurlFree, l.clone(), f.rot()?.is_zero(), None);
                        }
                        let d = f.div()?;
                        if k == 0 {
                            push(Relation::GroundCoclosed, l.clone(), d.is_zero(), None);
                        } else {
                            let want = fam.form(Role::D, k - 1, m).cloned().unwrap_or_else(|| Form::zero(n, grade - 1));
                            push(Relation::DivLadder, l.clone(), d == want, None);
                        }
                    }
                }
                if k >= 1 && !fam.chain_starts_late(role, k) {
                    let mut ok = true;
                    let sf = SphereForm::of(f);
                    for v in form_blocks(f) {
                        let seeds = p.seed_block(n, grade, hk(k), v)?;
                        if seeds.basis.iter().any(|s| !SphereForm::of(s).pairing(n, &sf).is_zero()) {
                            ok = false;
                        }
                    }
                    push(Relation::SeedOrthogonality, l, ok, None);
                }
            }
        }
    }
    // the lower ladder relation must also hold where the upper floor is missing
    for k in 1..=fam.floors() {
        for (role, other) in [(Role::D, Role::R), (Role::R, Role::D)] {
            let upper = fam.floor(role, k).len();
            let lower = fam.floor(other, k - 1).len();
            if lower > upper && !(q == n && role == Role::D) && !(role == Role::R && q == n) {
                let rel = if role == Role::D { Relation::RotLadder } else { Relation::DivLadder };
                push(rel, loc(other, k - 1, None), false, Some(format!("{lower} forms below but only {upper} lifts")));
            }
        }
    }
    for role in [Role::D, Role::R] {
        let ground = fam.floor(role, 0);
        if ground.is_empty() {
            continue;
        }
        let g = crate::harmonic_spaces::gram_matrix(ground);
        let ok = rank(&g) == ground.len();
        push(Relation::GroundIndependence, loc(role, 0, None), ok, None);
    }
    Ok(out)
}

/// Laplacians of the floors: zero on floors 0 and 1.
#[derive(Clone, Debug, Default)]
pub struct HarmonicityReport {
    /// Low-floor forms with nonzero Laplacian (should be empty).
    pub low_floor_failures: Vec<Location>,
    /// Floors >= 2 with nonzero Laplacian (informational).
    pub nonharmonic_higher: Vec<Location>,
    /// Floors >= 2 that happen to be harmonic.
    pub harmonic_higher: Vec<Location>,
}

impl HarmonicityReport {
    pub fn passed(&self) -> bool {
        self.low_floor_failures.is_empty()
    }
}

pub fn verify_low_floor_harmonicity(fam: &TowerFamily) -> HarmonicityReport {
    let mut rep = HarmonicityReport::default();
    for k in 0..=fam.floors() {
        for role in [Role::D, Role::R] {
            for (mi, f) in fam.floor(role, k).iter().enumerate() {
                let l = Location { q: fam.q, sign: fam.sign, sigma: fam.sigma, role, k, m: Some(mi as u32 + 1) };
                let zero = f.laplacian().is_zero();
                match (k <= 1, zero) {
                    (true, false) => rep.low_floor_failures.push(l),
                    (false, false) => rep.nonharmonic_higher.push(l),
                    (false, true) => rep.harmonic_higher.push(l),
                    _ => {}
                }
            }
        }
    }
    rep
}

/// Radial structure of odd floors.
#[derive(Clone, Debug, Default)]
pub struct OddFloorReport {
    /// Violations: odd `D` with nonzero contraction by the Euler field, odd
    /// `R` with nonzero wedge by the Euler form, or a radial multiple that
    /// breaks `div`/`rot`.
    pub failures: Vec<(Location, String)>,
    /// Even `D` floors whose contraction is nonzero (generic behaviour).
    pub even_with_normal_part: Vec<Location>,
}

impl OddFloorReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify_odd_floor_structure(fam: &TowerFamily) -> Result<OddFloorReport> {
    let mut rep = OddFloorReport::default();
    let n = fam.n;
    for k in 0..=fam.floors() {
        for role in [Role::D, Role::R] {
            for (mi, f) in fam.floor(role, k).iter().enumerate() {
                let l = Location { q: fam.q, sign: fam.sign, sigma: fam.sigma, role, k, m: Some(mi as u32 + 1) };
                match (role, k % 2 == 1) {
                    (Role::D, true) => {
                        if f.grade() > 0 && !f.t_op()?.is_zero() {
                            rep.failures.push((l.clone(), "contraction with the Euler field".into()));
                        }
                        for j in [1, 2] {
                            if f.grade() > 0 && !f.mul_r_pow(2 * j).div()?.is_zero() {
                                rep.failures.push((l.clone(), format!("div(r^{} D)", 2 * j)));
                            }
                        }
                    }
                    (Role::R, true) => {
                        if f.grade() < n && !f.r_op()?.is_zero() {
                            rep.failures.push((l.clone(), "wedge with the Euler form".into()));
                        }
                        for j in [1, 2] {
                            if f.grade() < n && !f.mul_r_pow(2 * j).rot()?.is_zero() {
                                rep.failures.push((l.clone(), format!("rot(r^{} R)", 2 * j)));
                            }
                        }
                    }
                    (Role::D, false) => {
                        if f.grade() > 0 && !f.t_op()?.is_zero() {
                            rep.even_with_normal_part.push(l);
                        }
                    }
                    (Role::R, false) => {}
                }
            }
        }
    }
    Ok(rep)
}

/// Which of the special low-rank forms is requested.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum ExceptionalKind {
    DHat,
    RHat,
    DHatWeighted,
    RHatWeighted,
    DCheckWeighted,
    RCheckWeighted,
}

/// A negative-sign, `sigma = 0`, `m = 1` tower form of the given rank and height.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct TowerRef {
    pub role: Role,
    pub rank: usize,
    pub k: u32,
}

impl TowerRef {
    pub fn index(&self) -> TowerIndex {
        TowerIndex::new(Sign::Minus, self.k, 0, 1)
    }

    /// Family holding this form: `rank` for `D`, `rank - 1` for `R`.
    pub fn family_rank(&self) -> usize {
        match self.role {
            Role::D => self.rank,
            Role::R => self.rank - 1,
        }
    }
}

impl fmt::Display for TowerRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "-{}^{{{},{}}}_{{0,1}}", self.role, self.rank, self.k)
    }
}

/// Result of the case analysis. For the `R` kinds `q` is such that the
/// form has rank `q + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExceptionalFormDescriptor {
    pub kind: ExceptionalKind,
    pub n: usize,
    pub q: usize,
    pub k_cap: u32,
    pub s: Option<Rational>,
    /// `None` means the form is zero.
    pub value: Option<TowerRef>,
}

/// Case tables for the exceptional forms.
pub fn exceptional_form(kind: ExceptionalKind, n: usize, q: usize, k_cap: u32, s: Option<&Rational>) -> Result<ExceptionalFormDescriptor> {
    if k_cap == 0 {
        return Err(Error::InvalidInput("exceptional forms need K >= 1".into()));
    }
    let weighted = !matches!(kind, ExceptionalKind::DHat | ExceptionalKind::RHat);
    if weighted && s.is_none() {
        return Err(Error::InvalidInput("weighted exceptional form needs a weight".into()));
    }
    let even = k_cap.is_multiple_of(2);
    let half_n = frac(n as i64, 2);
    // (value, threshold used by weighted variants)
    let (base, threshold): (Option<TowerRef>, Rational) = match kind {
        ExceptionalKind::DHat | ExceptionalKind::DHatWeighted | ExceptionalKind::DCheckWeighted => {
            if q == 0 && even {
                (Some(TowerRef { role: Role::D, rank: 0, k: k_cap }), &half_n - int(k_cap as i64))
            } else if q == 1 {
                (Some(TowerRef { role: Role::R, rank: 1, k: 1 }), &half_n - int(1))
            } else if q + 1 == n && !even {
                (Some(TowerRef { role: Role::D, rank: n - 1, k: k_cap }), &half_n - int(k_cap as i64))
            } else {
                (None, Rational::zero())
            }
        }
        ExceptionalKind::RHat | ExceptionalKind::RHatWeighted | ExceptionalKind::RCheckWeighted => {
            if q == 0 && !even {
                (Some(TowerRef { role: Role::R, rank: 1, k: k_cap }), &half_n - int(k_cap as i64))
            } else if q + 2 == n {
                (Some(TowerRef { role: Role::D, rank: n - 1, k: 1 }), &half_n - int(1))
            } else if q + 1 == n && even {
                (Some(TowerRef { role: Role::R, rank: n, k: k_cap }), &half_n - int(k_cap as i64))
            } else {
                (None, Rational::zero())
            }
        }
    };
    let value = match kind {
        ExceptionalKind::DHat | ExceptionalKind::RHat => base,
        ExceptionalKind::DHatWeighted | ExceptionalKind::RHatWeighted => base.filter(|_| s.unwrap() < &threshold),
        ExceptionalKind::DCheckWeighted | ExceptionalKind::RCheckWeighted => base.filter(|_| s.unwrap() >= &threshold),
    };
    Ok(ExceptionalFormDescriptor { kind, n, q, k_cap, s: s.cloned(), value })
}

/// Linear independence of all tower forms of one rank and degree across
/// families: `D` floors of family `q` and `R` floors `k >= 1` of family
/// `q - 1`. Returns `(rank, degree, independent)` per group.
pub fn verify_independence(fams: &[TowerFamily]) -> Vec<(usize, i32, bool)> {
    use alloc::collections::BTreeMap;
    let mut groups: BTreeMap<(usize, i32, u32), Vec<&Form>> = BTreeMap::new();
    let mut mixed: BTreeMap<(usize, i32), Vec<&Form>> = BTreeMap::new();
    for fam in fams {
        for k in 0..=fam.floors() {
            let h = fam.degree(k);
            let forms = fam.floor(Role::D, k).iter().map(|f| (fam.q, f));
            let r_forms = fam.floor(Role::R, k).iter().filter(|_| k >= 1).map(|f| (fam.q + 1, f));
            for (rank, f) in forms.chain(r_forms) {
                if f.is_zero() {
                    continue;
                }
                let b = form_blocks(f);
                if b.len() == 1 {
                    groups.entry((rank, h, *b.iter().next().unwrap())).or_default().push(f);
                } else {
                    mixed.entry((rank, h)).or_default().push(f);
                }
            }
        }
    }
    let mut out: BTreeMap<(usize, i32), bool> = BTreeMap::new();
    for ((rank, h, _), fs) in &groups {
        let owned: Vec<Form> = fs.iter().map(|f| (*f).clone()).collect();
        let ok = rank_of_gram(&owned) == owned.len();
        *out.entry((*rank, *h)).or_insert(true) &= ok;
    }
    for ((rank, h), fs) in &mixed {
        // fall back to the whole degree when a form straddles blocks
        let mut owned: Vec<Form> = fs.iter().map(|f| (*f).clone()).collect();
        for ((r2, h2, _), g) in &groups {
            if r2 == rank && h2 == h {
                owned.extend(g.iter().map(|f| (*f).clone()));
            }
        }
        let ok = rank_of_gram(&owned) == owned.len();
        *out.entry((*rank, *h)).or_insert(true) &= ok;
    }
    out.into_iter().map(|((r, h), ok)| (r, h, ok)).collect()
}

fn rank_of_gram(forms: &[Form]) -> usize {
    rank(&crate::harmonic_spaces::gram_matrix(forms))
}

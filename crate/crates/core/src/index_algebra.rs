//! Index bookkeeping: weighted index sets, exceptional weights and the
//! weight/decay hypotheses of the solution theorems.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::harmonic_spaces::{mu, SeedProvider};
use crate::scalar::{fmt as rfmt, half, int, is_natural, Rational};
use crate::towers::{Role, Sign, TowerIndex};

/// `h_I < -s - N/2`: a tower form of index `I` is square integrable with
/// weight `s` outside the unit ball.
pub fn in_weighted_l2(i: &TowerIndex, s: &Rational, n: usize) -> bool {
    int(i.degree(n) as i64) < -s.clone() - half(n)
}

/// The same test in the sign-resolved form
/// `s < -sign(I) (e(I) + N/2) - k(I)`.
pub fn in_weighted_l2_resolved(i: &TowerIndex, s: &Rational, n: usize) -> bool {
    let e = int(i.sigma as i64) + half(n);
    let bound = match i.sign {
        Sign::Plus => -e,
        Sign::Minus => e,
    } - int(i.k as i64);
    s < &bound
}

/// Upper bound of the counting index for a tower index of rank `q`:
/// `mu^{q,k}` for `D`, `mu^{q-1,k+1}` for `R`.
pub fn multiplicity(p: &dyn SeedProvider, n: usize, role: Role, q: usize, k: u32, sigma: u32) -> Result<usize> {
    let (base, kk) = match role {
        Role::D => (q, k),
        Role::R => match q.checked_sub(1) {
            Some(b) => (b, k + 1),
            None => return Ok(0),
        },
    };
    let rank = if kk % 2 == 0 { base } else { base + 1 };
    mu(p, n, rank, sigma)
}

/// Query over the index sets of rank `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedIndexQuery {
    pub n: usize,
    pub q: usize,
    pub k_max: u32,
    pub s: Rational,
    /// `None` means both signs; positive-sign sets are infinite, so then
    /// `sigma_max` must bound them.
    pub sign_filter: Option<Sign>,
    pub sigma_max: Option<u32>,
    pub role: Role,
}

impl WeightedIndexQuery {
    pub fn negative(n: usize, q: usize, k_max: u32, s: Rational, role: Role) -> Self {
        WeightedIndexQuery { n, q, k_max, s, sign_filter: Some(Sign::Minus), sigma_max: None, role }
    }

    /// Indices with height `<= k_max` that are not square integrable with
    /// weight `s`, in (sign, k, sigma, m) order.
    pub fn excluded(&self, p: &dyn SeedProvider) -> Result<Vec<TowerIndex>> {
        crate::error::check_dimension(self.n)?;
        let signs: Vec<Sign> = match self.sign_filter {
            Some(s) => alloc::vec![s],
            None => Sign::BOTH.to_vec(),
        };
        let mut out = Vec::new();
        for sign in signs {
            for k in 0..=self.k_max {
                let cap = match sign {
                    // e <= s + k - N/2
                    Sign::Minus => {
                        let b = self.s.clone() + int(k as i64) - half(self.n);
                        if b.is_negative() {
                            continue;
                        }
                        let fl = b.floor().to_integer();
                        let v: u32 = u32::try_from(fl).map_err(|_| Error::InvalidInput(format!("weight {} too large", rfmt(&self.s))))?;
                        match self.sigma_max {
                            Some(m) => v.min(m),
                            None => v,
                        }
                    }
                    Sign::Plus => self.sigma_max.ok_or_else(|| {
                        Error::InvalidInput("positive-sign index sets are infinite; give a sigma bound".into())
                    })?,
                };
                for sigma in 0..=cap {
                    let idx0 = TowerIndex::new(sign, k, sigma, 1);
                    if in_weighted_l2(&idx0, &self.s, self.n) {
                        continue;
                    }
                    let mu = multiplicity(p, self.n, self.role, self.q, k, sigma)?;
                    for m in 1..=mu as u32 {
                        out.push(TowerIndex::new(sign, k, sigma, m));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Negative-sign `D` indices of rank `q` with height `<= k_max` excluded
/// from the weight-`s` space. `negative_only = false` is rejected because
/// the positive-sign part is infinite; use [`WeightedIndexQuery`] with a
/// sigma bound instead.
pub fn enumerate_excluded(p: &dyn SeedProvider, q: usize, k_max: u32, s: &Rational, n: usize, negative_only: bool) -> Result<Vec<TowerIndex>> {
    let mut query = WeightedIndexQuery::negative(n, q, k_max, s.clone(), Role::D);
    if !negative_only {
        query.sign_filter = None;
    }
    query.excluded(p)
}

/// `jI`.
pub fn shift(i: &TowerIndex, j: i32) -> Result<TowerIndex> {
    i.shift(j)
}

/// `-I`.
pub fn negate(i: &TowerIndex) -> TowerIndex {
    i.negate()
}

/// Role and rank addressed after shifting a `(role, rank q)` index by `j`:
/// odd shifts swap `D` and `R` and move the rank by one.
pub fn shifted_role(role: Role, q: usize, j: i32) -> Option<(Role, usize)> {
    if j.rem_euclid(2) == 0 {
        return Some((role, q));
    }
    match role {
        Role::D => Some((Role::R, q + 1)),
        Role::R => q.checked_sub(1).map(|r| (Role::D, r)),
    }
}

/// Membership in `{n + N/2} U {1 - n - N/2}`, `n >= 0`.
pub fn is_exceptional_weight(s: &Rational, n: usize) -> bool {
    is_natural(&(s.clone() - half(n))) || is_natural(&(int(1) - half(n) - s.clone()))
}

/// The exceptional weights of one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExceptionalWeights {
    pub n: usize,
}

impl ExceptionalWeights {
    pub fn contains(&self, s: &Rational) -> bool {
        is_exceptional_weight(s, self.n)
    }

    /// The `count` elements of smallest absolute value, ascending.
    pub fn first(&self, count: usize) -> Vec<Rational> {
        let mut v = Vec::with_capacity(count);
        let mut i = 0i64;
        while v.len() < count {
            v.push(int(i) + half(self.n));
            if v.len() < count {
                v.push(int(1 - i) - half(self.n));
            }
            i += 1;
        }
        v.sort();
        v
    }
}

/// Which result's hypotheses to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheoremId {
    /// Static Maxwell operator on an exterior domain is an isomorphism.
    MaxwellIsomorphism,
    /// Generalized static Maxwell problem with tower data.
    GeneralizedProblem,
    /// Powers of the generalized solution operator.
    IteratedOperator,
}

impl TheoremId {
    pub fn parse(s: &str) -> Result<TheoremId> {
        match s {
            "maxwell-isomorphism" => Ok(TheoremId::MaxwellIsomorphism),
            "generalized-problem" => Ok(TheoremId::GeneralizedProblem),
            "iterated-operator" => Ok(TheoremId::IteratedOperator),
            other => Err(Error::UnknownTheorem(other.into())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TheoremId::MaxwellIsomorphism => "maxwell-isomorphism",
            TheoremId::GeneralizedProblem => "generalized-problem",
            TheoremId::IteratedOperator => "iterated-operator",
        }
    }
}

/// One checked inequality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub statement: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisReport {
    pub theorem: TheoremId,
    pub conditions: Vec<Condition>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.passed)
    }

    /// `Err(HypothesisViolation)` naming the first failed inequality.
    pub fn into_result(self) -> Result<HypothesisReport> {
        if let Some(c) = self.violations().next() {
            return Err(Error::HypothesisViolation(c.statement.clone()));
        }
        Ok(self)
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(f, "{} {}", if c.passed { "ok  " } else { "FAIL" }, c.statement)?;
        }
        Ok(())
    }
}

/// Inputs for [`validate_hypotheses`]. `tau = None` skips the decay
/// conditions; `h_max = None` means no tower data (the bound is vacuous).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisInput {
    pub n: usize,
    pub s: Rational,
    pub tau: Option<Rational>,
    pub j: Option<u32>,
    pub h_max: Option<i32>,
}

pub fn validate_hypotheses(theorem: TheoremId, input: &HypothesisInput) -> Result<HypothesisReport> {
    let n = input.n;
    let s = &input.s;
    let hn = half(n);
    let mut conditions = Vec::new();
    let mut push = |statement: String, passed: bool| conditions.push(Condition { statement, passed });
    let lower = match theorem {
        TheoremId::IteratedOperator => {
            let j = input.j.ok_or_else(|| Error::InvalidInput("the iterated-operator check needs a power j".into()))?;
            if j == 0 {
                return Err(Error::InvalidInput("power j must be at least 1".into()));
            }
            int(j as i64) - hn.clone()
        }
        _ => int(1) - hn.clone(),
    };
    push(format!("s = {} > {}", rfmt(s), rfmt(&lower)), s > &lower);
    push(format!("s = {} not an exceptional weight", rfmt(s)), !is_exceptional_weight(s, n));
    if let Some(tau) = &input.tau {
        let m = core::cmp::max(Rational::zero(), s.clone() - hn.clone());
        push(format!("tau = {} > max(0, s - N/2) = {}", rfmt(tau), rfmt(&m)), tau > &m);
        let lb = match theorem {
            TheoremId::IteratedOperator => int(input.j.unwrap() as i64 - 1) - s.clone(),
            _ => -s.clone(),
        };
        let label = if theorem == TheoremId::IteratedOperator { "j - 1 - s" } else { "-s" };
        push(format!("tau = {} >= {label} = {}", rfmt(tau), rfmt(&lb)), tau >= &lb);
        if theorem != TheoremId::MaxwellIsomorphism {
            if let Some(h) = input.h_max {
                let b = s.clone() + hn.clone() + int(h as i64);
                push(format!("tau = {} > s + N/2 + h_max = {}", rfmt(tau), rfmt(&b)), tau > &b);
            }
        }
    }
    Ok(HypothesisReport { theorem, conditions })
}

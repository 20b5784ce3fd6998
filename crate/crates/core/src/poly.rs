//! Sparse multivariate polynomials over the rationals.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::scalar::Rational;

/// Largest supported number of coordinates.
pub const MAX_DIM: usize = 15;

/// Exponent vector. The derived order compares total degree first and then
/// exponents lexicographically (`x_1` most significant): graded lex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Monomial {
    deg: u16,
    exps: [u8; MAX_DIM],
}

impl Default for Monomial {
    fn default() -> Self {
        Self::one()
    }
}

impl Monomial {
    pub const fn one() -> Self {
        Monomial { deg: 0, exps: [0; MAX_DIM] }
    }

    pub fn from_exponents(e: &[u32]) -> Self {
        assert!(e.len() <= MAX_DIM, "too many variables");
        let mut m = Self::one();
        for (i, &v) in e.iter().enumerate() {
            let v = u8::try_from(v).expect("exponent too large");
            m.exps[i] = v;
            m.deg += v as u16;
        }
        m
    }

    /// `x_i` (0-based).
    pub fn var(i: usize) -> Self {
        let mut m = Self::one();
        m.exps[i] = 1;
        m.deg = 1;
        m
    }

    pub fn degree(&self) -> u32 {
        self.deg as u32
    }

    pub fn exp(&self, i: usize) -> u32 {
        self.exps[i] as u32
    }

    pub fn exponents(&self, n: usize) -> &[u8] {
        &self.exps[..n]
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        let mut m = *self;
        for i in 0..MAX_DIM {
            m.exps[i] = m.exps[i].checked_add(o.exps[i]).expect("exponent overflow");
        }
        m.deg += o.deg;
        m
    }

    pub fn mul_var(&self, i: usize, k: u8) -> Monomial {
        let mut m = *self;
        m.exps[i] = m.exps[i].checked_add(k).expect("exponent overflow");
        m.deg += k as u16;
        m
    }

    /// Divides by `x_i^k`, `None` if the exponent is too small.
    pub fn div_var(&self, i: usize, k: u8) -> Option<Monomial> {
        if self.exps[i] < k {
            return None;
        }
        let mut m = *self;
        m.exps[i] -= k;
        m.deg -= k as u16;
        Some(m)
    }

    /// Parity bit vector of the exponents.
    pub fn parity(&self, n: usize) -> u32 {
        (0..n).fold(0, |acc, i| acc | (((self.exps[i] & 1) as u32) << i))
    }

    pub fn all_even(&self) -> bool {
        self.exps.iter().all(|e| e % 2 == 0)
    }

    /// All monomials of total degree `d` in `n` variables, in descending
    /// graded-lex order.
    pub fn all_of_degree(n: usize, d: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur = [0u32; MAX_DIM];
        fn rec(n: usize, i: usize, left: u32, cur: &mut [u32; MAX_DIM], out: &mut Vec<Monomial>) {
            if i + 1 == n {
                cur[i] = left;
                out.push(Monomial::from_exponents(&cur[..n]));
                return;
            }
            for v in (0..=left).rev() {
                cur[i] = v;
                rec(n, i + 1, left - v, cur, out);
            }
        }
        if n == 0 {
            if d == 0 {
                out.push(Monomial::one());
            }
            return out;
        }
        rec(n, 0, d, &mut cur, &mut out);
        out
    }
}

/// Polynomial as a map from monomials to nonzero coefficients.
#[derive(Clone, PartialEq, Eq, Debug, Default, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn var(i: usize) -> Self {
        Self::term(Monomial::var(i), Rational::one())
    }

    /// `x_1^2 + ... + x_n^2`.
    pub fn radius_sq(n: usize) -> Self {
        let mut p = Self::zero();
        for i in 0..n {
            p.add_term(Monomial::one().mul_var(i, 2), Rational::one());
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use alloc::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign_scaled(&mut self, o: &Poly, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (m, v) in &o.terms {
            self.add_term(*m, v * c);
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        r.add_assign_scaled(o, &Rational::one());
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        r.add_assign_scaled(o, &-Rational::one());
        r
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect() }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                r.add_term(a.mul(b), ca * cb);
            }
        }
        r
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(a, v)| (a.mul(m), v * c)).collect() }
    }

    pub fn mul_var(&self, i: usize) -> Poly {
        Poly { terms: self.terms.iter().map(|(a, v)| (a.mul_var(i, 1), v.clone())).collect() }
    }

    /// Multiplies by `x_1^2 + ... + x_n^2`.
    pub fn mul_radius_sq(&self, n: usize) -> Poly {
        let mut r = Poly::zero();
        for (a, v) in &self.terms {
            for i in 0..n {
                r.add_term(a.mul_var(i, 2), v.clone());
            }
        }
        r
    }

    pub fn derivative(&self, i: usize) -> Poly {
        let mut r = Poly::zero();
        for (a, v) in &self.terms {
            let e = a.exp(i);
            if e > 0 {
                r.add_term(a.div_var(i, 1).unwrap(), v * Rational::from_integer(BigInt::from(e)));
            }
        }
        r
    }

    /// Highest total degree, `None` for zero.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(|m| m.degree())
    }

    /// Degree if every term has the same total degree (zero counts as
    /// homogeneous of any degree and yields `None`).
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let first = self.terms.keys().next()?.degree();
        let last = self.terms.keys().next_back()?.degree();
        (first == last).then_some(first)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.homogeneous_degree().is_some()
    }

    /// Splits by total degree.
    pub fn homogeneous_components(&self) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, v) in &self.terms {
            out.entry(m.degree()).or_default().terms.insert(*m, v.clone());
        }
        out
    }

    /// Division with remainder by `x_1^2 + ... + x_n^2`, treating the
    /// divisor as monic in `x_n`. Returns `(quotient, remainder)` where the
    /// remainder has `x_n`-degree at most one.
    pub fn div_rem_radius_sq(&self, n: usize) -> (Poly, Poly) {
        let last = n - 1;
        // bucket terms by x_n exponent, process from the top down
        let mut levels: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, v) in &self.terms {
            levels.entry(m.exp(last)).or_default().add_term(*m, v.clone());
        }
        let mut quot = Poly::zero();
        while let Some((&lvl, _)) = levels.iter().next_back() {
            if lvl < 2 {
                break;
            }
            let p = levels.remove(&lvl).unwrap();
            for (m, v) in p.terms {
                let qm = m.div_var(last, 2).unwrap();
                quot.add_term(qm, v.clone());
                let below = levels.entry(lvl - 2).or_default();
                for i in 0..last {
                    below.add_term(qm.mul_var(i, 2), -v.clone());
                }
            }
            levels.retain(|_, p| !p.is_zero());
        }
        let mut rem = Poly::zero();
        for (_, p) in levels {
            for (m, v) in p.terms {
                rem.add_term(m, v);
            }
        }
        (quot, rem)
    }

    /// Exact quotient by `|x|^2` if it divides.
    pub fn div_radius_sq(&self, n: usize) -> Option<Poly> {
        let (q, r) = self.div_rem_radius_sq(n);
        r.is_zero().then_some(q)
    }

    /// Mean over the unit sphere `S^{n-1}`.
    pub fn sphere_mean(&self, n: usize) -> Rational {
        let mut acc = Rational::zero();
        for (m, v) in &self.terms {
            if m.all_even() {
                acc += v * monomial_sphere_mean(m, n);
            }
        }
        acc
    }

    /// Evaluates at an exact point.
    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (m, v) in &self.terms {
            let mut t = v.clone();
            for (i, xi) in x.iter().enumerate() {
                for _ in 0..m.exp(i) {
                    t *= xi;
                }
            }
            acc += t;
        }
        acc
    }

    /// Largest exponent of `x_i` among the terms.
    pub fn max_exp(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(i)).max().unwrap_or(0)
    }
}

/// Mean of `x^a` over `S^{n-1}`: zero unless every exponent is even, and
/// `prod (a_i - 1)!! / (n (n+2) ... (n + |a| - 2))` otherwise.
pub fn monomial_sphere_mean(m: &Monomial, n: usize) -> Rational {
    if !m.all_even() {
        return Rational::zero();
    }
    let mut num = BigInt::one();
    for i in 0..n {
        let mut k = m.exp(i) as i64 - 1;
        while k > 1 {
            num *= k;
            k -= 2;
        }
    }
    let mut den = BigInt::one();
    let half = m.degree() / 2;
    for j in 0..half {
        den *= n as i64 + 2 * j as i64;
    }
    Rational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, int};

    #[test]
    fn graded_lex_order() {
        let a = Monomial::from_exponents(&[2, 0, 0]);
        let b = Monomial::from_exponents(&[1, 1, 0]);
        let c = Monomial::from_exponents(&[0, 0, 3]);
        assert!(a > b);
        assert!(c > a);
        let all = Monomial::all_of_degree(3, 2);
        assert_eq!(all.len(), 6);
        assert!(all.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn radius_division() {
        let n = 3;
        let s = Poly::radius_sq(n);
        let p = Poly::var(0).mul(&Poly::var(1)).add(&Poly::var(2).mul(&Poly::var(2)));
        let sp = s.mul(&p);
        assert_eq!(sp.div_radius_sq(n), Some(p.clone()));
        assert_eq!(p.div_radius_sq(n), None);
        let (q, r) = sp.add(&Poly::var(0)).div_rem_radius_sq(n);
        assert_eq!(q, p);
        assert_eq!(r, Poly::var(0));
    }

    #[test]
    fn sphere_moments() {
        let x1sq = Monomial::from_exponents(&[2, 0, 0]);
        assert_eq!(monomial_sphere_mean(&x1sq, 3), frac(1, 3));
        let x1_4 = Monomial::from_exponents(&[4, 0, 0]);
        assert_eq!(monomial_sphere_mean(&x1_4, 3), frac(1, 5));
        let mixed = Monomial::from_exponents(&[2, 2, 0]);
        assert_eq!(monomial_sphere_mean(&mixed, 3), frac(1, 15));
        assert_eq!(monomial_sphere_mean(&Monomial::one(), 5), int(1));
        assert_eq!(monomial_sphere_mean(&Monomial::var(0), 3), int(0));
        // |x|^4 has mean one
        let s = Poly::radius_sq(5);
        assert_eq!(s.mul(&s).sphere_mean(5), int(1));
    }
}

//! The coefficient ring `Q[x_1..x_N][r, 1/r] / (r^2 - |x|^2)`.
//!
//! An element is a finite sum of parts `r^b P` with `P` homogeneous. Each
//! part is stored canonically: `P` is not divisible by `|x|^2`. Because `r`
//! is not a rational function of `x`, parts of equal total degree but
//! opposite parity of `b` cannot be merged, so parts are keyed by
//! `(total degree, parity of b)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{Monomial, Poly};
use crate::scalar::Rational;

/// `r^b * poly` with `poly` homogeneous, nonzero and free of `|x|^2` factors.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct HomogeneousPart {
    degree: i32,
    r_exp: i32,
    poly: Poly,
}

impl HomogeneousPart {
    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn r_exp(&self) -> i32 {
        self.r_exp
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    /// Polynomial degree of the stored representative.
    pub fn poly_degree(&self) -> u32 {
        (self.degree - self.r_exp) as u32
    }

    fn key(&self) -> (i32, u8) {
        (self.degree, self.r_exp.rem_euclid(2) as u8)
    }

    /// Rewrites the part as `r^target * Q`, possible when `target <= b` and
    /// both have the same parity.
    pub fn poly_at(&self, n: usize, target: i32) -> Option<Poly> {
        let gap = self.r_exp - target;
        if gap < 0 || gap % 2 != 0 {
            return None;
        }
        let mut p = self.poly.clone();
        for _ in 0..gap / 2 {
            p = p.mul_radius_sq(n);
        }
        Some(p)
    }
}

/// Brings `r^b * poly` to canonical form. `Ok(None)` for the zero polynomial.
pub fn canonicalize(n: usize, b: i32, poly: Poly) -> Result<Option<HomogeneousPart>> {
    if poly.is_zero() {
        return Ok(None);
    }
    let d = poly
        .homogeneous_degree()
        .ok_or_else(|| Error::InvalidInput(format!("non-homogeneous polynomial with r-exponent {b}")))?;
    let degree = b + d as i32;
    let mut p = poly;
    let mut b = b;
    while let Some(q) = p.div_radius_sq(n) {
        p = q;
        b += 2;
    }
    Ok(Some(HomogeneousPart { degree, r_exp: b, poly: p }))
}

fn canonical_part(n: usize, b: i32, poly: Poly) -> Option<HomogeneousPart> {
    canonicalize(n, b, poly).expect("ring operations preserve homogeneity")
}

/// Element of the radial polynomial ring in `n` coordinates.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct RadialRingElement {
    n: usize,
    parts: BTreeMap<(i32, u8), HomogeneousPart>,
}

impl RadialRingElement {
    pub fn zero(n: usize) -> Self {
        RadialRingElement { n, parts: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Rational::one())
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        Self::from_poly(n, &Poly::constant(c))
    }

    /// `r^b`.
    pub fn r_pow(n: usize, b: i32) -> Self {
        Self::from_r_poly(n, b, Poly::one()).unwrap()
    }

    /// `x_i` (0-based).
    pub fn var(n: usize, i: usize) -> Self {
        Self::from_poly(n, &Poly::var(i))
    }

    /// Any polynomial, split into homogeneous parts.
    pub fn from_poly(n: usize, p: &Poly) -> Self {
        let mut e = Self::zero(n);
        for (_, h) in p.homogeneous_components() {
            e.add_part_raw(0, h);
        }
        e
    }

    /// `r^b * p` for homogeneous `p`.
    pub fn from_r_poly(n: usize, b: i32, p: Poly) -> Result<Self> {
        let mut e = Self::zero(n);
        if let Some(part) = canonicalize(n, b, p)? {
            e.parts.insert(part.key(), part);
        }
        Ok(e)
    }

    /// Builds from already canonical parts; rejects non-canonical input.
    pub fn from_parts(n: usize, parts: Vec<(i32, Poly)>) -> Result<Self> {
        let mut e = Self::zero(n);
        for (b, p) in parts {
            if p.is_zero() {
                return Err(Error::InvalidInput("zero part".into()));
            }
            if p.div_radius_sq(n).is_some() {
                return Err(Error::InvalidInput(format!(
                    "part with r-exponent {b} is divisible by |x|^2"
                )));
            }
            let part = canonicalize(n, b, p)?.unwrap();
            if e.parts.contains_key(&part.key()) {
                return Err(Error::InvalidInput(format!("duplicate part of degree {}", part.degree)));
            }
            e.parts.insert(part.key(), part);
        }
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// Canonical parts ordered by (degree, parity).
    pub fn parts(&self) -> impl Iterator<Item = &HomogeneousPart> {
        self.parts.values()
    }

    /// Total degrees present (sorted, no repeats).
    pub fn degrees(&self) -> Vec<i32> {
        let mut d: Vec<i32> = self.parts.keys().map(|k| k.0).collect();
        d.dedup();
        d
    }

    /// Single total degree if homogeneous and nonzero.
    pub fn homogeneous_degree(&self) -> Option<i32> {
        let d = self.degrees();
        (d.len() == 1).then(|| d[0])
    }

    /// Restriction to one total degree.
    pub fn degree_part(&self, d: i32) -> Self {
        RadialRingElement {
            n: self.n,
            parts: self.parts.iter().filter(|(k, _)| k.0 == d).map(|(k, v)| (*k, v.clone())).collect(),
        }
    }

    fn add_part_raw(&mut self, b: i32, p: Poly) {
        let Some(part) = canonical_part(self.n, b, p) else { return };
        self.add_part(part);
    }

    fn add_part(&mut self, part: HomogeneousPart) {
        use alloc::collections::btree_map::Entry;
        let n = self.n;
        match self.parts.entry(part.key()) {
            Entry::Vacant(v) => {
                v.insert(part);
            }
            Entry::Occupied(o) => {
                let cur = o.remove();
                let b = cur.r_exp.min(part.r_exp);
                let sum = cur.poly_at(n, b).unwrap().add(&part.poly_at(n, b).unwrap());
                if let Some(p) = canonical_part(n, b, sum) {
                    self.parts.insert(p.key(), p);
                }
            }
        }
    }

    fn check(&self, o: &Self) {
        assert_eq!(self.n, o.n, "ring elements over different dimensions");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        let mut r = self.clone();
        for p in o.parts.values() {
            r.add_part(p.clone());
        }
        r
    }

    pub fn add_assign(&mut self, o: &Self) {
        self.check(o);
        for p in o.parts.values() {
            self.add_part(p.clone());
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.n);
        }
        RadialRingElement {
            n: self.n,
            parts: self
                .parts
                .iter()
                .map(|(k, p)| (*k, HomogeneousPart { poly: p.poly.scale(c), ..p.clone() }))
                .collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        let mut r = Self::zero(self.n);
        for a in self.parts.values() {
            for b in o.parts.values() {
                r.add_part_raw(a.r_exp + b.r_exp, a.poly.mul(&b.poly));
            }
        }
        r
    }

    /// Multiplication by `r^b`.
    pub fn mul_r_pow(&self, b: i32) -> Self {
        let mut r = Self::zero(self.n);
        for p in self.parts.values() {
            r.add_part_raw(p.r_exp + b, p.poly.clone());
        }
        r
    }

    /// Multiplication by the coordinate `x_i`.
    pub fn mul_var(&self, i: usize) -> Self {
        let mut r = Self::zero(self.n);
        for p in self.parts.values() {
            r.add_part_raw(p.r_exp, p.poly.mul_var(i));
        }
        r
    }

    /// `d/dx_i`, using `d(r^b P) = r^(b-2) (|x|^2 dP + b x_i P)`.
    pub fn partial_derivative(&self, i: usize) -> Self {
        let n = self.n;
        let mut r = Self::zero(n);
        for p in self.parts.values() {
            let dp = p.poly.derivative(i);
            if p.r_exp == 0 {
                r.add_part_raw(0, dp);
                continue;
            }
            let b = Rational::from_integer(BigInt::from(p.r_exp));
            let q = dp.mul_radius_sq(n).add(&p.poly.mul_var(i).scale(&b));
            r.add_part_raw(p.r_exp - 2, q);
        }
        r
    }

    /// Value on the unit sphere (set `r = 1`).
    pub fn on_sphere(&self) -> Poly {
        let mut acc = Poly::zero();
        for p in self.parts.values() {
            acc.add_assign_scaled(&p.poly, &Rational::one());
        }
        acc
    }

    /// Exact evaluation at a rational point whose norm is `r` (supplied by
    /// the caller, who must ensure `r^2 = |x|^2`).
    pub fn eval(&self, x: &[Rational], r: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for p in self.parts.values() {
            let v = p.poly.eval(x);
            let rb = if p.r_exp >= 0 {
                num_traits::pow(r.clone(), p.r_exp as usize)
            } else {
                num_traits::pow(r.recip(), (-p.r_exp) as usize)
            };
            acc += v * rb;
        }
        acc
    }

    /// Number of stored monomial terms (a size measure).
    pub fn term_count(&self) -> usize {
        self.parts.values().map(|p| p.poly.len()).sum()
    }

    /// The coefficient of a given monomial in the part `(degree, r_exp)`.
    pub fn coeff(&self, degree: i32, r_exp: i32, m: &Monomial) -> Rational {
        self.parts
            .get(&(degree, r_exp.rem_euclid(2) as u8))
            .filter(|p| p.r_exp == r_exp)
            .map(|p| p.poly.coeff(m))
            .unwrap_or_else(Rational::zero)
    }
}

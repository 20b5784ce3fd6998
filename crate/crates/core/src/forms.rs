//! Differential forms with radial-ring coefficients.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{Monomial, Poly};
use crate::ring::RadialRingElement;
use crate::scalar::Rational;

/// Strictly increasing index tuple, stored as a bit set (bit `i` is the
/// 0-based coordinate `i`). Ordered like the tuples it represents.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Blade(pub u32);

impl Blade {
    pub fn empty() -> Self {
        Blade(0)
    }

    /// From 0-based indices (any order, no repeats).
    pub fn from_indices(ix: &[usize]) -> Result<Self> {
        let mut b = 0u32;
        for &i in ix {
            if i >= 32 || b & (1 << i) != 0 {
                return Err(Error::InvalidInput(format!("bad index tuple {ix:?}")));
            }
            b |= 1 << i;
        }
        Ok(Blade(b))
    }

    pub fn full(n: usize) -> Self {
        Blade(((1u64 << n) - 1) as u32)
    }

    pub fn grade(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    /// 0-based indices in increasing order.
    pub fn indices(&self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }

    pub fn with(&self, i: usize) -> Blade {
        Blade(self.0 | (1 << i))
    }

    pub fn without(&self, i: usize) -> Blade {
        Blade(self.0 & !(1 << i))
    }

    pub fn complement(&self, n: usize) -> Blade {
        Blade(Blade::full(n).0 & !self.0)
    }

    /// Number of elements strictly below `i`.
    pub fn count_below(&self, i: usize) -> usize {
        (self.0 & ((1u32 << i) - 1)).count_ones() as usize
    }

    /// Sign of `dx^self ∧ dx^other` relative to `dx^(self ∪ other)`;
    /// zero if they overlap.
    pub fn wedge_sign(&self, other: &Blade) -> i32 {
        if self.0 & other.0 != 0 {
            return 0;
        }
        let inversions: usize = other.indices().iter().map(|&j| (self.0 >> (j + 1)).count_ones() as usize).sum();
        if inversions.is_multiple_of(2) { 1 } else { -1 }
    }

    /// Enumerates all `q`-subsets of `0..n` in tuple order.
    pub fn all(n: usize, q: usize) -> Vec<Blade> {
        let mut out: Vec<Blade> = (0u32..(1u32 << n)).filter(|b| b.count_ones() as usize == q).map(Blade).collect();
        out.sort();
        out
    }
}

impl Ord for Blade {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut a, mut b) = (self.0, other.0);
        loop {
            match (a == 0, b == 0) {
                (true, true) => return Ordering::Equal,
                (true, false) => return Ordering::Less,
                (false, true) => return Ordering::Greater,
                _ => {}
            }
            let (ia, ib) = (a.trailing_zeros(), b.trailing_zeros());
            if ia != ib {
                return ia.cmp(&ib);
            }
            a &= a - 1;
            b &= b - 1;
        }
    }
}

impl PartialOrd for Blade {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A `q`-form on `R^n`.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Form {
    n: usize,
    q: usize,
    comps: BTreeMap<Blade, RadialRingElement>,
}

/// Homogeneous pieces of a form, keyed by degree.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct HomogeneityDecomposition {
    pub pieces: BTreeMap<i32, Form>,
}

impl HomogeneityDecomposition {
    pub fn reassemble(&self, n: usize, q: usize) -> Form {
        let mut f = Form::zero(n, q);
        for p in self.pieces.values() {
            f.add_assign(p);
        }
        f
    }
}

fn sign_scale(e: &RadialRingElement, s: i32) -> RadialRingElement {
    if s >= 0 { e.clone() } else { e.neg() }
}

impl Form {
    pub fn zero(n: usize, q: usize) -> Self {
        assert!(q <= n, "grade {q} exceeds dimension {n}");
        Form { n, q, comps: BTreeMap::new() }
    }

    /// `f dx^I`.
    pub fn monomial(n: usize, blade: Blade, f: RadialRingElement) -> Self {
        let mut out = Form::zero(n, blade.grade());
        out.add_component(blade, &f);
        out
    }

    /// The constant form `dx^{i_1} ∧ ... ∧ dx^{i_q}` (0-based indices).
    pub fn basis(n: usize, ix: &[usize]) -> Result<Self> {
        let b = Blade::from_indices(ix)?;
        let mut sorted = ix.to_vec();
        // sign of the permutation sorting ix
        let mut sign = 1;
        for i in 0..sorted.len() {
            for j in 0..sorted.len() - i - 1 {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        let c = RadialRingElement::constant(n, Rational::from_integer(sign.into()));
        Ok(Form::monomial(n, b, c))
    }

    /// A 0-form.
    pub fn scalar(f: RadialRingElement) -> Self {
        Form::monomial(f.dim(), Blade::empty(), f)
    }

    /// The Euler 1-form `sum x_i dx^i`.
    pub fn euler(n: usize) -> Self {
        let mut out = Form::zero(n, 1);
        for i in 0..n {
            out.add_component(Blade(1 << i), &RadialRingElement::var(n, i));
        }
        out
    }

    /// Builds from components; rejects wrong grades.
    pub fn from_components(n: usize, q: usize, comps: impl IntoIterator<Item = (Blade, RadialRingElement)>) -> Result<Self> {
        let mut f = Form::zero(n, q);
        for (b, c) in comps {
            if b.grade() != q || (b.0 >> n) != 0 {
                return Err(Error::InvalidInput(format!("component {:?} does not fit grade {q} in dimension {n}", b.indices())));
            }
            if c.dim() != n {
                return Err(Error::DimensionMismatch(format!("coefficient in dimension {} for form in {n}", c.dim())));
            }
            f.add_component(b, &c);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grade(&self) -> usize {
        self.q
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (&Blade, &RadialRingElement)> {
        self.comps.iter()
    }

    pub fn component(&self, b: &Blade) -> RadialRingElement {
        self.comps.get(b).cloned().unwrap_or_else(|| RadialRingElement::zero(self.n))
    }

    pub fn add_component(&mut self, b: Blade, f: &RadialRingElement) {
        if f.is_zero() {
            return;
        }
        let n = self.n;
        let e = self.comps.entry(b).or_insert_with(|| RadialRingElement::zero(n));
        e.add_assign(f);
        if e.is_zero() {
            self.comps.remove(&b);
        }
    }

    fn same_shape(&self, o: &Form) -> Result<()> {
        if self.n != o.n || self.q != o.q {
            return Err(Error::DimensionMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.n, self.q, o.n, o.q
            )));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, o: &Form) {
        self.same_shape(o).expect("adding forms of different shape");
        for (b, c) in &o.comps {
            self.add_component(*b, c);
        }
    }

    pub fn add(&self, o: &Form) -> Form {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }

    pub fn sub(&self, o: &Form) -> Form {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Form {
        if c.is_zero() {
            return Form::zero(self.n, self.q);
        }
        Form { n: self.n, q: self.q, comps: self.comps.iter().map(|(b, e)| (*b, e.scale(c))).collect() }
    }

    /// `self + c * o`.
    pub fn add_scaled(&mut self, o: &Form, c: &Rational) {
        if !c.is_zero() {
            self.add_assign(&o.scale(c));
        }
    }

    /// Coefficientwise product with a ring element.
    pub fn mul_ring(&self, f: &RadialRingElement) -> Form {
        let mut r = Form::zero(self.n, self.q);
        for (b, e) in &self.comps {
            r.add_component(*b, &e.mul(f));
        }
        r
    }

    pub fn mul_r_pow(&self, b: i32) -> Form {
        Form { n: self.n, q: self.q, comps: self.comps.iter().map(|(k, e)| (*k, e.mul_r_pow(b))).collect() }
    }

    pub fn wedge(&self, o: &Form) -> Result<Form> {
        if self.n != o.n {
            return Err(Error::DimensionMismatch(format!("wedge of forms in dimensions {} and {}", self.n, o.n)));
        }
        if self.q + o.q > self.n {
            return Err(Error::GradeOverflow { q: self.q + o.q, n: self.n });
        }
        let mut r = Form::zero(self.n, self.q + o.q);
        for (a, fa) in &self.comps {
            for (b, fb) in &o.comps {
                let s = a.wedge_sign(b);
                if s != 0 {
                    r.add_component(Blade(a.0 | b.0), &sign_scale(&fa.mul(fb), s));
                }
            }
        }
        Ok(r)
    }

    /// Hodge star for the orientation `dx^1 ∧ ... ∧ dx^N`.
    pub fn hodge_star(&self) -> Form {
        let mut r = Form::zero(self.n, self.n - self.q);
        for (b, f) in &self.comps {
            let c = b.complement(self.n);
            r.add_component(c, &sign_scale(f, b.wedge_sign(&c)));
        }
        r
    }

    /// Exterior derivative.
    pub fn rot(&self) -> Result<Form> {
        if self.q >= self.n {
            return Err(Error::GradeOverflow { q: self.q + 1, n: self.n });
        }
        let mut r = Form::zero(self.n, self.q + 1);
        for (b, f) in &self.comps {
            for i in 0..self.n {
                if b.contains(i) {
                    continue;
                }
                let d = f.partial_derivative(i);
                let s = if b.count_below(i) % 2 == 0 { 1 } else { -1 };
                r.add_component(b.with(i), &sign_scale(&d, s));
            }
        }
        Ok(r)
    }

    /// Codifferential `sum_i ι_{e_i} ∂_i`, which equals
    /// `(-1)^{(q-1)N} * rot *` (see `div_via_hodge`).
    pub fn div(&self) -> Result<Form> {
        if self.q == 0 {
            return Err(Error::GradeUnderflow);
        }
        let mut r = Form::zero(self.n, self.q - 1);
        for (b, f) in &self.comps {
            for i in b.indices() {
                let d = f.partial_derivative(i);
                let s = if b.count_below(i) % 2 == 0 { 1 } else { -1 };
                r.add_component(b.without(i), &sign_scale(&d, s));
            }
        }
        Ok(r)
    }

    /// The same codifferential computed through the Hodge star.
    pub fn div_via_hodge(&self) -> Result<Form> {
        if self.q == 0 {
            return Err(Error::GradeUnderflow);
        }
        let d = self.hodge_star().rot()?.hodge_star();
        Ok(if ((self.q - 1) * self.n).is_multiple_of(2) { d } else { d.neg() })
    }

    /// Componentwise `sum_i ∂_i^2`.
    pub fn laplacian(&self) -> Form {
        let mut r = Form::zero(self.n, self.q);
        for (b, f) in &self.comps {
            let mut acc = RadialRingElement::zero(self.n);
            for i in 0..self.n {
                acc.add_assign(&f.partial_derivative(i).partial_derivative(i));
            }
            r.add_component(*b, &acc);
        }
        r
    }

    /// `rot div + div rot`, skipping terms whose grade does not exist.
    pub fn laplacian_via_rot_div(&self) -> Form {
        let mut r = Form::zero(self.n, self.q);
        if self.q > 0 {
            r.add_assign(&self.div().unwrap().rot().unwrap());
        }
        if self.q < self.n {
            r.add_assign(&self.rot().unwrap().div().unwrap());
        }
        r
    }

    /// `X ∧ F` with the Euler form `X = sum x_i dx^i`.
    pub fn r_op(&self) -> Result<Form> {
        Form::euler(self.n).wedge(self)
    }

    /// Contraction with the Euler field `sum x_i ∂_i`.
    pub fn t_op(&self) -> Result<Form> {
        if self.q == 0 {
            return Err(Error::GradeUnderflow);
        }
        let mut r = Form::zero(self.n, self.q - 1);
        for (b, f) in &self.comps {
            for i in b.indices() {
                let s = if b.count_below(i) % 2 == 0 { 1 } else { -1 };
                r.add_component(b.without(i), &sign_scale(&f.mul_var(i), s));
            }
        }
        Ok(r)
    }

    pub fn homogeneity_split(&self) -> HomogeneityDecomposition {
        let mut pieces: BTreeMap<i32, Form> = BTreeMap::new();
        for (b, f) in &self.comps {
            for d in f.degrees() {
                pieces.entry(d).or_insert_with(|| Form::zero(self.n, self.q)).add_component(*b, &f.degree_part(d));
            }
        }
        HomogeneityDecomposition { pieces }
    }

    /// Single homogeneity degree, if the form is nonzero and homogeneous.
    pub fn homogeneous_degree(&self) -> Option<i32> {
        let s = self.homogeneity_split();
        (s.pieces.len() == 1).then(|| *s.pieces.keys().next().unwrap())
    }

    /// Components restricted to the unit sphere.
    pub fn on_sphere(&self) -> BTreeMap<Blade, Poly> {
        self.comps.iter().map(|(b, f)| (*b, f.on_sphere())).collect()
    }

    /// Normalized `L^2(S^{N-1})` pairing.
    pub fn sphere_inner_product(&self, o: &Form) -> Result<Rational> {
        self.same_shape(o)?;
        Ok(sphere_pairing(self.n, &self.on_sphere(), &o.on_sphere()))
    }

    /// Total number of stored monomial terms.
    pub fn term_count(&self) -> usize {
        self.comps.values().map(|c| c.term_count()).sum()
    }
}

/// Sphere pairing of forms already restricted to the sphere.
pub fn sphere_pairing(n: usize, a: &BTreeMap<Blade, Poly>, b: &BTreeMap<Blade, Poly>) -> Rational {
    SphereForm::new(a).pairing(n, &SphereForm::new(b))
}

/// A form restricted to the unit sphere with integer coefficients over a
/// common denominator, for fast repeated pairings.
#[derive(Clone, Debug)]
pub struct SphereForm {
    comps: BTreeMap<Blade, Vec<(Monomial, BigInt)>>,
    den: BigInt,
}

impl SphereForm {
    pub fn new(f: &BTreeMap<Blade, Poly>) -> Self {
        let den = f
            .values()
            .flat_map(|p| p.terms().map(|(_, c)| c.denom().clone()))
            .fold(BigInt::one(), |acc, d| acc.lcm(&d));
        let comps = f
            .iter()
            .map(|(b, p)| {
                let terms = p.terms().map(|(m, c)| (*m, c.numer() * (&den / c.denom()))).collect();
                (*b, terms)
            })
            .collect();
        SphereForm { comps, den }
    }

    pub fn of(f: &Form) -> Self {
        Self::new(&f.on_sphere())
    }

    /// Normalized sphere pairing.
    pub fn pairing(&self, n: usize, o: &SphereForm) -> Rational {
        let acc = self.pairing_small(n, o).unwrap_or_else(|| self.pairing_big(n, o));
        let mut total = Rational::zero();
        for (half, v) in acc {
            let mut d = BigInt::one();
            for j in 0..half {
                d *= n as u64 + 2 * j as u64;
            }
            total += Rational::new(v, d);
        }
        total / Rational::from_integer(&self.den * &o.den)
    }

    /// Sums of `p_a q_b prod (a_i+b_i-1)!!` grouped by half total degree,
    /// in machine integers; `None` on overflow.
    fn pairing_small(&self, n: usize, o: &SphereForm) -> Option<BTreeMap<u32, BigInt>> {
        let mut acc: BTreeMap<u32, i128> = BTreeMap::new();
        for (blade, ta) in &self.comps {
            let Some(tb) = o.comps.get(blade) else { continue };
            for (ma, ca) in ta {
                let ca = i64::try_from(ca).ok()?;
                let pa = ma.parity(n);
                for (mb, cb) in tb {
                    if mb.parity(n) != pa {
                        continue;
                    }
                    let cb = i64::try_from(cb).ok()?;
                    let m = ma.mul(mb);
                    let w = i128::try_from(double_factorial_weight(&m, n)).ok()?;
                    let t = (ca as i128).checked_mul(cb as i128)?.checked_mul(w)?;
                    let e = acc.entry(m.degree() / 2).or_insert(0);
                    *e = e.checked_add(t)?;
                }
            }
        }
        Some(acc.into_iter().map(|(k, v)| (k, BigInt::from(v))).collect())
    }

    fn pairing_big(&self, n: usize, o: &SphereForm) -> BTreeMap<u32, BigInt> {
        let mut acc: BTreeMap<u32, BigInt> = BTreeMap::new();
        for (blade, ta) in &self.comps {
            let Some(tb) = o.comps.get(blade) else { continue };
            for (ma, ca) in ta {
                let pa = ma.parity(n);
                for (mb, cb) in tb {
                    if mb.parity(n) != pa {
                        continue;
                    }
                    let m = ma.mul(mb);
                    let w = double_factorial_weight(&m, n);
                    *acc.entry(m.degree() / 2).or_insert_with(BigInt::zero) += ca * cb * w;
                }
            }
        }
        acc
    }
}

/// `prod_i (c_i - 1)!!` for an all-even exponent vector `c`.
fn double_factorial_weight(m: &Monomial, n: usize) -> BigInt {
    let mut small: u128 = 1;
    let mut big: Option<BigInt> = None;
    for i in 0..n {
        let mut k = m.exp(i) as u64;
        while k > 2 {
            k -= 2;
            match (&mut big, small.checked_mul(k as u128 + 1)) {
                (None, Some(v)) => small = v,
                (None, None) => big = Some(BigInt::from(small) * (k + 1)),
                (Some(b), _) => *b *= k + 1,
            }
        }
    }
    big.unwrap_or_else(|| BigInt::from(small))
}

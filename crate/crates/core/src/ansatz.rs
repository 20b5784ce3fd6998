//! Linear systems over a homogeneous ansatz `r^b * P_E` (all `q`-forms whose
//! components are `r^b` times a polynomial of degree `E`).
//!
//! Coordinate reflections commute with `rot`, `div` and the sphere pairing,
//! so the unknowns split into independent blocks labelled by the parity
//! vector `parity(alpha) xor I` of a term `x^alpha dx^I`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::forms::{Blade, Form};
use crate::linalg::{solve_sparse, SparseRow};
use crate::poly::{Monomial, Poly};
use crate::ring::RadialRingElement;
use crate::scalar::Rational;

/// What an operator's image must equal.
#[derive(Clone, Copy)]
pub(crate) enum Target<'a> {
    /// Operator not imposed (grade out of range).
    Skip,
    Zero,
    Form(&'a Form),
}

pub(crate) struct BlockResult {
    pub block: u32,
    pub particular: Form,
    pub kernel: Vec<Form>,
    /// Leading unknown `(blade, monomial)` of each kernel vector.
    pub kernel_keys: Vec<KernelKey>,
}

/// Sort key reproducing the global unknown order: blades ascending, then
/// monomials in descending graded-lex order.
pub(crate) type KernelKey = (Blade, core::cmp::Reverse<Monomial>);

/// Reflection block of a term.
pub(crate) fn term_block(blade: Blade, m: &Monomial, n: usize) -> u32 {
    m.parity(n) ^ blade.0
}

/// Blocks on which a form has support.
pub fn form_blocks(f: &Form) -> BTreeSet<u32> {
    let n = f.dim();
    let mut out = BTreeSet::new();
    for (b, c) in f.components() {
        for p in c.parts() {
            for (m, _) in p.poly().terms() {
                out.insert(term_block(*b, m, n));
            }
        }
    }
    out
}

/// Restriction of a form to one block.
pub fn block_part(f: &Form, block: u32) -> Form {
    let n = f.dim();
    let mut out = Form::zero(n, f.grade());
    for (b, c) in f.components() {
        for p in c.parts() {
            let mut poly = Poly::zero();
            for (m, v) in p.poly().terms() {
                if term_block(*b, m, n) == block {
                    poly.add_term(*m, v.clone());
                }
            }
            if !poly.is_zero() {
                out.add_component(*b, &RadialRingElement::from_r_poly(n, p.r_exp(), poly).unwrap());
            }
        }
    }
    out
}

type RowKey = (u8, Blade, Monomial);

fn push_derivative_terms(
    rows: &mut BTreeMap<RowKey, Vec<(usize, Rational)>>,
    op: u8,
    out_blade: Blade,
    sign: i64,
    i: usize,
    alpha: &Monomial,
    b: i32,
    n: usize,
    col: usize,
) {
    // r^{2-b} d_i(r^b x^alpha) = |x|^2 alpha_i x^{alpha - e_i} + b x_i x^alpha
    let ai = alpha.exp(i) as i64;
    if ai > 0 {
        let base = alpha.div_var(i, 1).unwrap();
        for j in 0..n {
            rows.entry((op, out_blade, base.mul_var(j, 2)))
                .or_default()
                .push((col, Rational::from_integer(BigInt::from(sign * ai))));
        }
    }
    if b != 0 {
        rows.entry((op, out_blade, alpha.mul_var(i, 1)))
            .or_default()
            .push((col, Rational::from_integer(BigInt::from(sign * b as i64))));
    }
}

fn add_rhs(
    rhs: &mut BTreeMap<RowKey, Rational>,
    op: u8,
    target: &Form,
    h: i32,
    b: i32,
    n: usize,
    blocks: Option<&BTreeSet<u32>>,
) -> Result<bool> {
    for (blade, c) in target.components() {
        for p in c.parts() {
            if p.degree() != h - 1 {
                return Err(Error::InvalidInput(format!(
                    "target part of degree {} where {} was expected",
                    p.degree(),
                    h - 1
                )));
            }
            let relevant = p.poly().terms().any(|(m, _)| blocks.is_none_or(|s| s.contains(&term_block(*blade, m, n))));
            if !relevant {
                continue;
            }
            let Some(poly) = p.poly_at(n, b - 2) else { return Ok(false) };
            for (m, v) in poly.terms() {
                if blocks.is_none_or(|s| s.contains(&term_block(*blade, m, n))) {
                    *rhs.entry((op, *blade, *m)).or_insert_with(Rational::zero) += v;
                }
            }
        }
    }
    Ok(true)
}

/// Solves `rot X = rot_target`, `div X = div_target` for a `q`-form `X` in
/// the ansatz `r^(h-e) P_e`, restricted to `blocks` if given. `Ok(None)`
/// means the system has no solution in this ansatz.
pub(crate) fn solve(
    n: usize,
    q: usize,
    h: i32,
    e: u32,
    rot: Target,
    div: Target,
    blocks: Option<&BTreeSet<u32>>,
) -> Result<Option<Vec<BlockResult>>> {
    let b = h - e as i32;
    let monos = Monomial::all_of_degree(n, e);
    // unknowns per block, in global order (blade ascending, monomial descending)
    let mut unknowns: BTreeMap<u32, Vec<(Blade, Monomial)>> = BTreeMap::new();
    for blade in Blade::all(n, q) {
        for m in &monos {
            let v = term_block(blade, m, n);
            if blocks.is_none_or(|s| s.contains(&v)) {
                unknowns.entry(v).or_default().push((blade, *m));
            }
        }
    }
    let mut rhs: BTreeMap<RowKey, Rational> = BTreeMap::new();
    if let Target::Form(t) = rot {
        if !add_rhs(&mut rhs, 0, t, h, b, n, blocks)? {
            return Ok(None);
        }
    }
    if let Target::Form(t) = div {
        if !add_rhs(&mut rhs, 1, t, h, b, n, blocks)? {
            return Ok(None);
        }
    }
    // right-hand sides that no unknown can reach
    let mut rhs_by_block: BTreeMap<u32, Vec<(RowKey, Rational)>> = BTreeMap::new();
    for (k, v) in rhs {
        rhs_by_block.entry(term_block(k.1, &k.2, n)).or_default().push((k, v));
    }
    for v in rhs_by_block.keys() {
        if !unknowns.contains_key(v) {
            return Ok(None);
        }
    }
    let mut out = Vec::new();
    for (block, cols) in &unknowns {
        let mut rows: BTreeMap<RowKey, Vec<(usize, Rational)>> = BTreeMap::new();
        for (col, (blade, alpha)) in cols.iter().enumerate() {
            if !matches!(rot, Target::Skip) {
                for i in 0..n {
                    if !blade.contains(i) {
                        let s = if blade.count_below(i) % 2 == 0 { 1 } else { -1 };
                        push_derivative_terms(&mut rows, 0, blade.with(i), s, i, alpha, b, n, col);
                    }
                }
            }
            if !matches!(div, Target::Skip) {
                for i in blade.indices() {
                    let s = if blade.count_below(i) % 2 == 0 { 1 } else { -1 };
                    push_derivative_terms(&mut rows, 1, blade.without(i), s, i, alpha, b, n, col);
                }
            }
        }
        let mut block_rhs: BTreeMap<RowKey, Rational> = rhs_by_block.remove(block).unwrap_or_default().into_iter().collect();
        let mut system = Vec::with_capacity(rows.len());
        for (key, mut entries) in rows {
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(entries.len());
            for (c, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|e| !e.1.is_zero());
            let r = block_rhs.remove(&key).unwrap_or_else(Rational::zero);
            if merged.is_empty() && r.is_zero() {
                continue;
            }
            system.push(SparseRow { entries: merged, rhs: r });
        }
        if block_rhs.values().any(|v| !v.is_zero()) {
            return Ok(None);
        }
        let Some(sol) = solve_sparse(cols.len(), &system) else { return Ok(None) };
        let to_form = |vec: &[(usize, Rational)]| -> Form {
            let mut polys: BTreeMap<Blade, Poly> = BTreeMap::new();
            for (c, v) in vec {
                let (blade, m) = cols[*c];
                polys.entry(blade).or_default().add_term(m, v.clone());
            }
            let mut f = Form::zero(n, q);
            for (blade, p) in polys {
                f.add_component(blade, &RadialRingElement::from_r_poly(n, b, p).unwrap());
            }
            f
        };
        out.push(BlockResult {
            block: *block,
            particular: to_form(&sol.particular),
            kernel: sol.kernel.iter().map(|k| to_form(k)).collect(),
            kernel_keys: sol
                .kernel
                .iter()
                .map(|k| {
                    let (blade, m) = cols[k[0].0];
                    (blade, core::cmp::Reverse(m))
                })
                .collect(),
        });
    }
    Ok(Some(out))
}

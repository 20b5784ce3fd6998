//! Spaces of homogeneous closed and coclosed forms (tower ground floors).
//!
//! Every component of such a form is a homogeneous harmonic function, so a
//! form of degree `h >= 0` is polynomial, and one of degree `h < 0` is
//! `r^(2h+N-2)` times a polynomial of degree `2-N-h` (Kelvin transform).
//! That fixes the ansatz exactly; `seed_basis_search` keeps the escalating
//! search as an independent cross-check.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::RefCell;

use num_traits::Zero;

use crate::ansatz::{self, Target};
use crate::error::{check_dimension, Error, Result};
use crate::forms::{Form, SphereForm};
use crate::linalg::{solve_dense, Matrix};
use crate::scalar::Rational;

/// Basis of one reflection block of a seed space.
#[derive(Clone, Debug)]
pub struct SeedBlock {
    pub block: u32,
    pub basis: Vec<Form>,
    pub gram: Matrix,
}

impl SeedBlock {
    fn new(block: u32, basis: Vec<Form>) -> Self {
        let gram = gram_matrix(&basis);
        SeedBlock { block, basis, gram }
    }

    /// Removes the sphere projection of `f` onto this block's span.
    pub fn project_out(&self, f: &Form) -> Form {
        project_out(&self.basis, &self.gram, f)
    }
}

/// Gram matrix of sphere inner products.
pub fn gram_matrix(basis: &[Form]) -> Matrix {
    let sph: Vec<SphereForm> = basis.iter().map(SphereForm::of).collect();
    let n = basis.first().map_or(3, |b| b.dim());
    let k = basis.len();
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

/// `f` minus its sphere projection onto `span(basis)`.
pub fn project_out(basis: &[Form], gram: &Matrix, f: &Form) -> Form {
    if basis.is_empty() || f.is_zero() {
        return f.clone();
    }
    let sf = SphereForm::of(f);
    let rhs: Vec<Rational> = basis.iter().map(|b| SphereForm::of(b).pairing(f.dim(), &sf)).collect();
    if rhs.iter().all(|v| v.is_zero()) {
        return f.clone();
    }
    let c = solve_dense(gram, &rhs).expect("Gram matrix of a basis is nonsingular");
    let mut out = f.clone();
    for (b, ci) in basis.iter().zip(&c) {
        out.add_scaled(b, &-ci.clone());
    }
    out
}

/// Basis of homogeneous degree-`h` `q`-forms with `rot = 0` and `div = 0`.
#[derive(Clone, Debug)]
pub struct SeedSpace {
    pub n: usize,
    pub q: usize,
    pub h: i32,
    pub basis: Vec<Form>,
    /// Reflection block of each basis element.
    pub blocks: Vec<u32>,
    /// Sphere Gram matrix (block diagonal up to ordering).
    pub gram: Matrix,
}

impl SeedSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Wraps a basis of single-block seeds, computing blocks and the Gram matrix.
    pub fn from_basis(n: usize, q: usize, h: i32, basis: Vec<Form>) -> Self {
        let blocks: Vec<u32> = basis.iter().map(|f| ansatz::form_blocks(f).into_iter().next().unwrap_or(0)).collect();
        let mut gram = alloc::vec![alloc::vec![Rational::zero(); basis.len()]; basis.len()];
        let mut by_block: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, b) in blocks.iter().enumerate() {
            by_block.entry(*b).or_default().push(i);
        }
        for idx in by_block.values() {
            let sub: Vec<Form> = idx.iter().map(|&i| basis[i].clone()).collect();
            let g = gram_matrix(&sub);
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    gram[i][j] = g[a][b].clone();
                }
            }
        }
        SeedSpace { n, q, h, basis, blocks, gram }
    }

    fn empty(n: usize, q: usize, h: i32) -> Self {
        SeedSpace { n, q, h, basis: Vec::new(), blocks: Vec::new(), gram: Vec::new() }
    }

    /// Subspace belonging to one reflection block.
    pub fn block(&self, block: u32) -> SeedBlock {
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| self.blocks[i] == block).collect();
        SeedBlock {
            block,
            basis: idx.iter().map(|&i| self.basis[i].clone()).collect(),
            gram: idx.iter().map(|&i| idx.iter().map(|&j| self.gram[i][j].clone()).collect()).collect(),
        }
    }

    /// `f` minus its sphere projection onto the space.
    pub fn orthogonal_complement_projection(&self, f: &Form) -> Result<Form> {
        if f.dim() != self.n || f.grade() != self.q {
            return Err(Error::DimensionMismatch(format!(
                "form of rank {} in dimension {} against seeds of rank {} in {}",
                f.grade(),
                f.dim(),
                self.q,
                self.n
            )));
        }
        let mut out = Form::zero(self.n, self.q);
        for v in ansatz::form_blocks(f) {
            out.add_assign(&self.block(v).project_out(&ansatz::block_part(f, v)));
        }
        Ok(out)
    }
}

/// Polynomial degree of the exact seed ansatz at degree `h`, or `None` when
/// no nonzero harmonic function of that degree exists.
pub fn seed_ansatz_depth(n: usize, h: i32) -> Option<u32> {
    if h >= 0 {
        return Some(h as u32);
    }
    let e = 2 - n as i32 - h;
    (e >= 0).then_some(e as u32)
}

fn closed_coclosed(n: usize, q: usize, h: i32, e: u32, blocks: Option<&BTreeSet<u32>>) -> Result<Vec<(ansatz::KernelKey, u32, Form)>> {
    let rot = if q < n { Target::Zero } else { Target::Skip };
    let div = if q > 0 { Target::Zero } else { Target::Skip };
    let res = ansatz::solve(n, q, h, e, rot, div, blocks)?
        .ok_or_else(|| Error::ConstructionFailure("homogeneous system reported inconsistent".into()))?;
    let mut out = Vec::new();
    for r in res {
        for (k, f) in r.kernel_keys.into_iter().zip(r.kernel) {
            out.push((k, r.block, f));
        }
    }
    out.sort_by_key(|a| a.0);
    Ok(out)
}

/// Exact seed space computation over all blocks.
pub fn compute_seed_space(n: usize, q: usize, h: i32) -> Result<SeedSpace> {
    check_dimension(n)?;
    if q > n {
        return Ok(SeedSpace::empty(n, q, h));
    }
    let Some(e) = seed_ansatz_depth(n, h) else { return Ok(SeedSpace::empty(n, q, h)) };
    let found = closed_coclosed(n, q, h, e, None)?;
    Ok(SeedSpace::from_basis(n, q, h, found.into_iter().map(|x| x.2).collect()))
}

/// Dimension of the seed space without building its Gram matrix.
pub fn compute_seed_dim(n: usize, q: usize, h: i32) -> Result<usize> {
    check_dimension(n)?;
    if q > n {
        return Ok(0);
    }
    let Some(e) = seed_ansatz_depth(n, h) else { return Ok(0) };
    Ok(closed_coclosed(n, q, h, e, None)?.len())
}

/// Exact seed computation restricted to one reflection block.
pub fn compute_seed_block(n: usize, q: usize, h: i32, block: u32) -> Result<SeedBlock> {
    check_dimension(n)?;
    if q > n {
        return Ok(SeedBlock::new(block, Vec::new()));
    }
    let Some(e) = seed_ansatz_depth(n, h) else { return Ok(SeedBlock::new(block, Vec::new())) };
    let only: BTreeSet<u32> = core::iter::once(block).collect();
    let found = closed_coclosed(n, q, h, e, Some(&only))?;
    Ok(SeedBlock::new(block, found.into_iter().map(|x| x.2).collect()))
}

/// Seed basis by escalating search. For `h < 0` the ansatz is
/// `span{ r^(h-e) P_e : 0 <= e <= E }` starting at `E = depth_hint`; the
/// search stops once the dimension is unchanged for two consecutive `E`.
pub fn seed_basis_search(n: usize, q: usize, h: i32, depth_hint: u32) -> Result<SeedSpace> {
    check_dimension(n)?;
    if q > n {
        return Ok(SeedSpace::empty(n, q, h));
    }
    if h >= 0 {
        return compute_seed_space(n, q, h);
    }
    let cap = h.unsigned_abs() + q as u32 + 8;
    let collect = |e: u32| -> Result<Vec<Form>> {
        // the span splits into the two r-parity classes r^(h-E) P_E and r^(h-E+1) P_(E-1)
        let mut out: Vec<Form> = closed_coclosed(n, q, h, e, None)?.into_iter().map(|x| x.2).collect();
        if e >= 1 {
            out.extend(closed_coclosed(n, q, h, e - 1, None)?.into_iter().map(|x| x.2));
        }
        Ok(out)
    };
    let mut e = depth_hint;
    let mut prev = collect(e)?;
    loop {
        if e + 1 > cap {
            return Err(Error::ConstructionFailure(format!(
                "seed dimension for (N={n}, q={q}, h={h}) did not stabilize below depth {cap}"
            )));
        }
        let next = collect(e + 1)?;
        if next.len() == prev.len() {
            return Ok(SeedSpace::from_basis(n, q, h, next));
        }
        prev = next;
        e += 1;
    }
}

/// Source of seed spaces, usually backed by a memo table.
pub trait SeedProvider {
    fn seed_space(&self, n: usize, q: usize, h: i32) -> Result<Arc<SeedSpace>>;

    /// One reflection block of the seed space; cheaper than the full space.
    fn seed_block(&self, n: usize, q: usize, h: i32, block: u32) -> Result<Arc<SeedBlock>>;

    /// Dimension of the seed space.
    fn seed_dim(&self, n: usize, q: usize, h: i32) -> Result<usize> {
        Ok(self.seed_space(n, q, h)?.dim())
    }
}

/// Single-threaded memo table.
#[derive(Default)]
pub struct SeedCache {
    dims: RefCell<BTreeMap<(usize, usize, i32), usize>>,
    spaces: RefCell<BTreeMap<(usize, usize, i32), Arc<SeedSpace>>>,
    blocks: RefCell<BTreeMap<(usize, usize, i32, u32), Arc<SeedBlock>>>,
}

impl SeedCache {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SeedProvider for SeedCache {
    fn seed_space(&self, n: usize, q: usize, h: i32) -> Result<Arc<SeedSpace>> {
        if let Some(s) = self.spaces.borrow().get(&(n, q, h)) {
            return Ok(s.clone());
        }
        let s = Arc::new(compute_seed_space(n, q, h)?);
        self.spaces.borrow_mut().insert((n, q, h), s.clone());
        Ok(s)
    }

    fn seed_block(&self, n: usize, q: usize, h: i32, block: u32) -> Result<Arc<SeedBlock>> {
        if let Some(s) = self.blocks.borrow().get(&(n, q, h, block)) {
            return Ok(s.clone());
        }
        let b = match self.spaces.borrow().get(&(n, q, h)) {
            Some(s) => s.block(block),
            None => compute_seed_block(n, q, h, block)?,
        };
        let b = Arc::new(b);
        self.blocks.borrow_mut().insert((n, q, h, block), b.clone());
        Ok(b)
    }

    fn seed_dim(&self, n: usize, q: usize, h: i32) -> Result<usize> {
        if let Some(s) = self.spaces.borrow().get(&(n, q, h)) {
            return Ok(s.dim());
        }
        if let Some(d) = self.dims.borrow().get(&(n, q, h)) {
            return Ok(*d);
        }
        let d = compute_seed_dim(n, q, h)?;
        self.dims.borrow_mut().insert((n, q, h), d);
        Ok(d)
    }
}

/// `mu_sigma^q`: dimension of the degree-`sigma` seed space. Checks it
/// against the degree `-sigma-N` seeds, which have the same dimension for
/// `1 <= q <= N-1` and vanish for `q` in `{0, N}`.
pub fn mu(p: &dyn SeedProvider, n: usize, q: usize, sigma: u32) -> Result<usize> {
    if q > n {
        return Ok(0);
    }
    let pos = p.seed_dim(n, q, sigma as i32)?;
    let neg = p.seed_dim(n, q, -(sigma as i32) - n as i32)?;
    let expected = if q == 0 || q == n { 0 } else { pos };
    if neg != expected {
        return Err(Error::ConsistencyFailure(format!(
            "seed dimensions disagree for (N={n}, q={q}, sigma={sigma}): {pos} at degree {sigma}, {neg} at degree {}",
            -(sigma as i32) - n as i32
        )));
    }
    Ok(pos)
}

/// Dimension of positive seeds only (no consistency check).
pub fn mu_unchecked(p: &dyn SeedProvider, n: usize, q: usize, sigma: u32) -> Result<usize> {
    if q > n {
        return Ok(0);
    }
    p.seed_dim(n, q, sigma as i32)
}

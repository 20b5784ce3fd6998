//! Exact linear algebra: a sparse fraction-free solver for the large
//! structured systems and dense rational routines for small Gram matrices.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::Rational;

/// Sparse row with a right-hand side.
#[derive(Clone, Debug, Default)]
pub struct SparseRow {
    pub entries: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

/// General solution `particular + span(kernel)` of a consistent system.
/// Kernel vectors are in reduced echelon form: leftmost nonzero entry is one
/// and no other vector is nonzero at that column.
#[derive(Clone, Debug)]
pub struct SparseSolution {
    pub particular: Vec<(usize, Rational)>,
    pub kernel: Vec<Vec<(usize, Rational)>>,
}

fn lcm_of_denoms<'a>(vals: impl Iterator<Item = &'a Rational>) -> BigInt {
    vals.fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Integer arithmetic used by the fraction-free eliminator. Operations
/// return `None` on overflow so a machine-word pass can fall back to big
/// integers.
trait EchelonInt: Clone + core::fmt::Debug {
    fn from_big(v: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn gcd(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    fn div_exact(&self, o: &Self) -> Self;
}

impl EchelonInt for i128 {
    fn from_big(v: &BigInt) -> Option<Self> {
        i128::try_from(v).ok().filter(|x| x.unsigned_abs() < (1u128 << 120))
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_one(&self) -> bool {
        *self == 1
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn gcd(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn neg(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn div_exact(&self, o: &Self) -> Self {
        self / o
    }
}

impl EchelonInt for BigInt {
    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_one(&self) -> bool {
        One::is_one(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn gcd(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn div_exact(&self, o: &Self) -> Self {
        self / o
    }
}

type Row<T> = Vec<(usize, T)>;

fn make_primitive<T: EchelonInt>(row: &mut Row<T>) -> Option<()> {
    let Some(first) = row.first() else { return Some(()) };
    let mut g = first.1.clone();
    for (_, v) in row.iter().skip(1) {
        if g.is_one() || (g.neg()?.is_one()) {
            break;
        }
        g = g.gcd(v);
    }
    let g = g.gcd(&g);
    let g = if row[0].1.is_negative() { g.neg()? } else { g };
    if !g.is_one() {
        for (_, v) in row.iter_mut() {
            *v = v.div_exact(&g);
        }
    }
    Some(())
}

/// `a * x - b * y` on sparse rows.
fn combine<T: EchelonInt>(x: &Row<T>, a: &T, y: &Row<T>, b: &T) -> Option<Row<T>> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let ci = x.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let cj = y.get(j).map(|e| e.0).unwrap_or(usize::MAX);
        if ci < cj {
            out.push((ci, a.mul(&x[i].1)?));
            i += 1;
        } else if cj < ci {
            out.push((cj, b.mul(&y[j].1)?.neg()?));
            j += 1;
        } else {
            let v = a.mul(&x[i].1)?.sub(&b.mul(&y[j].1)?)?;
            if !v.is_zero() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    Some(out)
}

/// Eliminates column `col` of `row` with pivot row `p` (leading at `col`).
fn eliminate_at<T: EchelonInt>(row: &Row<T>, col: usize, p: &Row<T>) -> Option<Row<T>> {
    let a = &row.iter().find(|e| e.0 == col).unwrap().1;
    let b = &p[0].1;
    let g = a.gcd(b);
    let mut r = combine(row, &b.div_exact(&g), p, &a.div_exact(&g))?;
    make_primitive(&mut r)?;
    Some(r)
}

enum Echelon<T> {
    Inconsistent,
    Reduced(BTreeMap<usize, Row<T>>),
}

/// Reduced echelon form of integer rows with the right-hand side stored at
/// column `rhs_col`. `None` on arithmetic overflow.
fn echelon<T: EchelonInt>(rhs_col: usize, rows: &[Row<BigInt>]) -> Option<Echelon<T>> {
    let mut pivots: BTreeMap<usize, Row<T>> = BTreeMap::new();
    for r in rows {
        let mut row: Row<T> = Vec::with_capacity(r.len());
        for (c, v) in r {
            row.push((*c, T::from_big(v)?));
        }
        while let Some(&(lead, _)) = row.first() {
            match pivots.get(&lead) {
                Some(p) => row = eliminate_at(&row, lead, p)?,
                None => {
                    if lead == rhs_col {
                        return Some(Echelon::Inconsistent);
                    }
                    pivots.insert(lead, row);
                    break;
                }
            }
        }
    }
    let cols: Vec<usize> = pivots.keys().rev().copied().collect();
    for &c in &cols {
        let mut row = pivots.remove(&c).unwrap();
        let targets: Vec<usize> = row.iter().skip(1).map(|e| e.0).filter(|j| pivots.contains_key(j)).collect();
        for j in targets {
            row = eliminate_at(&row, j, &pivots[&j])?;
        }
        pivots.insert(c, row);
    }
    Some(Echelon::Reduced(pivots))
}

/// Solves a sparse system in `ncols` unknowns exactly. Returns `None` when
/// inconsistent.
///
/// Elimination runs with the column order reversed, so the free columns are
/// the earliest possible ones and the natural kernel basis (identity on the
/// free columns) is already the reduced echelon basis in the original order.
pub fn solve_sparse(ncols: usize, rows: &[SparseRow]) -> Option<SparseSolution> {
    let rhs_col = ncols;
    let rev = |c: usize| ncols - 1 - c;
    let mut int_rows: Vec<Row<BigInt>> = Vec::with_capacity(rows.len());
    for r in rows {
        let scale = lcm_of_denoms(r.entries.iter().map(|e| &e.1).chain(core::iter::once(&r.rhs)));
        let mut row: Row<BigInt> = r
            .entries
            .iter()
            .filter(|e| !e.1.is_zero())
            .map(|(c, v)| (rev(*c), (v * Rational::from_integer(scale.clone())).to_integer()))
            .collect();
        row.sort_by_key(|e| e.0);
        debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0), "duplicate column in row");
        if !r.rhs.is_zero() {
            row.push((rhs_col, (&r.rhs * Rational::from_integer(scale)).to_integer()));
        }
        make_primitive(&mut row);
        if !row.is_empty() {
            int_rows.push(row);
        }
    }
    // sparse rows first keeps fill-in down
    int_rows.sort_by_key(|r| r.len());
    let pivots: BTreeMap<usize, Row<BigInt>> = match echelon::<i128>(rhs_col, &int_rows) {
        Some(Echelon::Inconsistent) => return None,
        Some(Echelon::Reduced(p)) => p.into_iter().map(|(c, r)| (c, r.into_iter().map(|(j, v)| (j, v.to_big())).collect())).collect(),
        None => match echelon::<BigInt>(rhs_col, &int_rows).expect("big integers do not overflow") {
            Echelon::Inconsistent => return None,
            Echelon::Reduced(p) => p,
        },
    };
    let mut particular = Vec::new();
    let mut free_deps: BTreeMap<usize, Vec<(usize, Rational)>> = BTreeMap::new();
    for (&c, row) in &pivots {
        let lead = &row[0].1;
        for (j, v) in row.iter().skip(1) {
            let q = Rational::new(v.clone(), lead.clone());
            if *j == rhs_col {
                particular.push((rev(c), q));
            } else {
                free_deps.entry(*j).or_default().push((rev(c), -q));
            }
        }
    }
    particular.sort_by_key(|e| e.0);
    let mut kernel = Vec::new();
    for f in (0..ncols).rev() {
        if pivots.contains_key(&f) {
            continue;
        }
        let mut v = free_deps.remove(&f).unwrap_or_default();
        v.push((rev(f), Rational::one()));
        v.sort_by_key(|e| e.0);
        kernel.push(v);
    }
    Some(SparseSolution { particular, kernel })
}

/// Reduced row echelon form of sparse rational rows, with unit leading
/// entries, sorted by leading column. Zero rows are dropped.
pub fn rref_sparse(rows: Vec<Vec<(usize, Rational)>>) -> Vec<Vec<(usize, Rational)>> {
    let mut maps: Vec<BTreeMap<usize, Rational>> =
        rows.into_iter().map(|r| r.into_iter().filter(|e| !e.1.is_zero()).collect()).collect();
    let mut done: Vec<BTreeMap<usize, Rational>> = Vec::new();
    while !maps.is_empty() {
        // pick the row with the smallest leading column
        let (idx, _) = maps
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.keys().next().map(|c| (i, *c)))
            .min_by_key(|e| e.1)
            .unwrap_or((usize::MAX, 0));
        if idx == usize::MAX {
            break;
        }
        let mut p = maps.swap_remove(idx);
        let (&c, lead) = p.iter().next().unwrap();
        let inv = lead.recip();
        for v in p.values_mut() {
            *v *= &inv;
        }
        for m in maps.iter_mut().chain(done.iter_mut()) {
            if let Some(f) = m.get(&c).cloned() {
                for (j, v) in &p {
                    let e = m.entry(*j).or_insert_with(Rational::zero);
                    *e -= &f * v;
                    if e.is_zero() {
                        m.remove(j);
                    }
                }
            }
        }
        maps.retain(|m| !m.is_empty());
        done.push(p);
    }
    done.sort_by_key(|m| *m.keys().next().unwrap());
    done.into_iter().map(|m| m.into_iter().collect()).collect()
}

/// Dense matrix of rationals, row-major.
pub type Matrix = Vec<Vec<Rational>>;

/// Row-reduces `[a | b]` in place and returns the pivot columns of `a`.
fn reduce(a: &mut Matrix, b: &mut [Vec<Rational>]) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        b.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v *= &inv;
        }
        for v in b[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
                for j in 0..b[i].len() {
                    let t = &f * &b[r][j];
                    b[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

pub fn rank(a: &Matrix) -> usize {
    let mut m = a.clone();
    let mut b = vec![Vec::new(); m.len()];
    reduce(&mut m, &mut b).len()
}

/// Determinant of a square matrix.
pub fn determinant(a: &Matrix) -> Rational {
    let n = a.len();
    let mut m = a.clone();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return Rational::zero() };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= &m[c][c];
        let inv = m[c][c].recip();
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] * &inv;
                for j in c..n {
                    let t = &f * &m[c][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    det
}

/// Solves `a x = b` for square nonsingular `a`; `None` if singular.
pub fn solve_dense(a: &Matrix, b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m = a.clone();
    let mut rhs: Vec<Vec<Rational>> = b.iter().map(|v| vec![v.clone()]).collect();
    let piv = reduce(&mut m, &mut rhs);
    if piv.len() != n {
        return None;
    }
    Some(rhs.into_iter().map(|mut v| v.pop().unwrap()).collect())
}

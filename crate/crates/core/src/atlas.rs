//! Lazily built collection of tower families for one dimension, with
//! lookups by tower index.

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::error::{check_dimension, Result};
use crate::forms::Form;
use crate::harmonic_spaces::{mu, SeedProvider};
use crate::towers::{build_tower_pair, homogeneity_degree, ExceptionalFormDescriptor, Role, Sign, TowerFamily, TowerIndex, TowerRef};

pub struct Atlas<'p> {
    provider: &'p dyn SeedProvider,
    n: usize,
    families: RefCell<BTreeMap<(usize, Sign, u32), Option<Rc<TowerFamily>>>>,
}

impl<'p> Atlas<'p> {
    pub fn new(provider: &'p dyn SeedProvider, n: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(Atlas { provider, n, families: RefCell::new(BTreeMap::new()) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn provider(&self) -> &'p dyn SeedProvider {
        self.provider
    }

    /// Family `(q, sign, sigma)` with at least `floors` floors, or `None` if
    /// both seed spaces are empty.
    pub fn family(&self, q: usize, sign: Sign, sigma: u32, floors: u32) -> Result<Option<Rc<TowerFamily>>> {
        if q > self.n {
            return Ok(None);
        }
        let key = (q, sign, sigma);
        if let Some(f) = self.families.borrow().get(&key) {
            match f {
                None => return Ok(None),
                Some(f) if f.floors() >= floors => return Ok(Some(f.clone())),
                _ => {}
            }
        }
        let mu_d = mu(self.provider, self.n, q, sigma)?;
        let mu_r = if q < self.n { mu(self.provider, self.n, q + 1, sigma)? } else { 0 };
        let fam = if mu_d + mu_r == 0 {
            None
        } else {
            Some(Rc::new(build_tower_pair(self.provider, self.n, q, sign, sigma, floors)?))
        };
        self.families.borrow_mut().insert(key, fam.clone());
        Ok(fam)
    }

    /// The tower form of rank `rank` and the given role, if it exists and
    /// is nonzero.
    pub fn form(&self, role: Role, rank: usize, idx: &TowerIndex) -> Result<Option<Form>> {
        let fq = match role {
            Role::D => rank,
            Role::R => match rank.checked_sub(1) {
                Some(r) => r,
                None => return Ok(None),
            },
        };
        let Some(fam) = self.family(fq, idx.sign, idx.sigma, idx.k)? else {
            return Ok(None);
        };
        Ok(fam.form(role, idx.k, idx.m).filter(|f| !f.is_zero()).cloned())
    }

    pub fn exceptional(&self, d: &ExceptionalFormDescriptor) -> Result<Option<Form>> {
        match d.value {
            None => Ok(None),
            Some(r) => self.tower_ref(&r),
        }
    }

    pub fn tower_ref(&self, r: &TowerRef) -> Result<Option<Form>> {
        self.form(r.role, r.rank, &r.index())
    }

    /// All nonzero tower forms of the given role and rank with height
    /// `<= k_max` and homogeneity degree `h`, both signs.
    pub fn forms_of_degree(&self, role: Role, rank: usize, h: i32, k_max: u32) -> Result<Vec<(TowerIndex, Form)>> {
        let n = self.n as i32;
        let mut out = Vec::new();
        for sign in Sign::BOTH {
            for k in 0..=k_max {
                let sigma = match sign {
                    Sign::Plus => h - k as i32,
                    Sign::Minus => k as i32 - n - h,
                };
                if sigma < 0 {
                    continue;
                }
                debug_assert_eq!(homogeneity_degree(self.n, sign, k, sigma as u32), h);
                let mut m = 1;
                while let Some(f) = self.form_or_gap(role, rank, &TowerIndex::new(sign, k, sigma as u32, m))? {
                    if let Some(f) = f {
                        out.push((TowerIndex::new(sign, k, sigma as u32, m), f));
                    }
                    m += 1;
                }
            }
        }
        Ok(out)
    }

    /// `None` past the end of a floor, `Some(None)` for a stored zero form.
    fn form_or_gap(&self, role: Role, rank: usize, idx: &TowerIndex) -> Result<Option<Option<Form>>> {
        let fq = match role {
            Role::D => rank,
            Role::R => match rank.checked_sub(1) {
                Some(r) => r,
                None => return Ok(None),
            },
        };
        let Some(fam) = self.family(fq, idx.sign, idx.sigma, idx.k)? else {
            return Ok(None);
        };
        Ok(fam.form(role, idx.k, idx.m).map(|f| (!f.is_zero()).then(|| f.clone())))
    }
}

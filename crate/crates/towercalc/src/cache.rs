//! Thread-safe seed cache with optional persistence in a directory
//! (taken from `TOWERCALC_CACHE` by [`SharedSeedCache::from_env`]).

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde_json::json;
use towercalc_core::error::Result;
use towercalc_core::harmonic_spaces::{compute_seed_block, compute_seed_dim, compute_seed_space, SeedBlock, SeedProvider, SeedSpace};

use crate::json::{form_from_json, form_to_json, parse_text, SCHEMA};

type Key = (usize, usize, i32);

#[derive(Default)]
pub struct SharedSeedCache {
    dir: Option<PathBuf>,
    dims: RwLock<HashMap<Key, usize>>,
    spaces: RwLock<HashMap<Key, Arc<SeedSpace>>>,
    blocks: RwLock<HashMap<(usize, usize, i32, u32), Arc<SeedBlock>>>,
}

impl SharedSeedCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        SharedSeedCache { dir: Some(dir.into()), ..Self::default() }
    }

    pub fn from_env() -> Self {
        match std::env::var_os("TOWERCALC_CACHE") {
            Some(d) if !d.is_empty() => Self::with_dir(d),
            _ => Self::in_memory(),
        }
    }

    fn path(&self, stem: &str, key: Key) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{stem}-n{}-q{}-h{}.json", key.0, key.1, key.2)))
    }

    fn write(path: &Path, text: &str) {
        // Best effort: a failed cache write only costs recomputation.
        if let Some(parent) = path.parent() {
            let _ = fs::create_dir_all(parent);
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        if fs::write(&tmp, text).is_ok() {
            let _ = fs::rename(&tmp, path);
        }
    }

    fn load_space(&self, key: Key) -> Option<SeedSpace> {
        let text = fs::read_to_string(self.path("seeds", key)?).ok()?;
        let v = parse_text(&text, "cache").ok()?;
        if v.get("schema")?.as_str()? != SCHEMA {
            return None;
        }
        let basis = v
            .get("basis")?
            .as_array()?
            .iter()
            .map(|f| form_from_json(f, "cache"))
            .collect::<Result<Vec<_>>>()
            .ok()?;
        if basis.iter().any(|f| f.dim() != key.0 || f.grade() != key.1) {
            return None;
        }
        Some(SeedSpace::from_basis(key.0, key.1, key.2, basis))
    }

    fn store_space(&self, s: &SeedSpace) {
        if let Some(p) = self.path("seeds", (s.n, s.q, s.h)) {
            let v = json!({"schema": SCHEMA, "kind": "seeds", "basis": s.basis.iter().map(form_to_json).collect::<Vec<_>>()});
            Self::write(&p, &v.to_string());
        }
    }

    fn load_dim(&self, key: Key) -> Option<usize> {
        let text = fs::read_to_string(self.path("dim", key)?).ok()?;
        let v = parse_text(&text, "cache").ok()?;
        (v.get("schema")?.as_str()? == SCHEMA).then_some(())?;
        v.get("dim")?.as_u64().map(|d| d as usize)
    }

    fn store_dim(&self, key: Key, d: usize) {
        if let Some(p) = self.path("dim", key) {
            Self::write(&p, &json!({"schema": SCHEMA, "kind": "dim", "dim": d}).to_string());
        }
    }

    fn cached_space(&self, key: Key) -> Option<Arc<SeedSpace>> {
        if let Some(s) = self.spaces.read().unwrap().get(&key) {
            return Some(s.clone());
        }
        let s = Arc::new(self.load_space(key)?);
        self.spaces.write().unwrap().insert(key, s.clone());
        Some(s)
    }
}

impl SeedProvider for SharedSeedCache {
    fn seed_space(&self, n: usize, q: usize, h: i32) -> Result<Arc<SeedSpace>> {
        let key = (n, q, h);
        if let Some(s) = self.cached_space(key) {
            return Ok(s);
        }
        let s = Arc::new(compute_seed_space(n, q, h)?);
        self.store_space(&s);
        self.spaces.write().unwrap().insert(key, s.clone());
        Ok(s)
    }

    fn seed_block(&self, n: usize, q: usize, h: i32, block: u32) -> Result<Arc<SeedBlock>> {
        let bkey = (n, q, h, block);
        if let Some(b) = self.blocks.read().unwrap().get(&bkey) {
            return Ok(b.clone());
        }
        let b = match self.cached_space((n, q, h)) {
            Some(s) => s.block(block),
            None => compute_seed_block(n, q, h, block)?,
        };
        let b = Arc::new(b);
        self.blocks.write().unwrap().insert(bkey, b.clone());
        Ok(b)
    }

    fn seed_dim(&self, n: usize, q: usize, h: i32) -> Result<usize> {
        let key = (n, q, h);
        if let Some(d) = self.dims.read().unwrap().get(&key) {
            return Ok(*d);
        }
        if let Some(s) = self.spaces.read().unwrap().get(&key) {
            return Ok(s.dim());
        }
        let d = match self.load_dim(key) {
            Some(d) => d,
            None => {
                let d = compute_seed_dim(n, q, h)?;
                self.store_dim(key, d);
                d
            }
        };
        self.dims.write().unwrap().insert(key, d);
        Ok(d)
    }
}

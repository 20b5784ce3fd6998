//! Exact exterior calculus on odd-dimensional Euclidean space with
//! coefficients in `Q[x_1..x_N][r, 1/r] / (r^2 - |x|^2)`, together with the
//! homogeneous static Maxwell tower forms built on top of it.
//!
//! Everything here is `no_std` (with `alloc`); file formats, caching and the
//! command line live in the `towercalc` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod scalar;
pub mod poly;
pub mod ring;
pub mod linalg;
pub mod forms;
pub mod harmonic_spaces;
mod ansatz;
pub mod towers;
pub mod atlas;
pub mod index_algebra;
pub mod expansion;
pub mod static_operator;

pub use error::{Error, Result};
pub use forms::{Blade, Form, HomogeneityDecomposition};
pub use harmonic_spaces::{SeedCache, SeedProvider, SeedSpace};
pub use poly::{Monomial, Poly, MAX_DIM};
pub use ring::{HomogeneousPart, RadialRingElement};
pub use scalar::Rational;
pub use towers::{Role, Sign, TowerFamily, TowerIndex};

pub use num_bigint::BigInt;

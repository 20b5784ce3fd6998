//! File formats, a shared seed cache and the command-line front end for
//! `towercalc-core`.

pub mod cache;
pub mod cli;
pub mod json;

//! Modularity of partitions of random geometric graphs and its continuum
//! limit: sampling, graph construction, the modularity decomposition,
//! continuum functionals, optimizers and one-dimensional transport.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod continuum;
pub mod domain;
pub mod error;
pub mod functional;
pub mod geograph;
pub mod kernel;
pub mod optimizer;
pub mod quadrature;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};

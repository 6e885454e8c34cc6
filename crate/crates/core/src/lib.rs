//! Large-deviation tail bounds for sums of bounded vector-valued functions
//! along finite reversible Markov chains.
//!
//! - [`chain`]: reversible chains, builders, the spectrum of `S = D P D⁻¹`.
//! - [`observable`]: vector observables and their mean, sup-norm and
//!   principal variance.
//! - [`bounds`]: the dimension-free-rate bound, its comparators, sample-size
//!   inversion and the reference comparison table.
//! - [`perturbation`]: the tilted kernel `P(u)` and numerical checks of the
//!   eigenvalue estimates behind the bound.
//! - [`simulator`]: seeded Monte Carlo tail and moment-generating estimates.
//! - [`cli`]: the `revchain` command-line front end.

// `!(x > t)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chain;
pub mod cli;
pub mod error;
pub mod format;
pub mod linalg;
pub mod observable;
pub mod perturbation;
pub mod simulator;
pub mod verify;

pub use error::{Error, Result};

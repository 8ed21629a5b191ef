//! Hyperparameter optimization through hypernetworks.
//!
//! A hypernetwork `θ_φ(λ)` is trained to output approximately optimal
//! elementary weights for any hyperparameter `λ`; the hyperparameters are then
//! tuned by differentiating the validation loss through it. The crate also
//! carries the baselines it is compared against: plain cross-validation,
//! random search, a Gaussian-process surrogate and unrolled differentiation.
//!
//! `no_std` with `alloc`; file formats and the command line live in the
//! `hypertrain` crate.

#![no_std]
// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algorithms;
pub mod baselines;
pub mod data;
pub mod diff;
pub mod error;
pub mod hypernets;
pub mod linalg;
pub mod models;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};

//! Unrolled proximal gradient descent networks for linear Gaussian inverse
//! problems, with a spike-and-slab posterior over the learned proximal map.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod fnn;
pub mod forward;
pub mod gdn;
pub mod harness;
pub mod numerics;
pub mod pgd;
pub mod regularizer;
pub mod sampler;

pub use error::{Error, Result};

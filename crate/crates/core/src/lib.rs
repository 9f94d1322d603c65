//! Joint latent ranking embedding for multi-label zero-shot recognition.
//!
//! Instances are sequences of `T` segment feature vectors carrying a set of
//! labels. A recurrent visual model maps every segment into a shared
//! embedding space, a feed-forward semantic model maps every label's
//! semantic vector into the same space, and relatedness is the segment-pooled
//! dot product between the two. Both models are trained alternately with
//! regularized pairwise rank losses, and unseen labels are recognized by
//! embedding their semantic vectors with the trained semantic model.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line front end live in the `mlzsr` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod numerics;
pub mod scoring;
pub mod train;

pub use error::{Error, Result};
pub use numerics::{Matrix, RngState};

//! Heterogeneous-pair face verification.
//!
//! A base embedding network is trained with AM-Softmax on labeled source
//! data, cloned into two sibling networks (one per image domain), and
//! fine-tuned on ID/selfie pairs with the max-margin pairwise score (MPS)
//! loss. The [`eval`] module implements the verification protocol (cosine
//! scoring, VR@FAR, ROC, k-fold cross-validation with multi-selfie fusion).
//!
//! The crate is `no_std` and needs only `alloc`. File formats and the CLI
//! live in the `hetverify` crate.

#![no_std]

extern crate alloc;

pub mod bench;
pub mod data;
pub mod error;
pub mod eval;
pub mod losses;
pub mod model;
pub mod numerics;
pub mod optim;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};

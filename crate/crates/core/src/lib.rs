//! Desk-scale laboratory for sparse subnetworks chosen with distilled data.
//!
//! The crate finds sparsity masks by iterative magnitude pruning with
//! rewinding to initialization, either on real data ([`pruning::imp`]) or on
//! a small distilled set ([`pruning::distilled_prune`]), and then measures how
//! the resulting subnetworks train:
//!
//! - [`stability`]: train one masked init under two data orderings and
//!   measure the loss barrier along the straight line between the results.
//! - [`landscape`]: loss on a 2D plane spanned by three trained models.
//! - [`hessian`]: statistics of the Hessian diagonal over surviving weights.
//!
//! [`harness`] strings the stages together, persists checkpoints, and writes
//! CSV/SVG reports. Runnable walkthroughs live in the crate's `examples/`.
//!
//! Everything is deterministic: every random draw comes from a seeded
//! ChaCha8 stream (see [`rng`]), and repeated runs are bitwise identical.

pub mod data;
pub mod distill;
mod error;
pub mod harness;
pub mod hessian;
pub mod landscape;
pub mod nn;
pub mod pruning;
pub mod rng;
pub mod stability;

pub use error::{Error, Result};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

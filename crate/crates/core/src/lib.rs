//! Counting, random generation and weight fitting for decomposable
//! combinatorial specifications.
//!
//! A specification is a grammar of classes built from atoms, ε, union,
//! product, sequence and pointing. This crate builds exact weighted
//! counting tables, samples structures of a given size under weighted or
//! exact-occurrence distributions, computes expected atom frequencies,
//! and searches for weights that hit prescribed frequencies, either at a
//! fixed size or asymptotically for right-linear grammars.

pub mod asympt;
pub mod counting;
pub mod error;
pub mod exact;
pub mod fit;
pub mod fixtures;
pub mod freq;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod spec;
pub mod weights;

pub use error::{Error, ErrorKind, Result};
pub use rng::RandomSource;
pub use weights::Weights;

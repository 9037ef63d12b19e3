//! Treatment-effect estimation toolkit built around two ideas:
//!
//! 1. A two-phase representation learner. Phase one shapes a representation
//!    of the pre-treatment covariates (without a designated *anchor*
//!    covariate) by gradient matching across domains synthesized from the
//!    anchor. Phase two trains a counterfactual-regression network on top of
//!    that representation, balancing treated and control groups with an
//!    integral probability metric.
//! 2. A linear-Gaussian structural equation model (SEM) laboratory with exact
//!    covariance algebra, do-interventions, d-separation and backdoor
//!    oracles, and empirical validation harnesses for the identification
//!    claims the learner relies on.
//!
//! The crate is `no_std` (with `alloc`); all transcendental math routes
//! through `libm` so results are bit-identical across platforms. Everything
//! is deterministic given explicit seeds. File formats, CSV handling and the
//! command-line front end live in the companion `cfrlab` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod domains;
mod error;
pub mod ipm;
pub mod metrics;
pub mod numerics;
pub mod sem;
pub mod trainer;

pub use error::{Error, Result};

/// Derives an independent sub-seed from a base seed and a stream tag.
///
/// SplitMix64 finalizer over the combined words; used everywhere a component
/// needs its own deterministic RNG stream (per-row draws, per-phase RNGs).
pub fn subseed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

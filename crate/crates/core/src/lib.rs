//! # bosonic-wiretap
//!
//! Desk-scale numerics for the lossy bosonic compound wiretap channel, where
//! a sender reaches a receiver through a pure-loss channel with amplitude
//! transmission `tau` and an eavesdropper through one with amplitude
//! transmission `eta`, the pair `(tau, eta)` being known only to lie in a set.
//!
//! - [`fock`]: coherent states and density operators in a truncated photon-number
//!   basis, entropies, trace distances, relative entropy.
//! - [`channel`]: the loss channel, compound state sets and their finite nets.
//! - [`capacity`]: Gordon function, binary entropy, the capacity formulas with and
//!   without state information, entropy continuity bound.
//! - [`gaussian`]: finite coherent ensembles approximating the complex-Gaussian input.
//! - [`typicality`]: strongly typical sets, pruned distributions and typical projectors.
//! - [`covering`]: Monte Carlo check of the covering concentration bound.
//! - [`wiretap`]: random wiretap codebooks, square-root decoding and Holevo leakage.
//! - [`verify`]: the invariant suites behind the `verify` command.
//!
//! All entropies are in bits.

#![forbid(unsafe_code)]

pub mod capacity;
pub mod channel;
pub mod covering;
pub mod ensemble;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod gram;
pub mod rng;
pub mod typicality;
pub mod verify;
pub mod wiretap;

pub use error::{Error, Result};
